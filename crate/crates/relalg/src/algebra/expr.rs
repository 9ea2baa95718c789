//! Scalar expressions used by selections, maps and join predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::attribute::Attribute;
use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScalarExpr {
    Attr(Attribute),
    Literal(Value),
    Arith(ArithOp, Box<ScalarExpr>, Box<ScalarExpr>),
    Cmp(CmpOp, Box<ScalarExpr>, Box<ScalarExpr>),
    /// `<=>`: equality that treats NULL as an ordinary value, so
    /// `NULL <=> NULL` is TRUE. Used for machine-generated join conditions.
    NullSafeEq(Box<ScalarExpr>, Box<ScalarExpr>),
    And(Box<ScalarExpr>, Box<ScalarExpr>),
    Or(Box<ScalarExpr>, Box<ScalarExpr>),
    Not(Box<ScalarExpr>),
    IsNull(Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn attr(a: Attribute) -> Self {
        ScalarExpr::Attr(a)
    }

    pub fn lit(v: impl Into<Value>) -> Self {
        ScalarExpr::Literal(v.into())
    }

    pub fn arith(op: ArithOp, l: ScalarExpr, r: ScalarExpr) -> Self {
        ScalarExpr::Arith(op, Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(l: ScalarExpr, r: ScalarExpr) -> Self {
        Self::arith(ArithOp::Add, l, r)
    }

    pub fn cmp(op: CmpOp, l: ScalarExpr, r: ScalarExpr) -> Self {
        ScalarExpr::Cmp(op, Box::new(l), Box::new(r))
    }

    pub fn eq(l: ScalarExpr, r: ScalarExpr) -> Self {
        Self::cmp(CmpOp::Eq, l, r)
    }

    pub fn null_safe_eq(l: ScalarExpr, r: ScalarExpr) -> Self {
        ScalarExpr::NullSafeEq(Box::new(l), Box::new(r))
    }

    pub fn and(l: ScalarExpr, r: ScalarExpr) -> Self {
        ScalarExpr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: ScalarExpr, r: ScalarExpr) -> Self {
        ScalarExpr::Or(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: ScalarExpr) -> Self {
        ScalarExpr::Not(Box::new(e))
    }

    pub fn is_null(e: ScalarExpr) -> Self {
        ScalarExpr::IsNull(Box::new(e))
    }

    /// Conjunction of all expressions in the iterator; TRUE when empty.
    pub fn and_all(exprs: impl IntoIterator<Item = ScalarExpr>) -> Self {
        let mut iter = exprs.into_iter();
        match iter.next() {
            None => ScalarExpr::lit(true),
            Some(first) => iter.fold(first, ScalarExpr::and),
        }
    }

    /// The free variables `F(e)`: every attribute referenced in the tree.
    pub fn free_vars(&self) -> BTreeSet<Attribute> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut out);
        out
    }

    pub(crate) fn collect_free_vars(&self, out: &mut BTreeSet<Attribute>) {
        match self {
            ScalarExpr::Attr(a) => {
                out.insert(a.clone());
            }
            ScalarExpr::Literal(_) => {}
            ScalarExpr::Arith(_, l, r)
            | ScalarExpr::Cmp(_, l, r)
            | ScalarExpr::NullSafeEq(l, r)
            | ScalarExpr::And(l, r)
            | ScalarExpr::Or(l, r) => {
                l.collect_free_vars(out);
                r.collect_free_vars(out);
            }
            ScalarExpr::Not(e) | ScalarExpr::IsNull(e) => e.collect_free_vars(out),
        }
    }

    /// Replaces every reference to a key of `map` with the mapped attribute.
    pub fn substitute(&self, map: &BTreeMap<Attribute, Attribute>) -> ScalarExpr {
        match self {
            ScalarExpr::Attr(a) => match map.get(a) {
                Some(to) => ScalarExpr::Attr(to.clone()),
                None => self.clone(),
            },
            ScalarExpr::Literal(_) => self.clone(),
            ScalarExpr::Arith(op, l, r) => {
                ScalarExpr::arith(*op, l.substitute(map), r.substitute(map))
            }
            ScalarExpr::Cmp(op, l, r) => ScalarExpr::cmp(*op, l.substitute(map), r.substitute(map)),
            ScalarExpr::NullSafeEq(l, r) => {
                ScalarExpr::null_safe_eq(l.substitute(map), r.substitute(map))
            }
            ScalarExpr::And(l, r) => ScalarExpr::and(l.substitute(map), r.substitute(map)),
            ScalarExpr::Or(l, r) => ScalarExpr::or(l.substitute(map), r.substitute(map)),
            ScalarExpr::Not(e) => ScalarExpr::not(e.substitute(map)),
            ScalarExpr::IsNull(e) => ScalarExpr::is_null(e.substitute(map)),
        }
    }

    /// Splits a tree of top-level ANDs into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&ScalarExpr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a ScalarExpr, out: &mut Vec<&'a ScalarExpr>) {
            match e {
                ScalarExpr::And(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// True for the literal TRUE predicate.
    pub fn is_true_literal(&self) -> bool {
        matches!(self, ScalarExpr::Literal(Value::Bool(true)))
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Attr(a) => write!(f, "{a}"),
            ScalarExpr::Literal(Value::Bool(b)) => write!(f, "{b}"),
            ScalarExpr::Literal(v) => write!(f, "{v}"),
            ScalarExpr::Arith(op, l, r) => {
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                };
                write!(f, "({sym} {l} {r})")
            }
            ScalarExpr::Cmp(op, l, r) => {
                let sym = match op {
                    CmpOp::Eq => "=",
                    CmpOp::Ne => "!=",
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                };
                write!(f, "({sym} {l} {r})")
            }
            ScalarExpr::NullSafeEq(l, r) => write!(f, "(<=> {l} {r})"),
            ScalarExpr::And(l, r) => write!(f, "(and {l} {r})"),
            ScalarExpr::Or(l, r) => write!(f, "(or {l} {r})"),
            ScalarExpr::Not(e) => write!(f, "(not {e})"),
            ScalarExpr::IsNull(e) => write!(f, "(isnull {e})"),
        }
    }
}
