//! The reference evaluator: executes any valid plan against a catalog under
//! an outer binding environment, following the characteristic-function
//! definitions of the operators node by node. It is the correctness oracle
//! for every rewrite in this crate, so it favors literal semantics over
//! speed; dependent joins really do re-evaluate their right subtree once per
//! left tuple.

mod agg;
mod scalar;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::algebra::{
    analyze, Aggregate, Attribute, Plan, Relation, RelationError, ScalarExpr, SchemaError, Tuple,
    TupleError, Value,
};

pub use agg::aggregate;
pub use scalar::{eval_predicate, eval_scalar, Truth};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("table {table} stored schema does not match scan attributes")]
    TableSchemaMismatch { table: String },
    #[error("unbound attribute {0}")]
    UnboundAttribute(Attribute),
    #[error("type error: {0}")]
    Type(String),
    #[error("predicate evaluated to non-boolean {0}")]
    NotBoolean(&'static str),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Tuple(#[from] TupleError),
    #[error(transparent)]
    Relation(#[from] RelationError),
}

/// Named base tables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    tables: BTreeMap<String, Relation>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    pub fn add_table(&mut self, name: impl Into<String>, rel: Relation) {
        self.tables.insert(name.into(), rel);
    }

    pub fn table(&self, name: &str) -> Result<&Relation, EvalError> {
        self.tables.get(name).ok_or_else(|| EvalError::UnknownTable(name.to_owned()))
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.tables.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Relation)> {
        self.tables.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// Outer bindings for evaluating expressions with free variables: the
/// attributes made "globally available" while a dependent join re-evaluates
/// its right side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BindEnv {
    bound: Tuple,
}

impl BindEnv {
    pub fn empty() -> Self {
        BindEnv::default()
    }

    pub fn from_tuple(bound: Tuple) -> Self {
        BindEnv { bound }
    }

    pub fn bound(&self) -> &Tuple {
        &self.bound
    }

    pub fn attrs(&self) -> BTreeSet<Attribute> {
        self.bound.attr_set()
    }

    /// Extends the environment; errors if a binding would collide with an
    /// attribute produced inside the subtree under evaluation.
    pub fn extended(&self, extra: &Tuple) -> Result<BindEnv, EvalError> {
        Ok(BindEnv { bound: self.bound.concat(extra)? })
    }
}

/// Evaluates a plan to a relation. `env` must bind every free variable of
/// the plan; pass [`BindEnv::empty`] for closed plans.
pub fn evaluate(plan: &Plan, cat: &Catalog, env: &BindEnv) -> Result<Relation, EvalError> {
    let info = analyze(plan)?;
    if let Some(missing) = info.free.difference(&env.attrs()).next() {
        return Err(EvalError::UnboundAttribute(missing.clone()));
    }
    eval_node(plan, cat, env)
}

fn eval_node(plan: &Plan, cat: &Catalog, env: &BindEnv) -> Result<Relation, EvalError> {
    match plan {
        Plan::Scan { table, attrs } => {
            let rel = cat.table(table)?;
            let want: BTreeSet<Attribute> = attrs.iter().cloned().collect();
            if rel.schema() != &want {
                return Err(EvalError::TableSchemaMismatch { table: table.clone() });
            }
            Ok(rel.clone())
        }
        Plan::Select { pred, child } => {
            let rel = eval_node(child, cat, env)?;
            rel_select(pred, &rel, env)
        }
        Plan::Map { attr, expr, child } => {
            let rel = eval_node(child, cat, env)?;
            rel_map(attr, expr, &rel, env)
        }
        Plan::Project { attrs, child } => {
            let rel = eval_node(child, cat, env)?;
            rel_project_plus(attrs, &rel)
        }
        Plan::ProjectDistinct { attrs, child } => {
            let rel = eval_node(child, cat, env)?;
            rel_project_distinct(attrs, &rel)
        }
        Plan::Rename { new, old, child } => {
            // By definition a rename is a map followed by a duplicate
            // preserving projection that drops the old column.
            let rel = eval_node(child, cat, env)?;
            let mapped = rel_map(new, &ScalarExpr::attr(old.clone()), &rel, env)?;
            let keep: Vec<Attribute> =
                mapped.schema().iter().filter(|a| *a != old).cloned().collect();
            rel_project_plus(&keep, &mapped)
        }
        Plan::Union { left, right } => {
            let l = eval_node(left, cat, env)?;
            let r = eval_node(right, cat, env)?;
            rel_union(&l, &r)
        }
        Plan::Intersect { left, right } => {
            let l = eval_node(left, cat, env)?;
            let r = eval_node(right, cat, env)?;
            Ok(rel_intersect(&l, &r))
        }
        Plan::Except { left, right } => {
            let l = eval_node(left, cat, env)?;
            let r = eval_node(right, cat, env)?;
            Ok(rel_except(&l, &r))
        }
        Plan::Cross { left, right } => {
            let l = eval_node(left, cat, env)?;
            let r = eval_node(right, cat, env)?;
            rel_cross(&l, &r)
        }
        Plan::Join { pred, left, right } => {
            let l = eval_node(left, cat, env)?;
            let r = eval_node(right, cat, env)?;
            rel_join(pred, &l, &r, env)
        }
        Plan::DependentJoin { pred, left, right } => {
            let l = eval_node(left, cat, env)?;
            eval_dependent_join(pred, &l, right, cat, env)
        }
        Plan::SemiJoin { pred, left, right } => {
            let l = eval_node(left, cat, env)?;
            let r = eval_node(right, cat, env)?;
            rel_semi_join(pred, &l, &r, env)
        }
        Plan::AntiJoin { pred, left, right } => {
            let l = eval_node(left, cat, env)?;
            let r = eval_node(right, cat, env)?;
            rel_anti_join(pred, &l, &r, env)
        }
        Plan::OuterJoin { pred, left, right } => {
            let l = eval_node(left, cat, env)?;
            let r = eval_node(right, cat, env)?;
            let matched = rel_join(pred, &l, &r, env)?;
            let unmatched = rel_anti_join(pred, &l, &r, env)?;
            let padded = rel_nullpad(r.schema(), &unmatched)?;
            rel_union(&matched, &padded)
        }
        Plan::NullPad { attrs, child } => {
            let rel = eval_node(child, cat, env)?;
            let want: BTreeSet<Attribute> = attrs.iter().cloned().collect();
            rel_nullpad(&want, &rel)
        }
        Plan::GroupBy { keys, aggs, child } => {
            let rel = eval_node(child, cat, env)?;
            rel_group_by(keys, aggs, &rel)
        }
    }
}

/// The dependent join: for each left tuple, re-evaluate the right subtree
/// with that tuple's relevant attributes bound, concatenate, and filter.
fn eval_dependent_join(
    pred: &ScalarExpr,
    left: &Relation,
    right: &Plan,
    cat: &Catalog,
    env: &BindEnv,
) -> Result<Relation, EvalError> {
    let right_info = analyze(right)?;
    let bind_attrs: Vec<Attribute> = right_info
        .free
        .iter()
        .filter(|a| left.schema().contains(a))
        .cloned()
        .collect();

    let mut schema: BTreeSet<Attribute> = left.schema().clone();
    schema.extend(right_info.schema.iter().cloned());
    let mut out = Relation::empty(schema);

    for (l, nl) in left.iter() {
        let binding = l.restrict(&bind_attrs)?;
        let inner_env = env.extended(&binding)?;
        let rrel = eval_node(right, cat, &inner_env)?;
        for (r, nr) in rrel.iter() {
            let joined = l.concat(r)?;
            let ctx = env.bound().concat(&joined)?;
            if eval_predicate(pred, &ctx)?.is_true() {
                out.insert(joined, nl * nr)?;
            }
        }
    }
    Ok(out)
}

fn rel_select(pred: &ScalarExpr, rel: &Relation, env: &BindEnv) -> Result<Relation, EvalError> {
    let mut out = Relation::empty(rel.schema().clone());
    for (t, n) in rel.iter() {
        let ctx = env.bound().concat(t)?;
        if eval_predicate(pred, &ctx)?.is_true() {
            out.insert(t.clone(), n)?;
        }
    }
    Ok(out)
}

fn rel_map(
    attr: &Attribute,
    expr: &ScalarExpr,
    rel: &Relation,
    env: &BindEnv,
) -> Result<Relation, EvalError> {
    let mut schema = rel.schema().clone();
    schema.insert(attr.clone());
    let mut out = Relation::empty(schema);
    for (t, n) in rel.iter() {
        let ctx = env.bound().concat(t)?;
        let v = eval_scalar(expr, &ctx)?;
        out.insert(t.concat(&Tuple::single(attr.clone(), v))?, n)?;
    }
    Ok(out)
}

/// Duplicate-preserving projection: counts of tuples that agree on `attrs`
/// are added up.
fn rel_project_plus(attrs: &[Attribute], rel: &Relation) -> Result<Relation, EvalError> {
    let mut out = Relation::empty(attrs.iter().cloned());
    for (t, n) in rel.iter() {
        out.insert(t.restrict(attrs)?, n)?;
    }
    Ok(out)
}

/// Duplicate-eliminating projection: the result is a set.
fn rel_project_distinct(attrs: &[Attribute], rel: &Relation) -> Result<Relation, EvalError> {
    let mut out = Relation::empty(attrs.iter().cloned());
    for (t, _) in rel.iter() {
        let key = t.restrict(attrs)?;
        if out.count(&key) == 0 {
            out.insert(key, 1)?;
        }
    }
    Ok(out)
}

/// Union adds multiplicities.
fn rel_union(l: &Relation, r: &Relation) -> Result<Relation, EvalError> {
    let mut out = l.clone();
    for (t, n) in r.iter() {
        out.insert(t.clone(), n)?;
    }
    Ok(out)
}

/// Intersection takes the minimum multiplicity.
fn rel_intersect(l: &Relation, r: &Relation) -> Relation {
    let mut out = Relation::empty(l.schema().clone());
    for (t, n) in l.iter() {
        let m = n.min(r.count(t));
        if m > 0 {
            out.insert(t.clone(), m).expect("schema preserved");
        }
    }
    out
}

/// Difference subtracts multiplicities, clamping at zero.
fn rel_except(l: &Relation, r: &Relation) -> Relation {
    let mut out = Relation::empty(l.schema().clone());
    for (t, n) in l.iter() {
        let m = n.saturating_sub(r.count(t));
        if m > 0 {
            out.insert(t.clone(), m).expect("schema preserved");
        }
    }
    out
}

/// Cross product: concatenated tuples with multiplied counts.
fn rel_cross(l: &Relation, r: &Relation) -> Result<Relation, EvalError> {
    let mut schema = l.schema().clone();
    schema.extend(r.schema().iter().cloned());
    let mut out = Relation::empty(schema);
    for (lt, ln) in l.iter() {
        for (rt, rn) in r.iter() {
            out.insert(lt.concat(rt)?, ln * rn)?;
        }
    }
    Ok(out)
}

/// Join: a selection over the cross product.
fn rel_join(
    pred: &ScalarExpr,
    l: &Relation,
    r: &Relation,
    env: &BindEnv,
) -> Result<Relation, EvalError> {
    rel_select(pred, &rel_cross(l, r)?, env)
}

/// Semi join: `R1 ∩ Π⁺_{A(R1)}(R1 ⋈_p R2)`.
fn rel_semi_join(
    pred: &ScalarExpr,
    l: &Relation,
    r: &Relation,
    env: &BindEnv,
) -> Result<Relation, EvalError> {
    let joined = rel_join(pred, l, r, env)?;
    let keep: Vec<Attribute> = l.schema().iter().cloned().collect();
    Ok(rel_intersect(l, &rel_project_plus(&keep, &joined)?))
}

/// Anti join: `R1 ∖ (R1 ⋉_p R2)`.
fn rel_anti_join(
    pred: &ScalarExpr,
    l: &Relation,
    r: &Relation,
    env: &BindEnv,
) -> Result<Relation, EvalError> {
    Ok(rel_except(l, &rel_semi_join(pred, l, r, env)?))
}

/// Adds each attribute of `attrs` missing from the input as NULL, in
/// ascending attribute-id order.
fn rel_nullpad(attrs: &BTreeSet<Attribute>, rel: &Relation) -> Result<Relation, EvalError> {
    let missing: Vec<Attribute> =
        attrs.iter().filter(|a| !rel.schema().contains(a)).cloned().collect();
    let mut schema = rel.schema().clone();
    schema.extend(missing.iter().cloned());
    let mut out = Relation::empty(schema);
    for (t, n) in rel.iter() {
        let mut padded = t.clone();
        for a in &missing {
            padded = padded.concat(&Tuple::single(a.clone(), Value::Null))?;
        }
        out.insert(padded, n)?;
    }
    Ok(out)
}

/// Group-by: groups are formed by the key attributes with NULL treated as an
/// ordinary value (NULL keys group together); the output is a set carrying
/// one row per group.
fn rel_group_by(
    keys: &[Attribute],
    aggs: &[Aggregate],
    rel: &Relation,
) -> Result<Relation, EvalError> {
    let mut groups: BTreeMap<Tuple, Relation> = BTreeMap::new();
    for (t, n) in rel.iter() {
        let key = t.restrict(keys)?;
        groups
            .entry(key)
            .or_insert_with(|| Relation::empty(rel.schema().clone()))
            .insert(t.clone(), n)?;
    }

    let mut schema: BTreeSet<Attribute> = keys.iter().cloned().collect();
    schema.extend(aggs.iter().map(|a| a.output.clone()));
    let mut out = Relation::empty(schema);
    for (key, group) in groups {
        let mut row = key;
        for agg in aggs {
            let v = aggregate(&agg.func, &group)?;
            row = row.concat(&Tuple::single(agg.output.clone(), v))?;
        }
        out.insert(row, 1)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{AggFn, CmpOp};

    fn attr(base: &str) -> Attribute {
        Attribute::fresh(base)
    }

    fn single_col(a: &Attribute, rows: &[(Value, u64)]) -> Relation {
        let mut r = Relation::empty([a.clone()]);
        for (v, n) in rows {
            r.insert(Tuple::single(a.clone(), v.clone()), *n).unwrap();
        }
        r
    }

    #[test]
    fn union_adds_multiplicities() {
        let a = attr("a");
        let mut cat = Catalog::new();
        cat.add_table("R1", single_col(&a, &[(Value::Int(1), 2)]));
        cat.add_table("R2", single_col(&a, &[(Value::Int(1), 1)]));
        let p = Plan::union(Plan::scan("R1", [a.clone()]), Plan::scan("R2", [a.clone()]));
        let out = evaluate(&p, &cat, &BindEnv::empty()).unwrap();
        assert_eq!(out.count(&Tuple::single(a, Value::Int(1))), 3);
    }

    #[test]
    fn empty_scan_evaluates_to_empty() {
        let a = attr("a");
        let mut cat = Catalog::new();
        cat.add_table("R", Relation::empty([a.clone()]));
        let out = evaluate(&Plan::scan("R", [a]), &cat, &BindEnv::empty()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn dependent_join_counts_are_products() {
        // R1 = {[x:1],[x:2]}, S = {[y:1]x2}, right = sigma_{y=x}(S)
        // => {[x:1,y:1]x2}
        let x = attr("x");
        let y = attr("y");
        let mut cat = Catalog::new();
        cat.add_table("R1", single_col(&x, &[(Value::Int(1), 1), (Value::Int(2), 1)]));
        cat.add_table("S", single_col(&y, &[(Value::Int(1), 2)]));
        let p = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::scan("R1", [x.clone()]),
            Plan::select(
                ScalarExpr::eq(ScalarExpr::attr(y.clone()), ScalarExpr::attr(x.clone())),
                Plan::scan("S", [y.clone()]),
            ),
        );
        let out = evaluate(&p, &cat, &BindEnv::empty()).unwrap();
        assert_eq!(out.total(), 2);
        let expect =
            Tuple::from_pairs([(x, Value::Int(1)), (y, Value::Int(1))]).unwrap();
        assert_eq!(out.count(&expect), 2);
    }

    #[test]
    fn unbound_free_variable_is_an_error() {
        let x = attr("x");
        let y = attr("y");
        let mut cat = Catalog::new();
        cat.add_table("S", single_col(&y, &[(Value::Int(1), 1)]));
        let p = Plan::select(
            ScalarExpr::eq(ScalarExpr::attr(x.clone()), ScalarExpr::attr(y.clone())),
            Plan::scan("S", [y]),
        );
        assert!(matches!(
            evaluate(&p, &cat, &BindEnv::empty()),
            Err(EvalError::UnboundAttribute(a)) if a == x
        ));
    }

    #[test]
    fn project_conserves_total_multiplicity() {
        let a = attr("a");
        let b = attr("b");
        let mut rel = Relation::empty([a.clone(), b.clone()]);
        for (va, vb, n) in [(1, 1, 2), (1, 2, 3), (2, 2, 1)] {
            rel.insert(
                Tuple::from_pairs([(a.clone(), Value::Int(va)), (b.clone(), Value::Int(vb))])
                    .unwrap(),
                n,
            )
            .unwrap();
        }
        let mut cat = Catalog::new();
        cat.add_table("R", rel.clone());
        let p = Plan::project([a.clone()], Plan::scan("R", [a.clone(), b.clone()]));
        let out = evaluate(&p, &cat, &BindEnv::empty()).unwrap();
        assert_eq!(out.total(), rel.total());
        assert_eq!(out.count(&Tuple::single(a.clone(), Value::Int(1))), 5);

        let pd = Plan::project_distinct([a.clone()], Plan::scan("R", [a, b]));
        let outd = evaluate(&pd, &cat, &BindEnv::empty()).unwrap();
        assert!(outd.is_duplicate_free());
        assert_eq!(outd.distinct_len(), 2);
    }

    #[test]
    fn outer_join_pads_unmatched_left_rows() {
        let a = attr("a");
        let b = attr("b");
        let mut cat = Catalog::new();
        cat.add_table("L", single_col(&a, &[(Value::Int(1), 1), (Value::Int(2), 1)]));
        cat.add_table("R", single_col(&b, &[(Value::Int(1), 1)]));
        let p = Plan::outer_join(
            ScalarExpr::eq(ScalarExpr::attr(a.clone()), ScalarExpr::attr(b.clone())),
            Plan::scan("L", [a.clone()]),
            Plan::scan("R", [b.clone()]),
        );
        let out = evaluate(&p, &cat, &BindEnv::empty()).unwrap();
        assert_eq!(out.total(), 2);
        let padded =
            Tuple::from_pairs([(a, Value::Int(2)), (b, Value::Null)]).unwrap();
        assert_eq!(out.count(&padded), 1);
    }

    #[test]
    fn group_by_groups_nulls_together_and_is_a_set() {
        let a = attr("a");
        let c = attr("c");
        let rel = single_col(&a, &[(Value::Null, 2), (Value::Int(1), 3)]);
        let mut cat = Catalog::new();
        cat.add_table("R", rel);
        let p = Plan::group_by(
            [a.clone()],
            [(c.clone(), AggFn::CountStar)],
            Plan::scan("R", [a.clone()]),
        );
        let out = evaluate(&p, &cat, &BindEnv::empty()).unwrap();
        assert!(out.is_duplicate_free());
        assert_eq!(out.distinct_len(), 2);
        let null_group =
            Tuple::from_pairs([(a.clone(), Value::Null), (c.clone(), Value::Int(2))]).unwrap();
        assert_eq!(out.count(&null_group), 1);
    }

    #[test]
    fn group_by_no_keys_on_empty_input_is_empty() {
        let a = attr("a");
        let c = attr("c");
        let mut cat = Catalog::new();
        cat.add_table("R", Relation::empty([a.clone()]));
        let p = Plan::group_by([], [(c, AggFn::CountStar)], Plan::scan("R", [a]));
        let out = evaluate(&p, &cat, &BindEnv::empty()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn semi_and_anti_join_are_contained_in_left() {
        let a = attr("a");
        let b = attr("b");
        let mut cat = Catalog::new();
        cat.add_table(
            "L",
            single_col(&a, &[(Value::Int(1), 2), (Value::Int(2), 1), (Value::Null, 1)]),
        );
        cat.add_table("R", single_col(&b, &[(Value::Int(1), 3), (Value::Null, 1)]));
        let pred = ScalarExpr::cmp(
            CmpOp::Eq,
            ScalarExpr::attr(a.clone()),
            ScalarExpr::attr(b.clone()),
        );
        let l = Plan::scan("L", [a.clone()]);
        let r = Plan::scan("R", [b.clone()]);
        let semi = evaluate(
            &Plan::semi_join(pred.clone(), l.clone(), r.clone()),
            &cat,
            &BindEnv::empty(),
        )
        .unwrap();
        let anti =
            evaluate(&Plan::anti_join(pred, l.clone(), r), &cat, &BindEnv::empty()).unwrap();
        let left = evaluate(&l, &cat, &BindEnv::empty()).unwrap();
        assert!(left.contains_multiset(&semi));
        assert!(left.contains_multiset(&anti));
        // NULL = 1 is UNKNOWN, so the NULL row never matches: anti keeps it.
        assert_eq!(semi.count(&Tuple::single(a.clone(), Value::Null)), 0);
        assert_eq!(anti.count(&Tuple::single(a, Value::Null)), 1);
    }
}
