//! Scalar and predicate evaluation over a single tuple.

use crate::algebra::{ArithOp, Attribute, CmpOp, ScalarExpr, Tuple, Value};

use super::EvalError;

/// Three-valued predicate results with the usual Kleene tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    pub fn is_true(self) -> bool {
        self == Truth::True
    }
}

fn truth_of(v: &Value) -> Result<Truth, EvalError> {
    match v {
        Value::Bool(true) => Ok(Truth::True),
        Value::Bool(false) => Ok(Truth::False),
        Value::Null => Ok(Truth::Unknown),
        other => Err(EvalError::NotBoolean(other.type_name())),
    }
}

fn value_of(t: Truth) -> Value {
    match t {
        Truth::True => Value::Bool(true),
        Truth::False => Value::Bool(false),
        Truth::Unknown => Value::Null,
    }
}

fn lookup(tuple: &Tuple, attr: &Attribute) -> Result<Value, EvalError> {
    tuple.get(attr).cloned().ok_or_else(|| EvalError::UnboundAttribute(attr.clone()))
}

/// Evaluates a scalar expression under a tuple. Arithmetic over NULL yields
/// NULL; `=` and the other comparisons yield NULL when an operand is NULL;
/// `<=>` treats NULL as an ordinary value.
pub fn eval_scalar(expr: &ScalarExpr, tuple: &Tuple) -> Result<Value, EvalError> {
    match expr {
        ScalarExpr::Attr(a) => lookup(tuple, a),
        ScalarExpr::Literal(v) => Ok(v.clone()),
        ScalarExpr::Arith(op, l, r) => {
            let (l, r) = (eval_scalar(l, tuple)?, eval_scalar(r, tuple)?);
            match (l, r) {
                (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
                (Value::Int(a), Value::Int(b)) => Ok(Value::Int(match op {
                    ArithOp::Add => a.wrapping_add(b),
                    ArithOp::Sub => a.wrapping_sub(b),
                    ArithOp::Mul => a.wrapping_mul(b),
                })),
                (a, b) => Err(EvalError::Type(format!(
                    "arithmetic over {} and {}",
                    a.type_name(),
                    b.type_name()
                ))),
            }
        }
        ScalarExpr::Cmp(op, l, r) => {
            let (l, r) = (eval_scalar(l, tuple)?, eval_scalar(r, tuple)?);
            if l.is_null() || r.is_null() {
                return Ok(Value::Null);
            }
            let holds = match op {
                CmpOp::Eq => l == r,
                CmpOp::Ne => l != r,
                CmpOp::Lt => l < r,
                CmpOp::Le => l <= r,
                CmpOp::Gt => l > r,
                CmpOp::Ge => l >= r,
            };
            Ok(Value::Bool(holds))
        }
        ScalarExpr::NullSafeEq(l, r) => {
            let (l, r) = (eval_scalar(l, tuple)?, eval_scalar(r, tuple)?);
            Ok(Value::Bool(l == r))
        }
        ScalarExpr::And(l, r) => {
            let l = truth_of(&eval_scalar(l, tuple)?)?;
            let r = truth_of(&eval_scalar(r, tuple)?)?;
            Ok(value_of(l.and(r)))
        }
        ScalarExpr::Or(l, r) => {
            let l = truth_of(&eval_scalar(l, tuple)?)?;
            let r = truth_of(&eval_scalar(r, tuple)?)?;
            Ok(value_of(l.or(r)))
        }
        ScalarExpr::Not(e) => Ok(value_of(truth_of(&eval_scalar(e, tuple)?)?.not())),
        ScalarExpr::IsNull(e) => Ok(Value::Bool(eval_scalar(e, tuple)?.is_null())),
    }
}

/// Evaluates a predicate to a three-valued result. Selections and joins keep
/// a tuple only when this returns [`Truth::True`].
pub fn eval_predicate(expr: &ScalarExpr, tuple: &Tuple) -> Result<Truth, EvalError> {
    truth_of(&eval_scalar(expr, tuple)?)
}
