//! Aggregation functions over materialized relations.

use crate::algebra::{AggFn, Relation, Value};

use super::EvalError;

/// Applies an aggregation function to a whole relation (one group).
///
/// `COUNT(*)` counts multiplicity including NULLs; the other functions skip
/// NULL inputs. `SUM`/`MIN`/`MAX` of an empty or all-NULL input is NULL,
/// `COUNT` of an empty input is 0.
pub fn aggregate(func: &AggFn, rel: &Relation) -> Result<Value, EvalError> {
    match func {
        AggFn::CountStar => Ok(Value::Int(rel.total() as i64)),
        AggFn::Count(a) => {
            let mut n: i64 = 0;
            for (t, count) in rel.iter() {
                let v = t.get(a).ok_or_else(|| EvalError::UnboundAttribute(a.clone()))?;
                if !v.is_null() {
                    n += count as i64;
                }
            }
            Ok(Value::Int(n))
        }
        AggFn::Sum(a) => {
            let mut sum: Option<i64> = None;
            for (t, count) in rel.iter() {
                match t.get(a).ok_or_else(|| EvalError::UnboundAttribute(a.clone()))? {
                    Value::Null => {}
                    Value::Int(v) => {
                        sum = Some(sum.unwrap_or(0).wrapping_add(v.wrapping_mul(count as i64)));
                    }
                    other => {
                        return Err(EvalError::Type(format!("sum over {}", other.type_name())))
                    }
                }
            }
            Ok(sum.map_or(Value::Null, Value::Int))
        }
        AggFn::Min(a) | AggFn::Max(a) => {
            let mut best: Option<Value> = None;
            for (t, _) in rel.iter() {
                let v = t.get(a).ok_or_else(|| EvalError::UnboundAttribute(a.clone()))?;
                if v.is_null() {
                    continue;
                }
                best = Some(match best {
                    None => v.clone(),
                    Some(b) => {
                        let take = if matches!(func, AggFn::Min(_)) { v < &b } else { v > &b };
                        if take {
                            v.clone()
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best.unwrap_or(Value::Null))
        }
    }
}
