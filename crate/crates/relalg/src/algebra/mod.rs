//! Core value and plan types: attributes, tuples, relations, scalar
//! expressions and the logical plan IR, plus schema / free-variable analysis.

mod analysis;
mod attribute;
mod expr;
mod plan;
mod relation;
mod tuple;
mod value;

pub use analysis::{analyze, free_vars_plan, schema_of, validate, PlanInfo, SchemaError};
pub use attribute::Attribute;
pub use expr::{ArithOp, CmpOp, ScalarExpr};
pub use plan::{AggFn, Aggregate, Plan, PlanPath};
pub use relation::{Relation, RelationError};
pub use tuple::{Tuple, TupleError};
pub use value::Value;

/// The free variables `F(e)` of a scalar expression.
pub fn free_vars_expr(e: &ScalarExpr) -> std::collections::BTreeSet<Attribute> {
    e.free_vars()
}

/// A new attribute whose id has never been issued in this process.
pub fn fresh_attribute(base: impl Into<String>) -> Attribute {
    Attribute::fresh(base)
}
