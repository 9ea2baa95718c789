//! A bag-semantics relational algebra toolkit.
//!
//! The crate has four layers:
//!
//! * [`algebra`] — attributes, tuples, relations (multisets stored as their
//!   characteristic function), scalar expressions and the logical plan IR,
//!   including the dependent join.
//! * [`eval`] — a deliberately literal reference evaluator used as the
//!   correctness oracle for everything else.
//! * [`unnest`] — the top-down, single-pass rewrite that eliminates every
//!   dependent join from a plan while preserving its multiset semantics.
//! * [`harness`] — deterministic random generators and equivalence checkers
//!   that exercise each rewrite rule and the whole pipeline.
//!
//! [`text`] adds a line-oriented s-expression syntax for plans, relations and
//! catalogs so golden tests and the CLI can work with files.

pub mod algebra;
pub mod eval;
pub mod harness;
pub mod text;
pub mod unnest;

pub use algebra::{
    analyze, free_vars_expr, free_vars_plan, fresh_attribute, schema_of, validate, AggFn,
    Aggregate, ArithOp, Attribute, CmpOp, Plan, PlanPath, Relation, ScalarExpr, SchemaError,
    Tuple, Value,
};
pub use eval::{aggregate, eval_predicate, eval_scalar, evaluate, BindEnv, Catalog, EvalError, Truth};
