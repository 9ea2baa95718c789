//! Schema and free-variable analysis.
//!
//! [`analyze`] walks a plan once, checking every operator-local precondition
//! (disjointness of join inputs, projection lists contained in the child
//! schema, and so on) while computing the output schema `A(p)` and the free
//! variables `F(p)`. Everything else in the crate goes through it.

use std::collections::BTreeSet;

use thiserror::Error;

use super::attribute::Attribute;
use super::plan::Plan;
use super::relation::attrs_to_string;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("schema violation at {node}: {detail}")]
pub struct SchemaError {
    pub node: &'static str,
    pub detail: String,
}

impl SchemaError {
    fn new(node: &'static str, detail: impl Into<String>) -> Self {
        SchemaError { node, detail: detail.into() }
    }
}

/// Result of analyzing one plan node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanInfo {
    /// Output attribute set `A(p)`.
    pub schema: BTreeSet<Attribute>,
    /// Free variables `F(p)`: attributes referenced inside `p` but not
    /// produced by any operator in `p`, after accounting for dependent-join
    /// binding.
    pub free: BTreeSet<Attribute>,
}

/// Output schema of a plan; errors if any operator-local invariant fails.
pub fn schema_of(plan: &Plan) -> Result<BTreeSet<Attribute>, SchemaError> {
    analyze(plan).map(|info| info.schema)
}

/// Free variables of a plan (see [`PlanInfo::free`]).
pub fn free_vars_plan(plan: &Plan) -> Result<BTreeSet<Attribute>, SchemaError> {
    analyze(plan).map(|info| info.free)
}

/// Checks all operator-local invariants without caring about the result.
pub fn validate(plan: &Plan) -> Result<(), SchemaError> {
    analyze(plan).map(|_| ())
}

pub fn analyze(plan: &Plan) -> Result<PlanInfo, SchemaError> {
    match plan {
        Plan::Scan { table, attrs } => {
            let schema: BTreeSet<Attribute> = attrs.iter().cloned().collect();
            if schema.len() != attrs.len() {
                return Err(SchemaError::new(
                    "scan",
                    format!("duplicate attribute in scan of {table}"),
                ));
            }
            Ok(PlanInfo { schema, free: BTreeSet::new() })
        }
        Plan::Select { pred, child } => {
            let info = analyze(child)?;
            let free = with_expr_free(info.free, pred.free_vars(), &info.schema);
            Ok(PlanInfo { schema: info.schema, free })
        }
        Plan::Map { attr, expr, child } => {
            let info = analyze(child)?;
            if info.schema.contains(attr) {
                return Err(SchemaError::new(
                    "map",
                    format!("output attribute {attr} already in child schema"),
                ));
            }
            let free = with_expr_free(info.free, expr.free_vars(), &info.schema);
            let mut schema = info.schema;
            schema.insert(attr.clone());
            Ok(PlanInfo { schema, free })
        }
        Plan::Project { attrs, child } | Plan::ProjectDistinct { attrs, child } => {
            let info = analyze(child)?;
            for a in attrs {
                if !info.schema.contains(a) {
                    return Err(SchemaError::new(
                        plan.node_name(),
                        format!("projected attribute {a} not in child schema"),
                    ));
                }
            }
            Ok(PlanInfo { schema: attrs.iter().cloned().collect(), free: info.free })
        }
        Plan::Rename { new, old, child } => {
            let info = analyze(child)?;
            if !info.schema.contains(old) {
                return Err(SchemaError::new(
                    "rename",
                    format!("renamed attribute {old} not in child schema"),
                ));
            }
            if info.schema.contains(new) {
                return Err(SchemaError::new(
                    "rename",
                    format!("new attribute {new} already in child schema"),
                ));
            }
            let mut schema = info.schema;
            schema.remove(old);
            schema.insert(new.clone());
            Ok(PlanInfo { schema, free: info.free })
        }
        Plan::Union { left, right } | Plan::Intersect { left, right } | Plan::Except { left, right } => {
            let l = analyze(left)?;
            let r = analyze(right)?;
            if l.schema != r.schema {
                return Err(SchemaError::new(
                    plan.node_name(),
                    format!(
                        "operand schemas differ: {} vs {}",
                        attrs_to_string(&l.schema),
                        attrs_to_string(&r.schema)
                    ),
                ));
            }
            Ok(PlanInfo { schema: l.schema, free: union(l.free, r.free) })
        }
        Plan::Cross { left, right } => {
            let (l, r) = analyze_disjoint(plan.node_name(), left, right)?;
            Ok(PlanInfo { schema: union(l.schema, r.schema), free: union(l.free, r.free) })
        }
        Plan::Join { pred, left, right } | Plan::OuterJoin { pred, left, right } => {
            let (l, r) = analyze_disjoint(plan.node_name(), left, right)?;
            let schema = union(l.schema, r.schema);
            let free = with_expr_free(union(l.free, r.free), pred.free_vars(), &schema);
            Ok(PlanInfo { schema, free })
        }
        Plan::SemiJoin { pred, left, right } | Plan::AntiJoin { pred, left, right } => {
            let (l, r) = analyze_disjoint(plan.node_name(), left, right)?;
            let visible = union(l.schema.clone(), r.schema);
            let free = with_expr_free(union(l.free, r.free), pred.free_vars(), &visible);
            Ok(PlanInfo { schema: l.schema, free })
        }
        Plan::DependentJoin { pred, left, right } => {
            let (l, r) = analyze_disjoint("djoin", left, right)?;
            // The left side binds the right side's references.
            let right_free: BTreeSet<Attribute> =
                r.free.difference(&l.schema).cloned().collect();
            let schema = union(l.schema, r.schema);
            let free = with_expr_free(union(l.free, right_free), pred.free_vars(), &schema);
            Ok(PlanInfo { schema, free })
        }
        Plan::NullPad { attrs, child } => {
            let info = analyze(child)?;
            let mut schema = info.schema;
            schema.extend(attrs.iter().cloned());
            Ok(PlanInfo { schema, free: info.free })
        }
        Plan::GroupBy { keys, aggs, child } => {
            let info = analyze(child)?;
            for k in keys {
                if !info.schema.contains(k) {
                    return Err(SchemaError::new(
                        "groupby",
                        format!("grouping key {k} not in child schema"),
                    ));
                }
            }
            let mut schema: BTreeSet<Attribute> = keys.iter().cloned().collect();
            for agg in aggs {
                if let Some(a) = agg.func.input() {
                    if !info.schema.contains(a) {
                        return Err(SchemaError::new(
                            "groupby",
                            format!("aggregate input {a} not in child schema"),
                        ));
                    }
                }
                if info.schema.contains(&agg.output) {
                    return Err(SchemaError::new(
                        "groupby",
                        format!("aggregate output {} already in child schema", agg.output),
                    ));
                }
                if !schema.insert(agg.output.clone()) {
                    return Err(SchemaError::new(
                        "groupby",
                        format!("duplicate output attribute {}", agg.output),
                    ));
                }
            }
            Ok(PlanInfo { schema, free: info.free })
        }
    }
}

fn analyze_disjoint(
    node: &'static str,
    left: &Plan,
    right: &Plan,
) -> Result<(PlanInfo, PlanInfo), SchemaError> {
    let l = analyze(left)?;
    let r = analyze(right)?;
    if let Some(shared) = l.schema.intersection(&r.schema).next() {
        return Err(SchemaError::new(
            node,
            format!("operand schemas share attribute {shared}"),
        ));
    }
    Ok((l, r))
}

fn union(a: BTreeSet<Attribute>, b: BTreeSet<Attribute>) -> BTreeSet<Attribute> {
    let mut out = a;
    out.extend(b);
    out
}

fn with_expr_free(
    mut free: BTreeSet<Attribute>,
    expr_vars: BTreeSet<Attribute>,
    bound: &BTreeSet<Attribute>,
) -> BTreeSet<Attribute> {
    free.extend(expr_vars.difference(bound).cloned());
    free
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::expr::ScalarExpr;

    fn attr(base: &str) -> Attribute {
        Attribute::fresh(base)
    }

    #[test]
    fn scan_schema_is_identity() {
        let a = attr("a");
        let b = attr("b");
        let p = Plan::scan("R", [a.clone(), b.clone()]);
        assert_eq!(schema_of(&p).unwrap(), BTreeSet::from([a, b]));
    }

    #[test]
    fn map_adds_attribute() {
        let a = attr("a");
        let c = attr("c");
        let p = Plan::map(
            c.clone(),
            ScalarExpr::add(ScalarExpr::attr(a.clone()), ScalarExpr::lit(1)),
            Plan::scan("R", [a.clone()]),
        );
        assert_eq!(schema_of(&p).unwrap(), BTreeSet::from([a, c]));
    }

    #[test]
    fn cross_rejects_shared_attributes() {
        let a = attr("a");
        let p = Plan::cross(Plan::scan("R", [a.clone()]), Plan::scan("S", [a]));
        let err = schema_of(&p).unwrap_err();
        assert_eq!(err.node, "cross");
    }

    #[test]
    fn correlated_select_has_free_vars() {
        let x = attr("x");
        let y = attr("y");
        let t = Plan::select(
            ScalarExpr::eq(ScalarExpr::attr(x.clone()), ScalarExpr::attr(y.clone())),
            Plan::scan("S", [y.clone()]),
        );
        assert_eq!(free_vars_plan(&t).unwrap(), BTreeSet::from([x.clone()]));

        // Binding through the dependent join closes the expression.
        let closed = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::scan("R", [x]),
            t,
        );
        assert!(free_vars_plan(&closed).unwrap().is_empty());
    }

    #[test]
    fn independent_cross_is_closed() {
        let p = Plan::cross(Plan::scan("R", [attr("a")]), Plan::scan("S", [attr("b")]));
        assert!(free_vars_plan(&p).unwrap().is_empty());
    }

    #[test]
    fn free_vars_disjoint_from_schema() {
        let x = attr("x");
        let y = attr("y");
        let p = Plan::select(
            ScalarExpr::eq(ScalarExpr::attr(x), ScalarExpr::attr(y.clone())),
            Plan::scan("S", [y]),
        );
        let info = analyze(&p).unwrap();
        assert!(info.free.is_disjoint(&info.schema));
    }
}
