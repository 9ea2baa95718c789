//! The cheap elimination pass: hoist selections and maps off the right side
//! of a dependent join until the remainder no longer depends on the left
//! side, then turn the dependent join into a regular join. Falls back to the
//! general push-down machinery when something else (a group-by, a join)
//! carries the correlation.

use std::collections::BTreeSet;

use crate::algebra::{free_vars_plan, schema_of, Attribute, Plan, ScalarExpr, SchemaError};

enum SpineNode {
    Select(ScalarExpr),
    Map(Attribute, ScalarExpr),
}

/// Rewrites every dependent join whose correlation lives entirely in a
/// prefix of selections/maps on its right side; anything it cannot fully
/// eliminate is left untouched.
pub fn simple_djoin_elimination(plan: &Plan) -> Result<Plan, SchemaError> {
    walk(plan.clone())
}

fn walk(plan: Plan) -> Result<Plan, SchemaError> {
    let plan = rebuild_children(plan)?;
    match plan {
        Plan::DependentJoin { pred, left, right } => try_eliminate(pred, *left, *right),
        other => Ok(other),
    }
}

fn rebuild_children(plan: Plan) -> Result<Plan, SchemaError> {
    Ok(match plan {
        Plan::Scan { .. } => plan,
        Plan::Select { pred, child } => Plan::select(pred, walk(*child)?),
        Plan::Map { attr, expr, child } => Plan::map(attr, expr, walk(*child)?),
        Plan::Project { attrs, child } => Plan::Project { attrs, child: Box::new(walk(*child)?) },
        Plan::ProjectDistinct { attrs, child } => {
            Plan::ProjectDistinct { attrs, child: Box::new(walk(*child)?) }
        }
        Plan::Rename { new, old, child } => Plan::rename(new, old, walk(*child)?),
        Plan::Union { left, right } => Plan::union(walk(*left)?, walk(*right)?),
        Plan::Intersect { left, right } => Plan::intersect(walk(*left)?, walk(*right)?),
        Plan::Except { left, right } => Plan::except(walk(*left)?, walk(*right)?),
        Plan::Cross { left, right } => Plan::cross(walk(*left)?, walk(*right)?),
        Plan::Join { pred, left, right } => Plan::join(pred, walk(*left)?, walk(*right)?),
        Plan::DependentJoin { pred, left, right } => {
            Plan::dependent_join(pred, walk(*left)?, walk(*right)?)
        }
        Plan::SemiJoin { pred, left, right } => Plan::semi_join(pred, walk(*left)?, walk(*right)?),
        Plan::AntiJoin { pred, left, right } => Plan::anti_join(pred, walk(*left)?, walk(*right)?),
        Plan::OuterJoin { pred, left, right } => {
            Plan::outer_join(pred, walk(*left)?, walk(*right)?)
        }
        Plan::NullPad { attrs, child } => Plan::NullPad { attrs, child: Box::new(walk(*child)?) },
        Plan::GroupBy { keys, aggs, child } => {
            Plan::GroupBy { keys, aggs, child: Box::new(walk(*child)?) }
        }
    })
}

fn try_eliminate(pred: ScalarExpr, left: Plan, right: Plan) -> Result<Plan, SchemaError> {
    let left_schema = schema_of(&left)?;
    let pred_vars = pred.free_vars();

    // Peel the longest prefix of selections/maps that may move above the
    // join. A map is pinned when the join predicate references its output.
    let mut spine: Vec<SpineNode> = Vec::new();
    let mut base = right;
    loop {
        base = match base {
            Plan::Select { pred, child } => {
                spine.push(SpineNode::Select(pred));
                *child
            }
            Plan::Map { attr, expr, child } if !pred_vars.contains(&attr) => {
                spine.push(SpineNode::Map(attr, expr));
                *child
            }
            other => {
                base = other;
                break;
            }
        };
    }

    let base_free: BTreeSet<Attribute> = free_vars_plan(&base)?;
    if base_free.is_disjoint(&left_schema) {
        // everything correlated was in the prefix: regular join, prefix on top
        let mut out = Plan::join(pred, left, base);
        for node in spine.into_iter().rev() {
            out = match node {
                SpineNode::Select(p) => Plan::select(p, out),
                SpineNode::Map(a, e) => Plan::map(a, e, out),
            };
        }
        Ok(out)
    } else {
        // reassemble the original node untouched
        let mut right = base;
        for node in spine.into_iter().rev() {
            right = match node {
                SpineNode::Select(p) => Plan::select(p, right),
                SpineNode::Map(a, e) => Plan::map(a, e, right),
            };
        }
        Ok(Plan::dependent_join(pred, left, right))
    }
}
