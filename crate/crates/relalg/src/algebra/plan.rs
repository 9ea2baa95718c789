//! The logical plan IR: one node kind per operator, including the dependent
//! join. Plans are plain trees; schema and free-variable analysis lives in
//! [`crate::algebra::analysis`].

use super::attribute::Attribute;
use super::expr::ScalarExpr;

/// Aggregation functions usable in a group-by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggFn {
    CountStar,
    Count(Attribute),
    Sum(Attribute),
    Min(Attribute),
    Max(Attribute),
}

impl AggFn {
    pub fn input(&self) -> Option<&Attribute> {
        match self {
            AggFn::CountStar => None,
            AggFn::Count(a) | AggFn::Sum(a) | AggFn::Min(a) | AggFn::Max(a) => Some(a),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AggFn::CountStar => "count*",
            AggFn::Count(_) => "count",
            AggFn::Sum(_) => "sum",
            AggFn::Min(_) => "min",
            AggFn::Max(_) => "max",
        }
    }
}

/// One output column of a group-by: `attr := agg(...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregate {
    pub output: Attribute,
    pub func: AggFn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    /// Base table scan; `attrs` are the catalog columns of `table`.
    Scan { table: String, attrs: Vec<Attribute> },
    Select { pred: ScalarExpr, child: Box<Plan> },
    /// Adds `attr := expr` to every tuple (the map operator).
    Map { attr: Attribute, expr: ScalarExpr, child: Box<Plan> },
    /// Duplicate-preserving projection.
    Project { attrs: Vec<Attribute>, child: Box<Plan> },
    /// Duplicate-eliminating projection; the result is a set.
    ProjectDistinct { attrs: Vec<Attribute>, child: Box<Plan> },
    /// Renames `old` (which must exist) to `new` (which must not).
    Rename { new: Attribute, old: Attribute, child: Box<Plan> },
    Union { left: Box<Plan>, right: Box<Plan> },
    Intersect { left: Box<Plan>, right: Box<Plan> },
    Except { left: Box<Plan>, right: Box<Plan> },
    Cross { left: Box<Plan>, right: Box<Plan> },
    Join { pred: ScalarExpr, left: Box<Plan>, right: Box<Plan> },
    /// Evaluates `right` once per `left` tuple with that tuple's attributes
    /// bound, then filters the concatenations with `pred`.
    DependentJoin { pred: ScalarExpr, left: Box<Plan>, right: Box<Plan> },
    SemiJoin { pred: ScalarExpr, left: Box<Plan>, right: Box<Plan> },
    AntiJoin { pred: ScalarExpr, left: Box<Plan>, right: Box<Plan> },
    /// Left outer join.
    OuterJoin { pred: ScalarExpr, left: Box<Plan>, right: Box<Plan> },
    /// Adds every attribute of `attrs` not already present, bound to NULL.
    NullPad { attrs: Vec<Attribute>, child: Box<Plan> },
    GroupBy { keys: Vec<Attribute>, aggs: Vec<Aggregate>, child: Box<Plan> },
}

fn sorted_attrs(attrs: impl IntoIterator<Item = Attribute>) -> Vec<Attribute> {
    let mut v: Vec<Attribute> = attrs.into_iter().collect();
    v.sort();
    v.dedup();
    v
}

impl Plan {
    pub fn scan(table: impl Into<String>, attrs: impl IntoIterator<Item = Attribute>) -> Plan {
        Plan::Scan { table: table.into(), attrs: attrs.into_iter().collect() }
    }

    pub fn select(pred: ScalarExpr, child: Plan) -> Plan {
        Plan::Select { pred, child: Box::new(child) }
    }

    pub fn map(attr: Attribute, expr: ScalarExpr, child: Plan) -> Plan {
        Plan::Map { attr, expr, child: Box::new(child) }
    }

    pub fn project(attrs: impl IntoIterator<Item = Attribute>, child: Plan) -> Plan {
        Plan::Project { attrs: sorted_attrs(attrs), child: Box::new(child) }
    }

    pub fn project_distinct(attrs: impl IntoIterator<Item = Attribute>, child: Plan) -> Plan {
        Plan::ProjectDistinct { attrs: sorted_attrs(attrs), child: Box::new(child) }
    }

    pub fn rename(new: Attribute, old: Attribute, child: Plan) -> Plan {
        Plan::Rename { new, old, child: Box::new(child) }
    }

    pub fn union(left: Plan, right: Plan) -> Plan {
        Plan::Union { left: Box::new(left), right: Box::new(right) }
    }

    pub fn intersect(left: Plan, right: Plan) -> Plan {
        Plan::Intersect { left: Box::new(left), right: Box::new(right) }
    }

    pub fn except(left: Plan, right: Plan) -> Plan {
        Plan::Except { left: Box::new(left), right: Box::new(right) }
    }

    pub fn cross(left: Plan, right: Plan) -> Plan {
        Plan::Cross { left: Box::new(left), right: Box::new(right) }
    }

    pub fn join(pred: ScalarExpr, left: Plan, right: Plan) -> Plan {
        Plan::Join { pred, left: Box::new(left), right: Box::new(right) }
    }

    pub fn dependent_join(pred: ScalarExpr, left: Plan, right: Plan) -> Plan {
        Plan::DependentJoin { pred, left: Box::new(left), right: Box::new(right) }
    }

    pub fn semi_join(pred: ScalarExpr, left: Plan, right: Plan) -> Plan {
        Plan::SemiJoin { pred, left: Box::new(left), right: Box::new(right) }
    }

    pub fn anti_join(pred: ScalarExpr, left: Plan, right: Plan) -> Plan {
        Plan::AntiJoin { pred, left: Box::new(left), right: Box::new(right) }
    }

    pub fn outer_join(pred: ScalarExpr, left: Plan, right: Plan) -> Plan {
        Plan::OuterJoin { pred, left: Box::new(left), right: Box::new(right) }
    }

    pub fn null_pad(attrs: impl IntoIterator<Item = Attribute>, child: Plan) -> Plan {
        Plan::NullPad { attrs: sorted_attrs(attrs), child: Box::new(child) }
    }

    pub fn group_by(
        keys: impl IntoIterator<Item = Attribute>,
        aggs: impl IntoIterator<Item = (Attribute, AggFn)>,
        child: Plan,
    ) -> Plan {
        let mut aggs: Vec<Aggregate> =
            aggs.into_iter().map(|(output, func)| Aggregate { output, func }).collect();
        aggs.sort_by(|a, b| a.output.cmp(&b.output));
        Plan::GroupBy { keys: sorted_attrs(keys), aggs, child: Box::new(child) }
    }

    pub fn node_name(&self) -> &'static str {
        match self {
            Plan::Scan { .. } => "scan",
            Plan::Select { .. } => "select",
            Plan::Map { .. } => "map",
            Plan::Project { .. } => "project",
            Plan::ProjectDistinct { .. } => "distinct",
            Plan::Rename { .. } => "rename",
            Plan::Union { .. } => "union",
            Plan::Intersect { .. } => "intersect",
            Plan::Except { .. } => "except",
            Plan::Cross { .. } => "cross",
            Plan::Join { .. } => "join",
            Plan::DependentJoin { .. } => "djoin",
            Plan::SemiJoin { .. } => "semijoin",
            Plan::AntiJoin { .. } => "antijoin",
            Plan::OuterJoin { .. } => "outerjoin",
            Plan::NullPad { .. } => "nullpad",
            Plan::GroupBy { .. } => "groupby",
        }
    }

    pub fn children(&self) -> Vec<&Plan> {
        match self {
            Plan::Scan { .. } => vec![],
            Plan::Select { child, .. }
            | Plan::Map { child, .. }
            | Plan::Project { child, .. }
            | Plan::ProjectDistinct { child, .. }
            | Plan::Rename { child, .. }
            | Plan::NullPad { child, .. }
            | Plan::GroupBy { child, .. } => vec![child],
            Plan::Union { left, right }
            | Plan::Intersect { left, right }
            | Plan::Except { left, right }
            | Plan::Cross { left, right }
            | Plan::Join { left, right, .. }
            | Plan::DependentJoin { left, right, .. }
            | Plan::SemiJoin { left, right, .. }
            | Plan::AntiJoin { left, right, .. }
            | Plan::OuterJoin { left, right, .. } => vec![left, right],
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(Plan::node_count).sum::<usize>()
    }

    pub fn contains_dependent_join(&self) -> bool {
        matches!(self, Plan::DependentJoin { .. })
            || self.children().into_iter().any(Plan::contains_dependent_join)
    }

    /// Applies `subst` to every expression and attribute occurrence in the
    /// tree, including introduced attributes; used when a subtree must be
    /// re-based onto renamed columns.
    pub fn substitute_attrs(
        &self,
        map: &std::collections::BTreeMap<Attribute, Attribute>,
    ) -> Plan {
        let sub_attr = |a: &Attribute| map.get(a).cloned().unwrap_or_else(|| a.clone());
        let sub_attrs = |attrs: &[Attribute]| attrs.iter().map(sub_attr).collect::<Vec<_>>();
        match self {
            Plan::Scan { table, attrs } => {
                Plan::Scan { table: table.clone(), attrs: sub_attrs(attrs) }
            }
            Plan::Select { pred, child } => {
                Plan::select(pred.substitute(map), child.substitute_attrs(map))
            }
            Plan::Map { attr, expr, child } => {
                Plan::map(sub_attr(attr), expr.substitute(map), child.substitute_attrs(map))
            }
            Plan::Project { attrs, child } => {
                Plan::project(sub_attrs(attrs), child.substitute_attrs(map))
            }
            Plan::ProjectDistinct { attrs, child } => {
                Plan::project_distinct(sub_attrs(attrs), child.substitute_attrs(map))
            }
            Plan::Rename { new, old, child } => {
                Plan::rename(sub_attr(new), sub_attr(old), child.substitute_attrs(map))
            }
            Plan::Union { left, right } => {
                Plan::union(left.substitute_attrs(map), right.substitute_attrs(map))
            }
            Plan::Intersect { left, right } => {
                Plan::intersect(left.substitute_attrs(map), right.substitute_attrs(map))
            }
            Plan::Except { left, right } => {
                Plan::except(left.substitute_attrs(map), right.substitute_attrs(map))
            }
            Plan::Cross { left, right } => {
                Plan::cross(left.substitute_attrs(map), right.substitute_attrs(map))
            }
            Plan::Join { pred, left, right } => Plan::join(
                pred.substitute(map),
                left.substitute_attrs(map),
                right.substitute_attrs(map),
            ),
            Plan::DependentJoin { pred, left, right } => Plan::dependent_join(
                pred.substitute(map),
                left.substitute_attrs(map),
                right.substitute_attrs(map),
            ),
            Plan::SemiJoin { pred, left, right } => Plan::semi_join(
                pred.substitute(map),
                left.substitute_attrs(map),
                right.substitute_attrs(map),
            ),
            Plan::AntiJoin { pred, left, right } => Plan::anti_join(
                pred.substitute(map),
                left.substitute_attrs(map),
                right.substitute_attrs(map),
            ),
            Plan::OuterJoin { pred, left, right } => Plan::outer_join(
                pred.substitute(map),
                left.substitute_attrs(map),
                right.substitute_attrs(map),
            ),
            Plan::NullPad { attrs, child } => {
                Plan::null_pad(sub_attrs(attrs), child.substitute_attrs(map))
            }
            Plan::GroupBy { keys, aggs, child } => Plan::group_by(
                sub_attrs(keys),
                aggs.iter().map(|agg| {
                    let func = match &agg.func {
                        AggFn::CountStar => AggFn::CountStar,
                        AggFn::Count(a) => AggFn::Count(sub_attr(a)),
                        AggFn::Sum(a) => AggFn::Sum(sub_attr(a)),
                        AggFn::Min(a) => AggFn::Min(sub_attr(a)),
                        AggFn::Max(a) => AggFn::Max(sub_attr(a)),
                    };
                    (sub_attr(&agg.output), func)
                }),
                child.substitute_attrs(map),
            ),
        }
    }
}

/// Path from the root to a node: the sequence of child indexes to follow.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlanPath(pub Vec<usize>);

impl PlanPath {
    pub fn lookup<'a>(&self, mut plan: &'a Plan) -> Option<&'a Plan> {
        for &idx in &self.0 {
            plan = *plan.children().get(idx)?;
        }
        Some(plan)
    }
}

impl std::fmt::Display for PlanPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "<root>");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}
