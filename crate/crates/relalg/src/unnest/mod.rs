//! Dependent-join elimination.
//!
//! [`unnest`] first runs the cheap hoisting pass
//! ([`simple_djoin_elimination`]), then rewrites each remaining correlated
//! dependent join top-down: compute the duplicate-free domain of outer
//! references, push it down the right side, and join the result back on
//! null-safe equality of the domain columns. The output never contains a
//! dependent join and evaluates to the same multiset as the input.

mod pushdown;
mod simple;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::algebra::{
    free_vars_plan, schema_of, Attribute, CmpOp, Plan, PlanPath, ScalarExpr, SchemaError,
};

pub use pushdown::UnnestStats;
pub use simple::simple_djoin_elimination;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnnestError {
    #[error("no representative recorded for domain column {0}")]
    MissingRepresentative(Attribute),
    #[error("recursion depth exceeded {0}")]
    DepthExceeded(usize),
    #[error("perfect unnesting requested but domain column {0} has no usable equivalence")]
    PerfectUnnestingIncomplete(Attribute),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// Whether the stop rule may replace the join with the domain by map
/// operators over collected equivalences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerfectMode {
    /// Use maps whenever every domain column has a usable equivalence.
    #[default]
    Auto,
    /// Insist on maps; error when a domain column lacks an equivalence.
    Always,
    /// Always join with the domain.
    Never,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnnestConfig {
    pub perfect_mode: PerfectMode,
    /// Bounds the recursion over nested dependent joins.
    pub max_depth: usize,
}

impl Default for UnnestConfig {
    fn default() -> Self {
        UnnestConfig { perfect_mode: PerfectMode::Auto, max_depth: 32 }
    }
}

impl UnnestConfig {
    pub fn with_mode(perfect_mode: PerfectMode) -> Self {
        UnnestConfig { perfect_mode, ..UnnestConfig::default() }
    }
}

/// In-flight decorrelation state for one dependent join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnnestingInfo {
    /// Duplicate-free plan producing the distinct outer-reference values.
    pub domain: Plan,
    /// The domain's columns, i.e. the attributes the subtree references.
    pub outer_refs: BTreeSet<Attribute>,
    /// Current representative for each domain column in the rewritten plan.
    pub rename_map: BTreeMap<Attribute, Attribute>,
    /// Local expressions proven equal to a domain column by an enclosing
    /// selection.
    pub equivalences: BTreeMap<Attribute, ScalarExpr>,
}

impl UnnestingInfo {
    pub fn new(domain: Plan) -> Result<Self, UnnestError> {
        let outer_refs = schema_of(&domain)?;
        Ok(UnnestingInfo {
            domain,
            outer_refs,
            rename_map: BTreeMap::new(),
            equivalences: BTreeMap::new(),
        })
    }

    /// Records `d = local` equivalences from the top-level conjuncts of a
    /// predicate: one side a domain column, the other free of domain
    /// columns. Earlier entries win.
    pub fn collect_equivalences(&mut self, pred: &ScalarExpr) {
        for conjunct in pred.conjuncts() {
            let ScalarExpr::Cmp(CmpOp::Eq, lhs, rhs) = conjunct else { continue };
            for (a, b) in [(lhs, rhs), (rhs, lhs)] {
                let ScalarExpr::Attr(d) = a.as_ref() else { continue };
                if !self.outer_refs.contains(d) {
                    continue;
                }
                if b.free_vars().iter().any(|v| self.outer_refs.contains(v)) {
                    continue;
                }
                self.equivalences.entry(d.clone()).or_insert_with(|| b.as_ref().clone());
                break;
            }
        }
    }

    /// Maps every domain-column reference in `e` to its current
    /// representative; other attributes are untouched.
    pub fn rewrite_columns(&self, e: &ScalarExpr) -> Result<ScalarExpr, UnnestError> {
        for v in e.free_vars() {
            if self.outer_refs.contains(&v) && !self.rename_map.contains_key(&v) {
                return Err(UnnestError::MissingRepresentative(v));
            }
        }
        Ok(e.substitute(&self.rename_map))
    }

    pub fn representative(&self, d: &Attribute) -> Result<Attribute, UnnestError> {
        self.rename_map
            .get(d)
            .cloned()
            .ok_or_else(|| UnnestError::MissingRepresentative(d.clone()))
    }

    /// Current representatives of all domain columns.
    pub fn representatives(&self) -> Result<Vec<Attribute>, UnnestError> {
        self.outer_refs.iter().map(|d| self.representative(d)).collect()
    }
}

/// The smallest legal domain for a decomposition: the duplicate-free
/// projection of the left side onto the outer references.
pub fn compute_domain(left: &Plan, right_free_vars: &BTreeSet<Attribute>) -> Plan {
    Plan::project_distinct(right_free_vars.iter().cloned(), left.clone())
}

/// Pre-order paths of all truly correlated dependent joins (those whose
/// right side references left-side attributes).
pub fn find_dependent_joins(plan: &Plan) -> Result<Vec<PlanPath>, SchemaError> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn visit(
        plan: &Plan,
        path: &mut Vec<usize>,
        out: &mut Vec<PlanPath>,
    ) -> Result<(), SchemaError> {
        if let Plan::DependentJoin { left, right, .. } = plan {
            let lschema = schema_of(left)?;
            if !free_vars_plan(right)?.is_disjoint(&lschema) {
                out.push(PlanPath(path.clone()));
            }
        }
        for (i, child) in plan.children().into_iter().enumerate() {
            path.push(i);
            visit(child, path, out)?;
            path.pop();
        }
        Ok(())
    }
    visit(plan, &mut path, &mut out)?;
    Ok(out)
}

/// Pushes the domain of `info` down `subtree`, returning a plan equivalent
/// to `D ▶ subtree` together with the final column representatives.
pub fn push_down(
    info: &UnnestingInfo,
    subtree: &Plan,
    cfg: &UnnestConfig,
) -> Result<(Plan, UnnestingInfo), UnnestError> {
    let mut engine = pushdown::Unnester::new(cfg);
    engine.push_down_node(info.clone(), subtree.clone(), 0)
}

/// Removes every dependent join from the plan while preserving its multiset
/// semantics on all catalogs.
pub fn unnest(plan: &Plan, cfg: &UnnestConfig) -> Result<Plan, UnnestError> {
    unnest_with_stats(plan, cfg).map(|(plan, _)| plan)
}

/// Like [`unnest`], also reporting how many nodes the push-down recursion
/// visited.
pub fn unnest_with_stats(
    plan: &Plan,
    cfg: &UnnestConfig,
) -> Result<(Plan, UnnestStats), UnnestError> {
    let plan = simple_djoin_elimination(plan)?;
    let mut engine = pushdown::Unnester::new(cfg);
    let plan = engine.walk(plan)?;
    debug_assert!(!plan.contains_dependent_join());
    Ok((plan, engine.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{AggFn, Attribute, Relation, Tuple, Value};
    use crate::eval::{evaluate, BindEnv, Catalog};

    fn attr(base: &str) -> Attribute {
        Attribute::fresh(base)
    }

    fn table(cat: &mut Catalog, name: &str, attrs: &[&Attribute], rows: &[&[i64]]) {
        let mut rel = Relation::empty(attrs.iter().map(|a| (*a).clone()));
        for row in rows {
            let t = Tuple::from_pairs(
                attrs.iter().map(|a| (*a).clone()).zip(row.iter().map(|v| Value::Int(*v))),
            )
            .unwrap();
            rel.insert(t, 1).unwrap();
        }
        cat.add_table(name, rel);
    }

    /// djoin(true, R{x}, select(y=x, S{y}))
    fn correlated_pair() -> (Catalog, Plan, Attribute, Attribute) {
        let x = attr("x");
        let y = attr("y");
        let mut cat = Catalog::new();
        table(&mut cat, "R", &[&x], &[&[1], &[2], &[2]]);
        table(&mut cat, "S", &[&y], &[&[1], &[1], &[3]]);
        let plan = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::scan("R", [x.clone()]),
            Plan::select(
                ScalarExpr::eq(ScalarExpr::attr(y.clone()), ScalarExpr::attr(x.clone())),
                Plan::scan("S", [y.clone()]),
            ),
        );
        (cat, plan, x, y)
    }

    #[test]
    fn find_dependent_joins_reports_only_correlated_nodes() {
        let (_, plan, ..) = correlated_pair();
        assert_eq!(find_dependent_joins(&plan).unwrap(), vec![PlanPath(vec![])]);

        let a = attr("a");
        let b = attr("b");
        let indep = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::scan("R", [a]),
            Plan::scan("S", [b]),
        );
        assert!(find_dependent_joins(&indep).unwrap().is_empty());
        assert!(find_dependent_joins(&Plan::scan("R", [attr("c")])).unwrap().is_empty());
    }

    #[test]
    fn dependent_join_paths_are_preorder_topmost_first() {
        let (_, inner, x, _) = correlated_pair();
        let x2 = attr("x2");
        let outer = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::scan("R2", [x2.clone()]),
            Plan::select(
                ScalarExpr::eq(ScalarExpr::attr(x), ScalarExpr::attr(x2)),
                inner,
            ),
        );
        let paths = find_dependent_joins(&outer).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0], PlanPath(vec![]));
        assert_eq!(paths[1], PlanPath(vec![1, 0]));
        assert!(matches!(paths[1].lookup(&outer), Some(Plan::DependentJoin { .. })));
    }

    #[test]
    fn simple_elimination_hoists_the_correlated_select() {
        let (cat, plan, ..) = correlated_pair();
        let out = simple_djoin_elimination(&plan).unwrap();
        assert!(!out.contains_dependent_join());
        assert!(matches!(out, Plan::Select { ref child, .. } if matches!(**child, Plan::Join { .. })));
        let before = evaluate(&plan, &cat, &BindEnv::empty()).unwrap();
        let after = evaluate(&out, &cat, &BindEnv::empty()).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn simple_elimination_is_a_fixpoint_on_unnested_plans() {
        let a = attr("a");
        let plan = Plan::select(
            ScalarExpr::cmp(CmpOp::Lt, ScalarExpr::attr(a.clone()), ScalarExpr::lit(5)),
            Plan::scan("R", [a]),
        );
        assert_eq!(simple_djoin_elimination(&plan).unwrap(), plan);
    }

    #[test]
    fn simple_elimination_leaves_groupby_correlation_alone() {
        let x = attr("x");
        let y = attr("y");
        let c = attr("c");
        let plan = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::scan("R", [x.clone()]),
            Plan::group_by(
                [],
                [(c, AggFn::CountStar)],
                Plan::select(
                    ScalarExpr::eq(ScalarExpr::attr(y.clone()), ScalarExpr::attr(x)),
                    Plan::scan("S", [y]),
                ),
            ),
        );
        assert_eq!(simple_djoin_elimination(&plan).unwrap(), plan);
    }

    #[test]
    fn compute_domain_is_the_distinct_projection() {
        let x = attr("x");
        let y = attr("y");
        let mut cat = Catalog::new();
        table(&mut cat, "R", &[&x, &y], &[&[1, 9], &[1, 8]]);
        let left = Plan::scan("R", [x.clone(), y]);
        let d = compute_domain(&left, &BTreeSet::from([x.clone()]));
        let rel = evaluate(&d, &cat, &BindEnv::empty()).unwrap();
        assert!(rel.is_duplicate_free());
        assert_eq!(rel.count(&Tuple::single(x, Value::Int(1))), 1);
    }

    #[test]
    fn unnest_removes_the_dependent_join_and_preserves_semantics() {
        for mode in [PerfectMode::Never, PerfectMode::Auto, PerfectMode::Always] {
            let (cat, plan, ..) = correlated_pair();
            let out = unnest(&plan, &UnnestConfig::with_mode(mode)).unwrap();
            assert!(!out.contains_dependent_join());
            let before = evaluate(&plan, &cat, &BindEnv::empty()).unwrap();
            let after = evaluate(&out, &cat, &BindEnv::empty()).unwrap();
            assert_eq!(before, after, "mode {mode:?}");
        }
    }

    #[test]
    fn unnest_is_identity_on_plans_without_dependent_joins() {
        let a = attr("a");
        let b = attr("b");
        let plan = Plan::join(
            ScalarExpr::eq(ScalarExpr::attr(a.clone()), ScalarExpr::attr(b.clone())),
            Plan::scan("R", [a]),
            Plan::scan("S", [b]),
        );
        let out = unnest(&plan, &UnnestConfig::default()).unwrap();
        assert_eq!(out, plan);
    }

    #[test]
    fn groupby_correlation_goes_through_the_general_path() {
        // djoin(true, R{x}, groupby([], c: count*, select(y=x, S)))
        let x = attr("x");
        let y = attr("y");
        let c = attr("c");
        let mut cat = Catalog::new();
        table(&mut cat, "R", &[&x], &[&[1], &[2], &[3]]);
        table(&mut cat, "S", &[&y], &[&[1], &[1], &[2]]);
        let plan = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::scan("R", [x.clone()]),
            Plan::group_by(
                [],
                [(c.clone(), AggFn::CountStar)],
                Plan::select(
                    ScalarExpr::eq(ScalarExpr::attr(y.clone()), ScalarExpr::attr(x.clone())),
                    Plan::scan("S", [y.clone()]),
                ),
            ),
        );
        for mode in [PerfectMode::Never, PerfectMode::Auto] {
            let out = unnest(&plan, &UnnestConfig::with_mode(mode)).unwrap();
            assert!(!out.contains_dependent_join(), "mode {mode:?}");
            let before = evaluate(&plan, &cat, &BindEnv::empty()).unwrap();
            let after = evaluate(&out, &cat, &BindEnv::empty()).unwrap();
            assert_eq!(before, after, "mode {mode:?}");
        }
    }

    #[test]
    fn perfect_mode_substitutes_maps_for_the_domain() {
        // push_down over select(d = a, scan R) with perfect mode must yield
        // select(d' = a, map(d' := a, scan R))
        let d = attr("d");
        let a = attr("a");
        let domain = Plan::scan("D", [d.clone()]);
        let info = UnnestingInfo::new(domain).unwrap();
        let subtree = Plan::select(
            ScalarExpr::eq(ScalarExpr::attr(d.clone()), ScalarExpr::attr(a.clone())),
            Plan::scan("R", [a.clone()]),
        );
        let cfg = UnnestConfig::with_mode(PerfectMode::Always);
        let (plan, info) = push_down(&info, &subtree, &cfg).unwrap();
        let repr = info.representative(&d).unwrap();
        let expect = Plan::select(
            ScalarExpr::eq(ScalarExpr::attr(repr.clone()), ScalarExpr::attr(a.clone())),
            Plan::map(repr, ScalarExpr::attr(a.clone()), Plan::scan("R", [a])),
        );
        assert_eq!(plan, expect);
    }

    #[test]
    fn never_mode_crosses_with_the_renamed_domain() {
        let d = attr("d");
        let s = attr("s");
        let domain = Plan::scan("D", [d.clone()]);
        let info = UnnestingInfo::new(domain).unwrap();
        let subtree = Plan::scan("S", [s]);
        let cfg = UnnestConfig::with_mode(PerfectMode::Never);
        let (plan, info) = push_down(&info, &subtree, &cfg).unwrap();
        let repr = info.representative(&d).unwrap();
        assert_ne!(repr, d);
        match plan {
            Plan::Cross { left, .. } => {
                assert!(matches!(*left, Plan::Rename { ref new, .. } if *new == repr));
            }
            other => panic!("expected a cross, got {}", other.node_name()),
        }
    }

    #[test]
    fn pushdown_adds_domain_representatives_to_groupby_keys() {
        // push_down over groupby({g}, c: count*, R) must group by {g, d'}
        let d = attr("d");
        let g = attr("g");
        let c = attr("c");
        let domain = Plan::scan("D", [d.clone()]);
        let info = UnnestingInfo::new(domain).unwrap();
        let subtree = Plan::group_by(
            [g.clone()],
            [(c.clone(), AggFn::CountStar)],
            Plan::select(
                ScalarExpr::eq(ScalarExpr::attr(d.clone()), ScalarExpr::attr(g.clone())),
                Plan::scan("R", [g.clone()]),
            ),
        );
        let cfg = UnnestConfig::with_mode(PerfectMode::Never);
        let (plan, info) = push_down(&info, &subtree, &cfg).unwrap();
        let repr = info.representative(&d).unwrap();
        match plan {
            Plan::GroupBy { keys, aggs, .. } => {
                assert_eq!(keys, vec![g, repr]);
                assert_eq!(aggs.len(), 1);
                assert_eq!(aggs[0].output, c);
            }
            other => panic!("expected a groupby, got {}", other.node_name()),
        }
    }

    #[test]
    fn nesting_beyond_max_depth_is_an_error() {
        // two nested correlated aggregations (group-bys block the cheap
        // hoisting pass), depth bound of zero
        let x = attr("x");
        let y = attr("y");
        let z = attr("z");
        let inner = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::select(
                ScalarExpr::eq(ScalarExpr::attr(y.clone()), ScalarExpr::attr(x.clone())),
                Plan::scan("S", [y.clone()]),
            ),
            Plan::group_by(
                [],
                [(attr("c2"), AggFn::CountStar)],
                Plan::select(
                    ScalarExpr::eq(ScalarExpr::attr(z.clone()), ScalarExpr::attr(y.clone())),
                    Plan::scan("T", [z.clone()]),
                ),
            ),
        );
        let plan = Plan::dependent_join(
            ScalarExpr::lit(true),
            Plan::scan("R", [x.clone()]),
            Plan::group_by([], [(attr("c"), AggFn::CountStar)], inner),
        );
        let cfg = UnnestConfig { max_depth: 0, ..UnnestConfig::default() };
        assert!(matches!(unnest(&plan, &cfg), Err(UnnestError::DepthExceeded(0))));
        // the default bound is plenty
        assert!(unnest(&plan, &UnnestConfig::default()).is_ok());
    }

    #[test]
    fn always_mode_errors_without_coverage() {
        let d = attr("d");
        let s = attr("s");
        let domain = Plan::scan("D", [d.clone()]);
        let info = UnnestingInfo::new(domain).unwrap();
        // correlation through a comparison, not an equality: no equivalence
        let subtree = Plan::select(
            ScalarExpr::cmp(CmpOp::Lt, ScalarExpr::attr(d), ScalarExpr::attr(s.clone())),
            Plan::scan("S", [s]),
        );
        let cfg = UnnestConfig::with_mode(PerfectMode::Always);
        let err = push_down(&info, &subtree, &cfg).unwrap_err();
        assert!(matches!(err, UnnestError::PerfectUnnestingIncomplete(_)));
    }

    #[test]
    fn collect_equivalences_takes_only_local_equalities() {
        let d = attr("d");
        let d2 = attr("d2");
        let x = attr("x");
        let domain = Plan::scan("D", [d.clone(), d2.clone()]);
        let mut info = UnnestingInfo::new(domain).unwrap();
        let pred = ScalarExpr::and(
            ScalarExpr::eq(ScalarExpr::attr(d.clone()), ScalarExpr::attr(x.clone())),
            ScalarExpr::and(
                ScalarExpr::eq(ScalarExpr::attr(d.clone()), ScalarExpr::attr(d2.clone())),
                ScalarExpr::cmp(CmpOp::Lt, ScalarExpr::attr(d2.clone()), ScalarExpr::lit(3)),
            ),
        );
        info.collect_equivalences(&pred);
        assert_eq!(info.equivalences.get(&d), Some(&ScalarExpr::attr(x)));
        assert!(!info.equivalences.contains_key(&d2));
    }

    #[test]
    fn rewrite_columns_replaces_every_occurrence() {
        let d = attr("d");
        let a = attr("a");
        let domain = Plan::scan("D", [d.clone()]);
        let mut info = UnnestingInfo::new(domain).unwrap();
        let e = ScalarExpr::add(ScalarExpr::attr(d.clone()), ScalarExpr::attr(d.clone()));
        assert!(matches!(
            info.rewrite_columns(&e),
            Err(UnnestError::MissingRepresentative(_))
        ));
        let fresh = d.renamed_copy();
        info.rename_map.insert(d.clone(), fresh.clone());
        assert_eq!(
            info.rewrite_columns(&e).unwrap(),
            ScalarExpr::add(ScalarExpr::attr(fresh.clone()), ScalarExpr::attr(fresh))
        );
        let untouched = ScalarExpr::attr(a.clone());
        assert_eq!(info.rewrite_columns(&untouched).unwrap(), untouched);
    }
}
