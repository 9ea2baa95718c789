//! Bring-up checks for the plan generator: every operator kind is reachable,
//! correlated dependent joins occur often, and group-bys show up beneath
//! them with positive frequency.

use std::collections::BTreeMap;

use relalg::harness::{gen_correlated_plan, GenSpec};
use relalg::unnest::find_dependent_joins;
use relalg::{free_vars_plan, schema_of, Plan};

fn count_kinds(plan: &Plan, counts: &mut BTreeMap<&'static str, usize>) {
    *counts.entry(plan.node_name()).or_insert(0) += 1;
    for child in plan.children() {
        count_kinds(child, counts);
    }
}

fn has_groupby_under_djoin(plan: &Plan, inside: bool) -> bool {
    match plan {
        Plan::GroupBy { child, .. } => inside || has_groupby_under_djoin(child, inside),
        Plan::DependentJoin { left, right, .. } => {
            has_groupby_under_djoin(left, inside) || has_groupby_under_djoin(right, true)
        }
        other => other.children().into_iter().any(|c| has_groupby_under_djoin(c, inside)),
    }
}

#[test]
fn kind_coverage_histogram() {
    let spec = GenSpec::default();
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut correlated = 0usize;
    let mut groupby_under_djoin = 0usize;
    let trials = 1000;

    for seed in 0..trials {
        let (plan, _) = gen_correlated_plan(&spec, seed);
        count_kinds(&plan, &mut counts);
        if !find_dependent_joins(&plan).unwrap().is_empty() {
            correlated += 1;
        }
        if has_groupby_under_djoin(&plan, false) {
            groupby_under_djoin += 1;
        }
    }

    println!("[coverage] node kinds over {trials} plans: {counts:?}");
    println!("[coverage] plans with a correlated dependent join: {correlated}");
    println!("[coverage] plans with a group-by under a dependent join: {groupby_under_djoin}");

    for kind in [
        "scan", "select", "map", "project", "distinct", "rename", "union", "intersect",
        "except", "cross", "join", "djoin", "semijoin", "antijoin", "outerjoin", "nullpad",
        "groupby",
    ] {
        assert!(counts.get(kind).copied().unwrap_or(0) > 0, "kind {kind} never generated");
    }
    assert!(correlated * 2 >= trials as usize, "too few correlated plans: {correlated}/{trials}");
    assert!(groupby_under_djoin > 0, "group-by never occurred under a dependent join");
}

#[test]
fn generated_plans_satisfy_schema_and_free_variable_invariants() {
    let spec = GenSpec::default();
    for seed in 0..500 {
        let (plan, _) = gen_correlated_plan(&spec, seed);
        let schema = schema_of(&plan).unwrap();
        let free = free_vars_plan(&plan).unwrap();
        assert!(free.is_empty(), "generated plan {seed} is not closed");
        assert!(free.is_disjoint(&schema));
    }
}
