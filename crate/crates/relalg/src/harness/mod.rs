//! Randomized generators and equivalence checkers: every rewrite the
//! unnester relies on runs as a seeded suite, and whole random plans are
//! pushed through the full pipeline and compared against the reference
//! evaluator.

mod check;
mod gen;
mod lemmas;
mod plangen;

pub use check::{check_equivalence, diff_relations, EquivalenceReport, Failure};
pub use gen::{gen_relation, gen_relation_with, trial_rng, GenSpec};
pub use lemmas::{all_suite_ids, run_lemma_suite, EXTRA_SUITES, PAPER_SUITES};
pub use plangen::gen_correlated_plan;

use crate::unnest::{unnest, unnest_with_stats, PerfectMode, UnnestConfig};

/// End-to-end property: every generated plan unnests to a plan with zero
/// dependent joins, evaluates to the same multiset under each mode, is a
/// fixpoint of a second unnesting pass, and the push-down recursion touches
/// each operator at most once.
pub fn run_fuzz(spec: &GenSpec, trials: u64, modes: &[PerfectMode]) -> EquivalenceReport {
    let mut failures: Vec<Failure> = Vec::new();
    for trial in 0..trials {
        for mode in modes {
            if let Some(diff) = fuzz_trial(spec, trial, *mode) {
                failures.push(shrink_fuzz(spec, trial, *mode, diff));
            }
        }
    }
    EquivalenceReport { suite: "fuzz".to_owned(), trials, failures }
}

/// Runs one trial; on failure returns the diff message.
fn fuzz_trial(spec: &GenSpec, trial: u64, mode: PerfectMode) -> Option<String> {
    let (plan, cat) = gen_correlated_plan(spec, trial);
    let cfg = UnnestConfig::with_mode(mode);
    let (out, stats) = match unnest_with_stats(&plan, &cfg) {
        Ok(v) => v,
        Err(e) => return Some(format!("[{mode:?}] unnest failed: {e}")),
    };
    if out.contains_dependent_join() {
        return Some(format!("[{mode:?}] a dependent join remains in the output"));
    }
    if stats.pushdown_visits > plan.node_count() {
        return Some(format!(
            "[{mode:?}] push-down visited {} nodes for a {}-node plan",
            stats.pushdown_visits,
            plan.node_count()
        ));
    }
    if let Err(diff) = check_equivalence(&plan, &out, &cat) {
        return Some(format!("[{mode:?}] {diff}"));
    }
    match unnest(&out, &cfg) {
        Ok(again) if again == out => None,
        Ok(_) => Some(format!("[{mode:?}] unnesting is not idempotent")),
        Err(e) => Some(format!("[{mode:?}] second unnest failed: {e}")),
    }
}

fn shrink_fuzz(spec: &GenSpec, trial: u64, mode: PerfectMode, diff: String) -> Failure {
    for depth in 1..=spec.max_plan_depth {
        for rows in 1..=spec.max_rows {
            if depth == spec.max_plan_depth && rows == spec.max_rows {
                continue;
            }
            let smaller = GenSpec { max_rows: rows, max_plan_depth: depth, ..spec.clone() };
            if let Some(d) = fuzz_trial(&smaller, trial, mode) {
                let (plan, cat) = gen_correlated_plan(&smaller, trial);
                let out = unnest(&plan, &UnnestConfig::with_mode(mode)).unwrap_or_else(|_| plan.clone());
                return check::failure("fuzz", trial, d, &plan, &out, &cat, rows, depth);
            }
        }
    }
    let (plan, cat) = gen_correlated_plan(spec, trial);
    let out = unnest(&plan, &UnnestConfig::with_mode(mode)).unwrap_or_else(|_| plan.clone());
    check::failure("fuzz", trial, diff, &plan, &out, &cat, spec.max_rows, spec.max_plan_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fuzz_smoke() {
        let spec = GenSpec::default();
        let report = run_fuzz(&spec, 25, &[PerfectMode::Never, PerfectMode::Auto]);
        assert!(report.passed(), "{}\n{}", report.summary(), report.failure_lines());
    }
}
