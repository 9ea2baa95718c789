//! Exact multiset equivalence checking and failure reporting.

use serde::Serialize;

use crate::algebra::{Plan, Relation};
use crate::eval::{evaluate, BindEnv, Catalog};
use crate::text::{print_plan, print_relation};

/// One failed trial: everything needed to replay and inspect it.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub suite: String,
    pub seed: u64,
    /// Diff of the outputs, or the evaluation error.
    pub diff: String,
    pub left_plan: String,
    pub right_plan: String,
    /// Printed base tables.
    pub inputs: String,
    /// Bounds under which the failure reproduces (after shrinking).
    pub max_rows: usize,
    pub max_plan_depth: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub suite: String,
    pub trials: u64,
    pub failures: Vec<Failure>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// One JSON record per failure, newline-delimited.
    pub fn failure_lines(&self) -> String {
        let mut out = String::new();
        for f in &self.failures {
            out.push_str(&serde_json::to_string(f).expect("failure serializes"));
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} trials, {} failures, {}",
            self.suite,
            self.trials,
            self.failures.len(),
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Evaluates both plans on the catalog and compares characteristic functions
/// exactly. Evaluation errors are reported as mismatches, not panics.
pub fn check_equivalence(p1: &Plan, p2: &Plan, cat: &Catalog) -> Result<(), String> {
    let left = evaluate(p1, cat, &BindEnv::empty());
    let right = evaluate(p2, cat, &BindEnv::empty());
    match (left, right) {
        (Ok(l), Ok(r)) => diff_relations(&l, &r),
        (Err(e), _) => Err(format!("left plan failed to evaluate: {e}")),
        (_, Err(e)) => Err(format!("right plan failed to evaluate: {e}")),
    }
}

pub fn diff_relations(l: &Relation, r: &Relation) -> Result<(), String> {
    if l.schema() != r.schema() {
        return Err(format!(
            "schemas differ:\n  left  {}\n  right {}",
            print_relation(l).lines().next().unwrap_or(""),
            print_relation(r).lines().next().unwrap_or("")
        ));
    }
    match l.first_difference(r) {
        None => Ok(()),
        Some((t, a, b)) => Err(format!("tuple {t}: left count {a}, right count {b}")),
    }
}

/// Renders a catalog's tables for a failure record.
pub fn print_inputs(cat: &Catalog) -> String {
    let mut out = String::new();
    for (name, rel) in cat.iter() {
        out.push_str(name);
        out.push_str(" = ");
        out.push_str(&print_relation(rel));
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn failure(
    suite: &str,
    seed: u64,
    diff: String,
    left: &Plan,
    right: &Plan,
    cat: &Catalog,
    max_rows: usize,
    max_plan_depth: usize,
) -> Failure {
    Failure {
        suite: suite.to_owned(),
        seed,
        diff,
        left_plan: print_plan(left),
        right_plan: print_plan(right),
        inputs: print_inputs(cat),
        max_rows,
        max_plan_depth,
    }
}
