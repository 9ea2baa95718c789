//! One deterministic case per push-down rule: each script carries a
//! correlated dependent join whose right side starts with the operator under
//! test, and unnesting must remove every dependent join while preserving the
//! evaluation result in every mode.

use relalg::harness::check_equivalence;
use relalg::text::parse_script;
use relalg::unnest::{unnest, PerfectMode, UnnestConfig, UnnestError};

const TABLES: &str = r#"
(table R (x) (0) (1) (2) (NULL))
(table S (y s) (0 10) (1 20) (1 21) (NULL 30))
(table U (u) (0) (1) (1) (NULL))
(table V (v) (1) (2) (NULL))
"#;

fn assert_unnests(body: &str) {
    let script = format!("{TABLES}\n{body}");
    let (cat, plan) = parse_script(&script).unwrap_or_else(|e| panic!("{e}\n{script}"));
    for mode in [PerfectMode::Never, PerfectMode::Auto, PerfectMode::Always] {
        let rewritten = match unnest(&plan, &UnnestConfig::with_mode(mode)) {
            Ok(p) => p,
            // a non-equality correlation has no usable equivalence; only the
            // strict mode may refuse
            Err(UnnestError::PerfectUnnestingIncomplete(_))
                if mode == PerfectMode::Always =>
            {
                continue;
            }
            Err(e) => panic!("unnest failed under {mode:?}: {e}\n{body}"),
        };
        assert!(
            !rewritten.contains_dependent_join(),
            "dependent join left under {mode:?}:\n{body}"
        );
        if let Err(diff) = check_equivalence(&plan, &rewritten, &cat) {
            panic!("{mode:?} diverges: {diff}\n{body}");
        }
    }
}

#[test]
fn correlated_select() {
    assert_unnests("(djoin true (scan R) (select (= y x) (scan S)))");
    assert_unnests("(djoin true (scan R) (select (< y x) (scan S)))");
    assert_unnests("(djoin true (scan R) (select (<=> y x) (scan S)))");
}

#[test]
fn correlated_map() {
    assert_unnests("(djoin true (scan R) (map (m (+ y x)) (scan S)))");
}

#[test]
fn correlated_projections() {
    assert_unnests("(djoin true (scan R) (project (s) (select (= y x) (scan S))))");
    assert_unnests("(djoin true (scan R) (distinct (s) (select (= y x) (scan S))))");
    // empty projection list
    assert_unnests("(djoin true (scan R) (project () (select (= y x) (scan S))))");
}

#[test]
fn correlated_rename_and_nullpad() {
    assert_unnests("(djoin true (scan R) (rename (w s) (select (= y x) (scan S))))");
    assert_unnests("(djoin true (scan R) (nullpad (pad) (select (= y x) (scan S))))");
}

#[test]
fn correlated_set_operations() {
    for op in ["union", "intersect", "except"] {
        assert_unnests(&format!(
            "(djoin true (scan R) ({op} (select (= y x) (scan S)) (select (< y x) (scan S))))"
        ));
    }
}

#[test]
fn correlated_cross_and_join() {
    // both sides depend on the outer column
    assert_unnests(
        "(djoin true (scan R) (cross (select (= u x) (scan U)) (select (= v x) (scan V))))",
    );
    assert_unnests(
        "(djoin true (scan R) (join (= u v) (select (= u x) (scan U)) (select (= v x) (scan V))))",
    );
    // only one side depends
    assert_unnests("(djoin true (scan R) (join (= u v) (select (= u x) (scan U)) (scan V)))");
    assert_unnests("(djoin true (scan R) (join (= u v) (scan U) (select (= v x) (scan V))))");
    // only the predicate depends
    assert_unnests("(djoin true (scan R) (join (= u x) (scan U) (scan V)))");
}

#[test]
fn correlated_filtering_joins() {
    for op in ["semijoin", "antijoin", "outerjoin"] {
        // independent right side
        assert_unnests(&format!(
            "(djoin true (scan R) ({op} (= u v) (select (= u x) (scan U)) (scan V)))"
        ));
        // both sides correlated
        assert_unnests(&format!(
            "(djoin true (scan R) ({op} (= u v) (select (= u x) (scan U)) (select (= v x) (scan V))))"
        ));
    }
}

#[test]
fn correlated_group_by() {
    assert_unnests(
        "(djoin true (scan R) (groupby (y) ((c count*) (t (sum s))) (select (= y x) (scan S))))",
    );
    assert_unnests(
        "(djoin true (scan R) (groupby () ((mn (min s)) (mx (max s))) (select (= y x) (scan S))))",
    );
}

#[test]
fn nested_dependent_joins() {
    // the inner join's right side references both its own left (u) and the
    // outermost column (x)
    assert_unnests(
        "(djoin true (scan R)
           (groupby () ((c count*))
             (djoin true
               (select (= u x) (scan U))
               (select (and (= v u) (<= v x)) (scan V)))))",
    );
}

#[test]
fn dependent_join_with_its_own_predicate() {
    assert_unnests("(djoin (= y x) (scan R) (scan S))");
    assert_unnests("(djoin (< s x) (scan R) (select (= y x) (scan S)))");
}
