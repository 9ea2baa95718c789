//! One randomized equivalence suite per proven rewrite, plus deliberately
//! broken variants that prove the harness can catch a wrong rule.
//!
//! Every suite builds the rewrite's exact left/right plan shapes around
//! freshly generated relations, respecting the side conditions (duplicate
//! free domains, independent sides where required, disjoint schemas), and
//! compares the evaluation results as exact multisets.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{
    schema_of, AggFn, Attribute, Plan, Relation, ScalarExpr, Tuple, Value,
};
use crate::eval::{evaluate, BindEnv, Catalog};

use super::check::{diff_relations, failure, EquivalenceReport, Failure};
use super::gen::{gen_relation_with, trial_rng, GenSpec};
use super::plangen::{rand_int_expr, rand_pred};

/// The rewrites with a proof behind them; suite ids for `run_lemma_suite`.
pub const PAPER_SUITES: [&str; 20] = [
    "L3.1", "L3.2", "L4.2", "L4.3", "L4.4", "L4.5", "L4.6", "L4.7", "L4.8", "L4.9", "L4.10",
    "L4.11", "L4.12", "L4.13", "L4.14", "L4.15", "L4.16", "L4.17", "L4.18", "T4.1",
];

/// Additional suites: the domain-superset variant of the decomposition and
/// three mutations that must fail.
pub const EXTRA_SUITES: [&str; 4] =
    ["T4.1-superset", "M-drop-replication", "M-drop-natural-equality", "M-3vl-equality"];

pub fn all_suite_ids() -> Vec<&'static str> {
    PAPER_SUITES.iter().chain(EXTRA_SUITES.iter()).copied().collect()
}

enum Expected {
    /// Exact multiset equality of the two plan evaluations.
    Equal,
    /// `m_left(x) > 0` implies `m_right(x) = m_left(x)` (which also gives
    /// right ⊇ left).
    OneSidedCounts,
    /// Left plan evaluates to exactly this relation.
    EqualsRelation(Relation),
}

struct LemmaCase {
    cat: Catalog,
    left: Plan,
    right: Plan,
    expected: Expected,
}

impl LemmaCase {
    fn verify(&self) -> Result<(), String> {
        match &self.expected {
            Expected::Equal => {
                super::check::check_equivalence(&self.left, &self.right, &self.cat)
            }
            Expected::OneSidedCounts => {
                let t1 = evaluate(&self.left, &self.cat, &BindEnv::empty())
                    .map_err(|e| format!("left plan failed to evaluate: {e}"))?;
                let t2 = evaluate(&self.right, &self.cat, &BindEnv::empty())
                    .map_err(|e| format!("right plan failed to evaluate: {e}"))?;
                if t1.schema() != t2.schema() {
                    return Err("schemas differ".to_owned());
                }
                for (t, n) in t1.iter() {
                    let m = t2.count(t);
                    if m != n {
                        return Err(format!("tuple {t}: left count {n}, right count {m}"));
                    }
                }
                Ok(())
            }
            Expected::EqualsRelation(oracle) => {
                let got = evaluate(&self.left, &self.cat, &BindEnv::empty())
                    .map_err(|e| format!("plan failed to evaluate: {e}"))?;
                diff_relations(&got, oracle)
            }
        }
    }
}

struct LemmaCtx<'a> {
    spec: &'a GenSpec,
    rng: ChaCha8Rng,
    cat: Catalog,
    tables: usize,
}

impl<'a> LemmaCtx<'a> {
    fn new(id: &str, spec: &'a GenSpec, seed: u64) -> Self {
        let tag = id.bytes().fold(0u64, |acc, b| acc.wrapping_mul(131).wrapping_add(b as u64));
        LemmaCtx { spec, rng: trial_rng(spec.seed ^ tag, seed), cat: Catalog::new(), tables: 0 }
    }

    fn attrs(&mut self, base: &str, min: usize, max: usize) -> Vec<Attribute> {
        let n = self.rng.random_range(min..=max);
        (0..n).map(|i| Attribute::fresh(format!("{base}{i}"))).collect()
    }

    fn table(&mut self, attrs: &[Attribute], duplicate_free: bool) -> Plan {
        let rel = gen_relation_with(self.spec, attrs, &mut self.rng, duplicate_free);
        self.table_with(attrs, rel)
    }

    fn table_with(&mut self, attrs: &[Attribute], rel: Relation) -> Plan {
        let name = format!("B{}", self.tables);
        self.tables += 1;
        self.cat.add_table(&name, rel);
        Plan::scan(name, attrs.iter().cloned())
    }

    /// A duplicate-free domain relation `D` with 1..=`max_arity` columns.
    fn domain(&mut self, max_arity: usize) -> (Plan, Vec<Attribute>) {
        let ds = self.attrs("d", 1, max_arity);
        let plan = self.table(&ds, true);
        (plan, ds)
    }

    /// Like [`LemmaCtx::domain`] but guaranteeing a NULL row and at least
    /// one non-NULL row, for the NULL-sensitivity suites.
    fn null_domain(&mut self) -> (Plan, Vec<Attribute>) {
        let d = Attribute::fresh("d");
        let mut rel = gen_relation_with(self.spec, std::slice::from_ref(&d), &mut self.rng, true);
        for v in [Value::Null, Value::Int(1)] {
            let row = Tuple::single(d.clone(), v);
            if rel.count(&row) == 0 {
                rel.insert(row, 1).expect("schema matches");
            }
        }
        let plan = self.table_with(std::slice::from_ref(&d), rel);
        (plan, vec![d])
    }

    fn pred(&mut self, local: &[Attribute], outer: &[Attribute]) -> ScalarExpr {
        rand_pred(self.spec, &mut self.rng, local, outer)
    }

    /// A predicate that definitely references a domain column.
    fn corr_pred(&mut self, local: &[Attribute], ds: &[Attribute]) -> ScalarExpr {
        let d = ds[self.rng.random_range(0..ds.len())].clone();
        let rhs = if local.is_empty() || self.rng.random_bool(0.2) {
            ScalarExpr::lit(super::gen::random_value(self.spec, &mut self.rng))
        } else {
            ScalarExpr::attr(local[self.rng.random_range(0..local.len())].clone())
        };
        let atom = match self.rng.random_range(0..4) {
            0 => ScalarExpr::null_safe_eq(ScalarExpr::attr(d), rhs),
            1 => ScalarExpr::cmp(crate::algebra::CmpOp::Le, ScalarExpr::attr(d), rhs),
            _ => ScalarExpr::eq(ScalarExpr::attr(d), rhs),
        };
        if self.rng.random_bool(0.3) {
            ScalarExpr::and(atom, self.pred(local, ds))
        } else {
            atom
        }
    }

    /// A relational expression with `F(T) ⊆ ds` that actually references a
    /// domain column: selections, maps or projections over a fresh table.
    fn corr_subtree(&mut self, ds: &[Attribute]) -> Plan {
        let s_attrs = self.attrs("s", 1, 2);
        let scan = self.table(&s_attrs, false);
        let plan = match self.rng.random_range(0..4) {
            0 => {
                let p = self.corr_pred(&s_attrs, ds);
                Plan::select(p, scan)
            }
            1 => {
                // a map keeps rows for every binding, which exercises the
                // NULL groups of the domain
                let m = Attribute::fresh("m");
                let d = ds[self.rng.random_range(0..ds.len())].clone();
                let expr = ScalarExpr::add(
                    ScalarExpr::attr(d),
                    rand_int_expr(&mut self.rng, &s_attrs, &[]),
                );
                Plan::map(m, expr, scan)
            }
            2 => {
                let m = Attribute::fresh("m");
                let d = ds[self.rng.random_range(0..ds.len())].clone();
                let mapped = Plan::map(m.clone(), ScalarExpr::attr(d), scan);
                let p = self.pred(&[s_attrs.clone(), vec![m]].concat(), ds);
                Plan::select(p, mapped)
            }
            _ => {
                let p = self.corr_pred(&s_attrs, ds);
                let filtered = Plan::select(p, scan);
                let keep: Vec<Attribute> = s_attrs
                    .iter()
                    .filter(|_| self.rng.random_bool(0.6))
                    .cloned()
                    .collect();
                let keep = if keep.is_empty() { s_attrs.clone() } else { keep };
                if self.rng.random_bool(0.5) {
                    Plan::project(keep, filtered)
                } else {
                    Plan::project_distinct(keep, filtered)
                }
            }
        };
        plan
    }

    fn subset(&mut self, attrs: &[Attribute], nonempty: bool) -> Vec<Attribute> {
        let mut out: Vec<Attribute> =
            attrs.iter().filter(|_| self.rng.random_bool(0.5)).cloned().collect();
        if out.is_empty() && nonempty && !attrs.is_empty() {
            out.push(attrs[self.rng.random_range(0..attrs.len())].clone());
        }
        out
    }

    fn aggs(&mut self, schema: &[Attribute]) -> Vec<(Attribute, AggFn)> {
        let n = self.rng.random_range(1..=2);
        (0..n)
            .map(|i| {
                let func = if schema.is_empty() {
                    AggFn::CountStar
                } else {
                    let input = schema[self.rng.random_range(0..schema.len())].clone();
                    match self.rng.random_range(0..5) {
                        0 => AggFn::CountStar,
                        1 => AggFn::Count(input),
                        2 => AggFn::Sum(input),
                        3 => AggFn::Min(input),
                        _ => AggFn::Max(input),
                    }
                };
                (Attribute::fresh(format!("g{i}")), func)
            })
            .collect()
    }
}

/// A dependent cross product `D ▶ T`.
fn dep(d: Plan, t: Plan) -> Plan {
    Plan::dependent_join(ScalarExpr::lit(true), d, t)
}

fn sorted(plan: &Plan) -> Vec<Attribute> {
    schema_of(plan).expect("lemma shapes are valid").into_iter().collect()
}

/// Wraps `plan` in a rename chain giving every attribute of `attrs` a fresh
/// name. Returns the renamed plan, the fresh names aligned with `attrs`, and
/// the substitution map.
fn rename_all(plan: &Plan, attrs: &[Attribute]) -> (Plan, Vec<Attribute>, BTreeMap<Attribute, Attribute>) {
    let mut renamed = plan.clone();
    let mut map = BTreeMap::new();
    let mut fresh = Vec::new();
    for a in attrs {
        let copy = a.renamed_copy();
        renamed = Plan::rename(copy.clone(), a.clone(), renamed);
        map.insert(a.clone(), copy.clone());
        fresh.push(copy);
    }
    (renamed, fresh, map)
}

/// Renames the domain columns of a domain-plan copy to fresh names and
/// re-bases a dependent subtree onto them. Returns the renamed domain plan,
/// the re-based subtree and the fresh names aligned with `ds`.
fn replicate_domain(
    domain: &Plan,
    ds: &[Attribute],
    subtree: &Plan,
) -> (Plan, Plan, Vec<Attribute>) {
    let (renamed, fresh, map) = rename_all(domain, ds);
    (renamed, subtree.substitute_attrs(&map), fresh)
}

fn null_safe_all(pairs: impl IntoIterator<Item = (Attribute, Attribute)>) -> Vec<ScalarExpr> {
    pairs
        .into_iter()
        .map(|(a, b)| ScalarExpr::null_safe_eq(ScalarExpr::attr(a), ScalarExpr::attr(b)))
        .collect()
}

/// `m(x) = m_R1(x|A(R1)) · m_R2(x|A(R2))`, computed directly from the two
/// stored relations; the independent oracle for the natural-join shorthand.
fn natural_join_oracle(r1: &Relation, r2: &Relation) -> Relation {
    let shared: Vec<Attribute> =
        r1.schema().intersection(r2.schema()).cloned().collect();
    let rest2: Vec<Attribute> =
        r2.schema().difference(r1.schema()).cloned().collect();
    let mut schema = r1.schema().clone();
    schema.extend(r2.schema().iter().cloned());
    let mut out = Relation::empty(schema);
    for (t1, n1) in r1.iter() {
        for (t2, n2) in r2.iter() {
            let k1 = t1.restrict(&shared).expect("shared in schema");
            let k2 = t2.restrict(&shared).expect("shared in schema");
            if k1 == k2 {
                let x = t1
                    .concat(&t2.restrict(&rest2).expect("rest in schema"))
                    .expect("disjoint by construction");
                out.insert(x, n1 * n2).expect("schema matches");
            }
        }
    }
    out
}

fn build_case(id: &str, spec: &GenSpec, seed: u64) -> Option<LemmaCase> {
    let mut ctx = LemmaCtx::new(id, spec, seed);
    let case = match id {
        "L3.1" => {
            // an uncorrelated dependent join is a regular join
            let xs = ctx.attrs("x", 1, 2);
            let ys = ctx.attrs("y", 1, 2);
            let r1 = ctx.table(&xs, false);
            let r2 = ctx.table(&ys, false);
            let p = ctx.pred(&[xs, ys].concat(), &[]);
            LemmaCase {
                left: Plan::dependent_join(p.clone(), r1.clone(), r2.clone()),
                right: Plan::join(p, r1, r2),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "L3.2" => {
            // the rename-based natural join matches the product of
            // characteristic functions
            let shared = ctx.attrs("c", 1, 2);
            let priv1 = ctx.attrs("u", 0, 1);
            let priv2 = ctx.attrs("v", 0, 1);
            let a1: Vec<Attribute> = shared.iter().chain(&priv1).cloned().collect();
            let a2: Vec<Attribute> = shared.iter().chain(&priv2).cloned().collect();
            let s1 = ctx.table(&a1, false);
            let s2 = ctx.table(&a2, false);
            let (renamed, fresh, _) = rename_all(&s2, &shared);
            let eqs = null_safe_all(shared.iter().cloned().zip(fresh.iter().cloned()));
            let joined = Plan::join(ScalarExpr::and_all(eqs), s1.clone(), renamed);
            let keep: Vec<Attribute> = a1.iter().chain(&a2).cloned().collect();
            let plan = Plan::project(keep, joined);
            let oracle = {
                let rel1 = ctx.cat.get("B0").expect("table B0").clone();
                let rel2 = ctx.cat.get("B1").expect("table B1").clone();
                natural_join_oracle(&rel1, &rel2)
            };
            LemmaCase {
                left: plan.clone(),
                right: plan,
                cat: ctx.cat,
                expected: Expected::EqualsRelation(oracle),
            }
        }
        "L4.2" => {
            // substituting a map for the domain join yields a superset with
            // identical counts on the exact result's support
            let (dplan, ds) = ctx.domain(1);
            let d = ds[0].clone();
            let r_attrs = ctx.attrs("a", 1, 2);
            let r = ctx.table(&r_attrs, false);
            let a = r_attrs[0].clone();
            let eq = |ctx_d: Attribute| {
                ScalarExpr::eq(ScalarExpr::attr(ctx_d), ScalarExpr::attr(a.clone()))
            };
            LemmaCase {
                left: Plan::select(eq(d.clone()), Plan::cross(dplan, r.clone())),
                right: Plan::select(eq(d.clone()), Plan::map(d, ScalarExpr::attr(a.clone()), r)),
                cat: ctx.cat,
                expected: Expected::OneSidedCounts,
            }
        }
        "L4.3" | "L4.4" => {
            let (dplan, ds) = ctx.domain(2);
            let sub = ctx.corr_subtree(&ds);
            let schema = sorted(&sub);
            let keep = ctx.subset(&schema, false);
            let wide: Vec<Attribute> = keep.iter().chain(&ds).cloned().collect();
            let proj: fn(Vec<Attribute>, Plan) -> Plan = if id == "L4.3" {
                |a, p| Plan::project_distinct(a, p)
            } else {
                |a, p| Plan::project(a, p)
            };
            LemmaCase {
                left: dep(dplan.clone(), proj(keep, sub.clone())),
                right: proj(wide, dep(dplan, sub)),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "L4.5" | "L4.6" | "L4.7" => {
            // set operations replicate the dependent join on both sides
            let (dplan, ds) = ctx.domain(2);
            let s_attrs = ctx.attrs("s", 1, 2);
            let scan1 = ctx.table(&s_attrs, false);
            let scan2 = ctx.table(&s_attrs, false);
            let (s1, s2) = if ctx.rng.random_bool(0.3) {
                let m = Attribute::fresh("m");
                let d = ds[0].clone();
                let e1 = ScalarExpr::add(
                    ScalarExpr::attr(d.clone()),
                    rand_int_expr(&mut ctx.rng, &s_attrs, &[]),
                );
                let e2 = ScalarExpr::attr(d);
                (Plan::map(m.clone(), e1, scan1), Plan::map(m, e2, scan2))
            } else {
                let p1 = ctx.corr_pred(&s_attrs, &ds);
                let p2 = ctx.corr_pred(&s_attrs, &ds);
                (Plan::select(p1, scan1), Plan::select(p2, scan2))
            };
            let op: fn(Plan, Plan) -> Plan = match id {
                "L4.5" => Plan::union,
                "L4.6" => Plan::intersect,
                _ => Plan::except,
            };
            LemmaCase {
                left: dep(dplan.clone(), op(s1.clone(), s2.clone())),
                right: op(dep(dplan.clone(), s1), dep(dplan, s2)),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "L4.8" => {
            let (dplan, ds) = ctx.domain(2);
            let s_attrs = ctx.attrs("s", 1, 2);
            let r = ctx.table(&s_attrs, false);
            let p = ctx.corr_pred(&s_attrs, &ds);
            LemmaCase {
                left: dep(dplan.clone(), Plan::select(p.clone(), r.clone())),
                right: Plan::select(p, dep(dplan, r)),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "L4.9" => {
            let (dplan, ds) = ctx.domain(2);
            let s_attrs = ctx.attrs("s", 1, 2);
            let r = ctx.table(&s_attrs, false);
            let m = Attribute::fresh("m");
            let f = ScalarExpr::add(
                ScalarExpr::attr(ds[ctx.rng.random_range(0..ds.len())].clone()),
                rand_int_expr(&mut ctx.rng, &s_attrs, &[]),
            );
            LemmaCase {
                left: dep(dplan.clone(), Plan::map(m.clone(), f.clone(), r.clone())),
                right: Plan::map(m, f, dep(dplan, r)),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "L4.10" | "L4.11" => {
            let (dplan, ds) = ctx.domain(2);
            let corr = ctx.corr_subtree(&ds);
            let ind_attrs = ctx.attrs("t", 1, 2);
            let ind = ctx.table(&ind_attrs, false);
            let corr_left = ctx.rng.random_bool(0.5);
            let (l, r) = if corr_left { (corr.clone(), ind.clone()) } else { (ind.clone(), corr.clone()) };
            if id == "L4.10" {
                let pushed = if corr_left {
                    Plan::cross(dep(dplan.clone(), corr), ind)
                } else {
                    Plan::cross(ind, dep(dplan.clone(), corr))
                };
                LemmaCase {
                    left: dep(dplan, Plan::cross(l, r)),
                    right: pushed,
                    cat: ctx.cat,
                    expected: Expected::Equal,
                }
            } else {
                let visible: Vec<Attribute> =
                    [sorted(&l), sorted(&r), ds.clone()].concat();
                let p = ctx.pred(&visible, &[]);
                let pushed = if corr_left {
                    Plan::join(p.clone(), dep(dplan.clone(), corr), ind)
                } else {
                    Plan::join(p.clone(), ind, dep(dplan.clone(), corr))
                };
                LemmaCase {
                    left: dep(dplan, Plan::join(p, l, r)),
                    right: pushed,
                    cat: ctx.cat,
                    expected: Expected::Equal,
                }
            }
        }
        "L4.12" | "L4.13" => {
            // both sides depend on the domain: replicate it, join the copies
            // on null-safe equality, keep the left copy
            let (dplan, ds) = ctx.domain(2);
            let r1 = ctx.corr_subtree(&ds);
            let r2 = ctx.corr_subtree(&ds);
            let p = if id == "L4.13" {
                let visible: Vec<Attribute> =
                    [sorted(&r1), sorted(&r2), ds.clone()].concat();
                Some(ctx.pred(&visible, &[]))
            } else {
                None
            };
            let inner = match &p {
                Some(p) => Plan::join(p.clone(), r1.clone(), r2.clone()),
                None => Plan::cross(r1.clone(), r2.clone()),
            };
            let (renamed_d, r2p, fresh) = replicate_domain(&dplan, &ds, &r2);
            let mut conjuncts = p.into_iter().collect::<Vec<_>>();
            conjuncts.extend(null_safe_all(ds.iter().cloned().zip(fresh.iter().cloned())));
            let joined = Plan::join(
                ScalarExpr::and_all(conjuncts),
                dep(dplan.clone(), r1.clone()),
                dep(renamed_d, r2p),
            );
            let keep: Vec<Attribute> =
                [ds.clone(), sorted(&r1), sorted(&r2)].concat();
            LemmaCase {
                left: dep(dplan, inner),
                right: Plan::project(keep, joined),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "L4.14" => {
            let (dplan, ds) = ctx.domain(2);
            let sub = ctx.corr_subtree(&ds);
            let schema = sorted(&sub);
            let keys = ctx.subset(&schema, false);
            let aggs = ctx.aggs(&schema);
            let wide_keys: Vec<Attribute> = keys.iter().chain(&ds).cloned().collect();
            LemmaCase {
                left: dep(dplan.clone(), Plan::group_by(keys, aggs.clone(), sub.clone())),
                right: Plan::group_by(wide_keys, aggs, dep(dplan, sub)),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "L4.15" | "L4.16" | "L4.17" => {
            let build: fn(ScalarExpr, Plan, Plan) -> Plan = match id {
                "L4.15" => Plan::semi_join,
                "L4.16" => Plan::anti_join,
                _ => Plan::outer_join,
            };
            let (dplan, ds) = ctx.domain(2);
            let r1 = ctx.corr_subtree(&ds);
            if ctx.rng.random_bool(0.5) {
                // special case: independent right side
                let t_attrs = ctx.attrs("t", 1, 2);
                let r2 = ctx.table(&t_attrs, false);
                let visible: Vec<Attribute> =
                    [sorted(&r1), t_attrs.clone(), ds.clone()].concat();
                let p = ctx.pred(&visible, &[]);
                LemmaCase {
                    left: dep(dplan.clone(), build(p.clone(), r1.clone(), r2.clone())),
                    right: build(p, dep(dplan, r1), r2),
                    cat: ctx.cat,
                    expected: Expected::Equal,
                }
            } else {
                let r2 = ctx.corr_subtree(&ds);
                let visible: Vec<Attribute> =
                    [sorted(&r1), sorted(&r2), ds.clone()].concat();
                let p = ctx.pred(&visible, &[]);
                let (renamed_d, r2p, fresh) = replicate_domain(&dplan, &ds, &r2);
                let mut conjuncts = vec![p.clone()];
                conjuncts.extend(null_safe_all(ds.iter().cloned().zip(fresh.iter().cloned())));
                let node = build(
                    ScalarExpr::and_all(conjuncts),
                    dep(dplan.clone(), r1.clone()),
                    dep(renamed_d, r2p),
                );
                let right = if id == "L4.17" {
                    // the outer join keeps the right side: drop its domain copy
                    let keep: Vec<Attribute> =
                        [ds.clone(), sorted(&r1), sorted(&r2)].concat();
                    Plan::project(keep, node)
                } else {
                    node
                };
                LemmaCase {
                    left: dep(dplan, build(p, r1, r2)),
                    right,
                    cat: ctx.cat,
                    expected: Expected::Equal,
                }
            }
        }
        "L4.18" => {
            // a nested dependent join: the domain goes down the left side
            let (dplan, ds) = ctx.domain(2);
            let r1_attrs = ctx.attrs("u", 1, 2);
            let r1 = ctx.table(&r1_attrs, false);
            let mut refs = r1_attrs.clone();
            if ctx.rng.random_bool(0.5) {
                refs.extend(ds.iter().cloned());
            }
            let r2 = ctx.corr_subtree(&refs);
            let visible: Vec<Attribute> =
                [r1_attrs.clone(), sorted(&r2), ds.clone()].concat();
            let q = ctx.pred(&visible, &[]);
            LemmaCase {
                left: dep(dplan.clone(), Plan::dependent_join(q.clone(), r1.clone(), r2.clone())),
                right: Plan::dependent_join(q, dep(dplan, r1), r2),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "T4.1" | "T4.1-superset" => {
            let r1_attrs = ctx.attrs("x", 1, 3);
            let r1 = ctx.table(&r1_attrs, false);
            let a_d = ctx.subset(&r1_attrs, true);
            let r2 = ctx.corr_subtree(&a_d);
            let visible: Vec<Attribute> = [r1_attrs.clone(), sorted(&r2)].concat();
            let p = ctx.pred(&visible, &[]);

            let core = Plan::project_distinct(a_d.clone(), r1.clone());
            let dplan = if id == "T4.1" {
                core
            } else {
                // a strict duplicate-free superset: a guaranteed new row
                // (values outside the generator pool) plus random extras
                let mut extra = gen_relation_with(ctx.spec, &a_d, &mut ctx.rng, true);
                let novel = Tuple::from_pairs(
                    a_d.iter().map(|a| (a.clone(), Value::Int(7))),
                )
                .expect("distinct attrs");
                if extra.count(&novel) == 0 {
                    extra.insert(novel, 1).expect("schema matches");
                }
                let extra_scan = ctx.table_with(&a_d, extra);
                Plan::project_distinct(a_d.clone(), Plan::union(core, extra_scan))
            };

            let (renamed_d, r2p, fresh) = replicate_domain(&dplan, &a_d, &r2);
            let mut conjuncts = vec![p.clone()];
            conjuncts.extend(null_safe_all(a_d.iter().cloned().zip(fresh.iter().cloned())));
            let joined = Plan::join(
                ScalarExpr::and_all(conjuncts),
                r1.clone(),
                dep(renamed_d, r2p),
            );
            let keep: Vec<Attribute> = [r1_attrs.clone(), sorted(&r2)].concat();
            LemmaCase {
                left: Plan::dependent_join(p, r1, r2),
                right: Plan::project(keep, joined),
                cat: ctx.cat,
                expected: Expected::Equal,
            }
        }
        "M-drop-replication" | "M-drop-natural-equality" | "M-3vl-equality" => {
            // broken variants of the both-sides decomposition, on a domain
            // with a guaranteed NULL value
            let (dplan, ds) = ctx.null_domain();
            let d = ds[0].clone();
            let r1 = mutant_side(&mut ctx, &d);
            let r2 = mutant_side(&mut ctx, &d);
            let left = dep(dplan.clone(), Plan::cross(r1.clone(), r2.clone()));
            let right = match id {
                "M-drop-replication" => {
                    // the right side keeps its free domain reference
                    Plan::join(ScalarExpr::lit(true), dep(dplan.clone(), r1.clone()), r2.clone())
                }
                other => {
                    let (renamed_d, r2p, fresh) = replicate_domain(&dplan, &ds, &r2);
                    let cond = if other == "M-drop-natural-equality" {
                        ScalarExpr::lit(true)
                    } else {
                        // 3VL equality instead of null-safe equality
                        ScalarExpr::eq(
                            ScalarExpr::attr(d.clone()),
                            ScalarExpr::attr(fresh[0].clone()),
                        )
                    };
                    let joined =
                        Plan::join(cond, dep(dplan.clone(), r1.clone()), dep(renamed_d, r2p));
                    let keep: Vec<Attribute> =
                        [ds.clone(), sorted(&r1), sorted(&r2)].concat();
                    Plan::project(keep, joined)
                }
            };
            LemmaCase { left, right, cat: ctx.cat, expected: Expected::Equal }
        }
        _ => return None,
    };
    Some(case)
}

/// A correlated side that stays productive under a NULL binding (a map, not
/// a filter), so NULL domain groups carry rows.
fn mutant_side(ctx: &mut LemmaCtx, d: &Attribute) -> Plan {
    let s = Attribute::fresh("s");
    let mut rel = gen_relation_with(ctx.spec, std::slice::from_ref(&s), &mut ctx.rng, false);
    if rel.is_empty() {
        rel.insert(Tuple::single(s.clone(), Value::Int(1)), 1).expect("schema matches");
    }
    let scan = ctx.table_with(std::slice::from_ref(&s), rel);
    let m = Attribute::fresh("m");
    Plan::map(
        m,
        ScalarExpr::add(ScalarExpr::attr(d.clone()), ScalarExpr::attr(s)),
        scan,
    )
}

/// Runs `trials` randomized instances of one suite. On a failure the trial
/// is replayed with decreasing row bounds (same seed) and the smallest still
/// failing configuration is reported.
pub fn run_lemma_suite(id: &str, trials: u64, spec: &GenSpec) -> Result<EquivalenceReport, String> {
    if build_case(id, spec, 0).is_none() {
        return Err(format!("unknown lemma id '{id}' (known: {})", all_suite_ids().join(", ")));
    }
    let mut failures: Vec<Failure> = Vec::new();
    for trial in 0..trials {
        let case = build_case(id, spec, trial).expect("id checked above");
        if let Err(diff) = case.verify() {
            failures.push(shrink(id, spec, trial, case, diff));
        }
    }
    Ok(EquivalenceReport { suite: id.to_owned(), trials, failures })
}

fn shrink(id: &str, spec: &GenSpec, trial: u64, case: LemmaCase, diff: String) -> Failure {
    for rows in 1..spec.max_rows {
        let smaller = GenSpec { max_rows: rows, ..spec.clone() };
        let candidate = build_case(id, &smaller, trial).expect("id already validated");
        if let Err(d) = candidate.verify() {
            return failure(
                id,
                trial,
                d,
                &candidate.left,
                &candidate.right,
                &candidate.cat,
                rows,
                smaller.max_plan_depth,
            );
        }
    }
    failure(id, trial, diff, &case.left, &case.right, &case.cat, spec.max_rows, spec.max_plan_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_id_is_rejected() {
        assert!(run_lemma_suite("L9.9", 1, &GenSpec::default()).is_err());
    }

    #[test]
    fn natural_join_oracle_multiplies_counts() {
        let c = Attribute::fresh("c");
        let u = Attribute::fresh("u");
        let mut r1 = Relation::empty([c.clone(), u.clone()]);
        r1.insert(
            Tuple::from_pairs([(c.clone(), Value::Int(1)), (u.clone(), Value::Int(5))]).unwrap(),
            2,
        )
        .unwrap();
        let mut r2 = Relation::empty([c.clone()]);
        r2.insert(Tuple::single(c.clone(), Value::Int(1)), 3).unwrap();
        r2.insert(Tuple::single(c.clone(), Value::Int(2)), 1).unwrap();
        let out = natural_join_oracle(&r1, &r2);
        assert_eq!(out.total(), 6);

        // NULL is an ordinary value for the natural condition
        let mut r3 = Relation::empty([c.clone()]);
        r3.insert(Tuple::single(c.clone(), Value::Null), 1).unwrap();
        let mut r4 = Relation::empty([c.clone()]);
        r4.insert(Tuple::single(c.clone(), Value::Null), 2).unwrap();
        assert_eq!(natural_join_oracle(&r3, &r4).total(), 2);
    }

    #[test]
    fn every_suite_runs_a_few_trials() {
        let spec = GenSpec::default();
        for id in PAPER_SUITES {
            let report = run_lemma_suite(id, 10, &spec).unwrap();
            assert!(report.passed(), "{}", report.summary());
        }
    }

    #[test]
    fn mutation_suites_fail() {
        let spec = GenSpec::default();
        for id in ["M-drop-replication", "M-drop-natural-equality", "M-3vl-equality"] {
            let report = run_lemma_suite(id, 60, &spec).unwrap();
            assert!(!report.passed(), "mutation {id} was not caught");
        }
    }
}
