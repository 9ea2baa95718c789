//! Random generation of valid plans with correlated dependent joins: the
//! adversary for the end-to-end unnesting property.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{schema_of, AggFn, Attribute, CmpOp, Plan, ScalarExpr};
use crate::eval::Catalog;

use super::gen::{gen_relation_with, trial_rng, GenSpec};

pub struct PlanGen<'a> {
    spec: &'a GenSpec,
    rng: ChaCha8Rng,
    cat: Catalog,
    tables: usize,
    djoin_budget: usize,
}

/// A random closed plan plus the catalog backing its scans. Draws from all
/// node kinds and contains up to `spec.max_dependent_joins` dependent joins,
/// possibly nested, with predicates biased towards referencing outer
/// attributes.
pub fn gen_correlated_plan(spec: &GenSpec, seed: u64) -> (Plan, Catalog) {
    let mut pg = PlanGen {
        spec,
        rng: trial_rng(spec.seed, seed),
        cat: Catalog::new(),
        tables: 0,
        djoin_budget: spec.max_dependent_joins,
    };
    let plan = pg.gen_plan(spec.max_plan_depth, &[]);
    (plan, pg.cat)
}

impl<'a> PlanGen<'a> {
    fn fresh_table(&mut self) -> Plan {
        let arity = self.rng.random_range(1..=self.spec.max_arity);
        let attrs: Vec<Attribute> =
            (0..arity).map(|i| Attribute::fresh(format!("c{i}"))).collect();
        let name = format!("T{}", self.tables);
        self.tables += 1;
        let rel = gen_relation_with(self.spec, &attrs, &mut self.rng, false);
        self.cat.add_table(&name, rel);
        Plan::scan(name, attrs)
    }

    /// A plan with the same output attributes as `proto`, over its own data
    /// where possible (a twin table for scans, otherwise a filtered clone).
    fn same_schema_sibling(&mut self, proto: &Plan, outer: &[Attribute]) -> Plan {
        if let Plan::Scan { attrs, .. } = proto {
            let name = format!("T{}", self.tables);
            self.tables += 1;
            let rel = gen_relation_with(self.spec, attrs, &mut self.rng, false);
            self.cat.add_table(&name, rel);
            return Plan::scan(name, attrs.clone());
        }
        let clone = proto.clone();
        if self.rng.random_bool(0.6) {
            let schema = sorted_schema(&clone);
            let pred = self.gen_pred(&schema, outer);
            Plan::select(pred, clone)
        } else {
            clone
        }
    }

    fn pick<'b>(&mut self, attrs: &'b [Attribute]) -> &'b Attribute {
        &attrs[self.rng.random_range(0..attrs.len())]
    }

    fn gen_pred(&mut self, local: &[Attribute], outer: &[Attribute]) -> ScalarExpr {
        rand_pred(self.spec, &mut self.rng, local, outer)
    }

    fn gen_int_expr(&mut self, local: &[Attribute], outer: &[Attribute]) -> ScalarExpr {
        rand_int_expr(&mut self.rng, local, outer)
    }

    fn gen_plan(&mut self, depth: usize, outer: &[Attribute]) -> Plan {
        if depth == 0 || self.rng.random_bool(0.2) {
            return self.fresh_table();
        }
        // dependent joins first while budget lasts, so generated plans
        // actually exercise nesting
        if self.djoin_budget > 0 && self.rng.random_bool(0.45) {
            self.djoin_budget -= 1;
            return self.gen_dependent_join(depth, outer);
        }
        match self.rng.random_range(0..13) {
            0 => {
                let child = self.gen_plan(depth - 1, outer);
                let schema = sorted_schema(&child);
                Plan::select(self.gen_pred(&schema, outer), child)
            }
            1 => {
                let child = self.gen_plan(depth - 1, outer);
                let schema = sorted_schema(&child);
                let expr = self.gen_int_expr(&schema, outer);
                Plan::map(Attribute::fresh("m"), expr, child)
            }
            2 | 3 => {
                let child = self.gen_plan(depth - 1, outer);
                let schema = sorted_schema(&child);
                let keep = self.random_subset(&schema, true);
                if self.rng.random_bool(0.5) {
                    Plan::project(keep, child)
                } else {
                    Plan::project_distinct(keep, child)
                }
            }
            4 => {
                let child = self.gen_plan(depth - 1, outer);
                let schema = sorted_schema(&child);
                if schema.is_empty() {
                    return child;
                }
                let old = self.pick(&schema).clone();
                Plan::rename(Attribute::fresh(format!("{}r", old.base())), old, child)
            }
            5 | 6 => {
                let left = self.gen_plan(depth - 1, outer);
                let right = self.same_schema_sibling(&left, outer);
                match self.rng.random_range(0..3) {
                    0 => Plan::union(left, right),
                    1 => Plan::intersect(left, right),
                    _ => Plan::except(left, right),
                }
            }
            7 => {
                let left = self.gen_plan(depth - 1, outer);
                let right = self.gen_plan(depth - 1, outer);
                Plan::cross(left, right)
            }
            8 | 9 => {
                let left = self.gen_plan(depth - 1, outer);
                let right = self.gen_plan(depth - 1, outer);
                let mut local = sorted_schema(&left);
                local.extend(sorted_schema(&right));
                let pred = self.gen_pred(&local, outer);
                match self.rng.random_range(0..4) {
                    0 => Plan::join(pred, left, right),
                    1 => Plan::semi_join(pred, left, right),
                    2 => Plan::anti_join(pred, left, right),
                    _ => Plan::outer_join(pred, left, right),
                }
            }
            10 => {
                let child = self.gen_plan(depth - 1, outer);
                let schema = sorted_schema(&child);
                let mut attrs = self.random_subset(&schema, false);
                for i in 0..self.rng.random_range(1..=2) {
                    attrs.push(Attribute::fresh(format!("p{i}")));
                }
                Plan::null_pad(attrs, child)
            }
            _ => {
                let child = self.gen_plan(depth - 1, outer);
                let schema = sorted_schema(&child);
                let keys = self.random_subset(&schema, false);
                let mut aggs: Vec<(Attribute, AggFn)> = Vec::new();
                for i in 0..self.rng.random_range(1..=2) {
                    let func = if schema.is_empty() {
                        AggFn::CountStar
                    } else {
                        let input = self.pick(&schema).clone();
                        match self.rng.random_range(0..5) {
                            0 => AggFn::CountStar,
                            1 => AggFn::Count(input),
                            2 => AggFn::Sum(input),
                            3 => AggFn::Min(input),
                            _ => AggFn::Max(input),
                        }
                    };
                    aggs.push((Attribute::fresh(format!("g{i}")), func));
                }
                Plan::group_by(keys, aggs, child)
            }
        }
    }

    fn gen_dependent_join(&mut self, depth: usize, outer: &[Attribute]) -> Plan {
        let left = self.gen_plan(depth - 1, outer);
        let left_schema = sorted_schema(&left);
        // expose some left attributes to the right side
        let mut extended: Vec<Attribute> = outer.to_vec();
        let exposed = self.random_subset(&left_schema, !left_schema.is_empty());
        extended.extend(exposed.iter().cloned());
        let mut right = self.gen_plan(depth - 1, &extended);
        // the join should usually be genuinely correlated
        if !exposed.is_empty() && self.rng.random_bool(0.85) {
            let free = crate::algebra::free_vars_plan(&right).expect("generated plans are valid");
            if exposed.iter().all(|a| !free.contains(a)) {
                let local = sorted_schema(&right);
                let pred = rand_atom(self.spec, &mut self.rng, &local, &exposed);
                let pred = if pred.free_vars().iter().any(|a| exposed.contains(a)) {
                    pred
                } else {
                    let d = self.pick(&exposed).clone();
                    let rhs = if local.is_empty() {
                        ScalarExpr::lit(1)
                    } else {
                        ScalarExpr::attr(self.pick(&local).clone())
                    };
                    ScalarExpr::eq(ScalarExpr::attr(d), rhs)
                };
                right = Plan::select(pred, right);
            }
        }
        let mut visible = left_schema;
        visible.extend(sorted_schema(&right));
        let pred = if self.rng.random_bool(0.5) {
            ScalarExpr::lit(true)
        } else {
            self.gen_pred(&visible, outer)
        };
        Plan::dependent_join(pred, left, right)
    }

    fn random_subset(&mut self, attrs: &[Attribute], nonempty: bool) -> Vec<Attribute> {
        let mut out: Vec<Attribute> =
            attrs.iter().filter(|_| self.rng.random_bool(0.5)).cloned().collect();
        if out.is_empty() && nonempty && !attrs.is_empty() {
            out.push(self.pick(attrs).clone());
        }
        out
    }
}

fn sorted_schema(plan: &Plan) -> Vec<Attribute> {
    schema_of(plan).expect("generated plans are valid").into_iter().collect()
}

fn pick_from<'b>(rng: &mut ChaCha8Rng, attrs: &'b [Attribute]) -> &'b Attribute {
    &attrs[rng.random_range(0..attrs.len())]
}

fn rand_operand(
    spec: &GenSpec,
    rng: &mut ChaCha8Rng,
    local: &[Attribute],
    outer: &[Attribute],
    prefer_outer: bool,
) -> ScalarExpr {
    if prefer_outer && !outer.is_empty() {
        ScalarExpr::attr(pick_from(rng, outer).clone())
    } else if !local.is_empty() && rng.random_bool(0.75) {
        ScalarExpr::attr(pick_from(rng, local).clone())
    } else if !outer.is_empty() && rng.random_bool(0.3) {
        ScalarExpr::attr(pick_from(rng, outer).clone())
    } else {
        ScalarExpr::lit(super::gen::random_value(spec, rng))
    }
}

/// One comparison; references an outer attribute with high probability when
/// any is available.
pub(super) fn rand_atom(
    spec: &GenSpec,
    rng: &mut ChaCha8Rng,
    local: &[Attribute],
    outer: &[Attribute],
) -> ScalarExpr {
    let prefer_outer = !outer.is_empty() && rng.random_bool(0.7);
    let lhs = rand_operand(spec, rng, local, outer, prefer_outer);
    let rhs = rand_operand(spec, rng, local, outer, false);
    match rng.random_range(0..8) {
        0 => ScalarExpr::null_safe_eq(lhs, rhs),
        1 => ScalarExpr::is_null(lhs),
        2 => ScalarExpr::cmp(CmpOp::Lt, lhs, rhs),
        3 => ScalarExpr::cmp(CmpOp::Le, lhs, rhs),
        4 => ScalarExpr::cmp(CmpOp::Ne, lhs, rhs),
        _ => ScalarExpr::eq(lhs, rhs),
    }
}

pub(super) fn rand_pred(
    spec: &GenSpec,
    rng: &mut ChaCha8Rng,
    local: &[Attribute],
    outer: &[Attribute],
) -> ScalarExpr {
    let first = rand_atom(spec, rng, local, outer);
    match rng.random_range(0..4) {
        0 => first,
        1 => ScalarExpr::and(first, rand_atom(spec, rng, local, outer)),
        2 => ScalarExpr::or(first, rand_atom(spec, rng, local, outer)),
        _ => {
            if rng.random_bool(0.3) {
                ScalarExpr::not(first)
            } else {
                first
            }
        }
    }
}

/// Integer-valued expression over the given attributes; table columns only
/// ever hold integers or NULL, which keeps aggregates well-typed.
pub(super) fn rand_int_expr(
    rng: &mut ChaCha8Rng,
    local: &[Attribute],
    outer: &[Attribute],
) -> ScalarExpr {
    let leaf = |rng: &mut ChaCha8Rng| -> ScalarExpr {
        if !outer.is_empty() && rng.random_bool(0.4) {
            ScalarExpr::attr(pick_from(rng, outer).clone())
        } else if !local.is_empty() && rng.random_bool(0.8) {
            ScalarExpr::attr(pick_from(rng, local).clone())
        } else {
            ScalarExpr::lit(rng.random_range(0..3i64))
        }
    };
    let l = leaf(rng);
    if rng.random_bool(0.5) {
        let r = leaf(rng);
        let op = match rng.random_range(0..3) {
            0 => crate::algebra::ArithOp::Add,
            1 => crate::algebra::ArithOp::Sub,
            _ => crate::algebra::ArithOp::Mul,
        };
        ScalarExpr::arith(op, l, r)
    } else {
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::validate;

    #[test]
    fn generated_plans_are_valid_closed_and_deterministic() {
        let spec = GenSpec::default();
        for seed in 0..200 {
            let (p1, _) = gen_correlated_plan(&spec, seed);
            validate(&p1).unwrap();
            assert!(
                crate::algebra::free_vars_plan(&p1).unwrap().is_empty(),
                "plan {seed} is not closed"
            );
        }
        let (a, _) = gen_correlated_plan(&spec, 17);
        let (b, _) = gen_correlated_plan(&spec, 17);
        assert!(crate::text::plan_alpha_eq(&a, &b), "same seed must replay the same plan");
    }

    #[test]
    fn value_literals_stay_in_pool() {
        let spec = GenSpec::default();
        let v = super::super::gen::random_value(&spec, &mut trial_rng(0, 3));
        assert!(spec.value_pool.contains(&v));
    }
}
