//! Deterministic random generation of values and relations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Attribute, Relation, Tuple, Value};

/// Bounds for randomized generation. Everything derived from a `GenSpec` and
/// a seed is a pure function of the two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub max_arity: usize,
    pub max_rows: usize,
    pub max_count: u64,
    pub value_pool: Vec<Value>,
    pub max_plan_depth: usize,
    pub max_dependent_joins: usize,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            max_arity: 3,
            max_rows: 6,
            max_count: 3,
            value_pool: vec![Value::Int(0), Value::Int(1), Value::Int(2), Value::Null],
            max_plan_depth: 4,
            max_dependent_joins: 2,
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn with_seed(seed: u64) -> Self {
        GenSpec { seed, ..GenSpec::default() }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// The rng for one trial: a pure function of the spec seed and trial index.
pub fn trial_rng(spec_seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(spec_seed ^ splitmix64(trial)))
}

pub fn random_value(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Value {
    let idx = rng.random_range(0..spec.value_pool.len());
    spec.value_pool[idx].clone()
}

/// A random relation over the given schema within the spec's bounds. In
/// duplicate-free mode every multiplicity is 1.
pub fn gen_relation_with(
    spec: &GenSpec,
    schema: &[Attribute],
    rng: &mut ChaCha8Rng,
    duplicate_free: bool,
) -> Relation {
    let rows = rng.random_range(0..=spec.max_rows);
    let mut rel = Relation::empty(schema.iter().cloned());
    for _ in 0..rows {
        let tuple = Tuple::from_pairs(
            schema.iter().map(|a| (a.clone(), random_value(spec, rng))),
        )
        .expect("schema attrs are distinct");
        if duplicate_free {
            if rel.count(&tuple) == 0 {
                rel.insert(tuple, 1).expect("schema matches");
            }
        } else {
            let n = rng.random_range(1..=spec.max_count);
            rel.insert(tuple, n).expect("schema matches");
        }
    }
    rel
}

/// Seed-addressed wrapper around [`gen_relation_with`].
pub fn gen_relation(spec: &GenSpec, schema: &[Attribute], seed: u64) -> Relation {
    let mut rng = trial_rng(spec.seed, seed);
    gen_relation_with(spec, schema, &mut rng, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = GenSpec::default();
        let schema = vec![Attribute::fresh("a"), Attribute::fresh("b")];
        let r1 = gen_relation(&spec, &schema, 42);
        let r2 = gen_relation(&spec, &schema, 42);
        assert_eq!(r1, r2);
    }

    #[test]
    fn max_rows_zero_yields_empty() {
        let spec = GenSpec { max_rows: 0, ..GenSpec::default() };
        let schema = vec![Attribute::fresh("a")];
        assert!(gen_relation(&spec, &schema, 7).is_empty());
    }

    #[test]
    fn duplicate_free_mode_has_unit_counts() {
        let spec = GenSpec::default();
        let schema = vec![Attribute::fresh("a")];
        for seed in 0..50 {
            let mut rng = trial_rng(spec.seed, seed);
            let rel = gen_relation_with(&spec, &schema, &mut rng, true);
            assert!(rel.is_duplicate_free());
        }
    }
}
