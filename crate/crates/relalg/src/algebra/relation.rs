//! Relations: finite multisets of same-schema tuples, stored as their
//! characteristic function (tuple -> positive multiplicity).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::attribute::Attribute;
use super::tuple::Tuple;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error("tuple attributes {got} do not match relation schema {want}")]
    SchemaMismatch { want: String, got: String },
    #[error("multiplicity must be positive")]
    ZeroMultiplicity,
}

/// A multiset of tuples over a fixed schema. Equality is exact multiset
/// equality: same schema, same characteristic function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    schema: BTreeSet<Attribute>,
    counts: BTreeMap<Tuple, u64>,
}

impl Relation {
    pub fn empty(schema: impl IntoIterator<Item = Attribute>) -> Self {
        Relation { schema: schema.into_iter().collect(), counts: BTreeMap::new() }
    }

    pub fn schema(&self) -> &BTreeSet<Attribute> {
        &self.schema
    }

    /// Adds `n` copies of `tuple`. The tuple's attribute set must equal the
    /// schema exactly.
    pub fn insert(&mut self, tuple: Tuple, n: u64) -> Result<(), RelationError> {
        if n == 0 {
            return Err(RelationError::ZeroMultiplicity);
        }
        if tuple.attr_set() != self.schema {
            return Err(RelationError::SchemaMismatch {
                want: attrs_to_string(&self.schema),
                got: attrs_to_string(&tuple.attr_set()),
            });
        }
        *self.counts.entry(tuple).or_insert(0) += n;
        Ok(())
    }

    pub fn from_tuples(
        schema: impl IntoIterator<Item = Attribute>,
        tuples: impl IntoIterator<Item = (Tuple, u64)>,
    ) -> Result<Self, RelationError> {
        let mut rel = Relation::empty(schema);
        for (t, n) in tuples {
            rel.insert(t, n)?;
        }
        Ok(rel)
    }

    /// The characteristic function `m_R(x)`: how many times `tuple` occurs.
    pub fn count(&self, tuple: &Tuple) -> u64 {
        self.counts.get(tuple).copied().unwrap_or(0)
    }

    /// Total multiplicity (the multiset cardinality).
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of distinct tuples.
    pub fn distinct_len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// True when every multiplicity is exactly 1.
    pub fn is_duplicate_free(&self) -> bool {
        self.counts.values().all(|&n| n == 1)
    }

    /// Iterates `(tuple, multiplicity)` in canonical (ascending tuple) order.
    pub fn iter(&self) -> impl Iterator<Item = (&Tuple, u64)> {
        self.counts.iter().map(|(t, &n)| (t, n))
    }

    /// True when `self` contains `other` as a multiset (pointwise `>=`).
    pub fn contains_multiset(&self, other: &Relation) -> bool {
        self.schema == other.schema
            && other.iter().all(|(t, n)| self.count(t) >= n)
    }

    /// First tuple on which the two characteristic functions differ, with
    /// both counts; `None` when the relations are equal.
    pub fn first_difference<'a>(&'a self, other: &'a Relation) -> Option<(&'a Tuple, u64, u64)> {
        let keys: BTreeSet<&Tuple> =
            self.counts.keys().chain(other.counts.keys()).collect();
        keys.into_iter().find_map(|t| {
            let (a, b) = (self.count(t), other.count(t));
            (a != b).then_some((t, a, b))
        })
    }
}

pub(crate) fn attrs_to_string<'a>(attrs: impl IntoIterator<Item = &'a Attribute>) -> String {
    let parts: Vec<String> = attrs.into_iter().map(|a| a.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{", attrs_to_string(&self.schema))?;
        for (i, (t, n)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, " {t}x{n}")?;
        }
        write!(f, " }}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::value::Value;

    #[test]
    fn counts_accumulate() {
        let a = Attribute::fresh("a");
        let mut r = Relation::empty([a.clone()]);
        let t = Tuple::single(a.clone(), Value::Int(1));
        r.insert(t.clone(), 2).unwrap();
        r.insert(t.clone(), 1).unwrap();
        assert_eq!(r.count(&t), 3);
        assert_eq!(r.total(), 3);
        assert!(!r.is_duplicate_free());
    }

    #[test]
    fn schema_mismatch_rejected() {
        let a = Attribute::fresh("a");
        let b = Attribute::fresh("b");
        let mut r = Relation::empty([a]);
        let t = Tuple::single(b, Value::Int(1));
        assert!(matches!(r.insert(t, 1), Err(RelationError::SchemaMismatch { .. })));
    }

    #[test]
    fn first_difference_reports_counts() {
        let a = Attribute::fresh("a");
        let mut r1 = Relation::empty([a.clone()]);
        let mut r2 = Relation::empty([a.clone()]);
        let t = Tuple::single(a.clone(), Value::Int(1));
        r1.insert(t.clone(), 2).unwrap();
        r2.insert(t.clone(), 1).unwrap();
        let (dt, c1, c2) = r1.first_difference(&r2).unwrap();
        assert_eq!((dt, c1, c2), (&t, 2, 1));
        assert!(r1.contains_multiset(&r2));
        assert!(!r2.contains_multiset(&r1));
    }
}
