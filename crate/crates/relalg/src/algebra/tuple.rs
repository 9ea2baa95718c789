//! Tuples: unordered attribute-to-value mappings.
//!
//! Entries are kept in a `BTreeMap` keyed by attribute id, so a tuple is its
//! own canonical form: two tuples are equal iff they map the same attributes
//! to the same values, and iteration order is ascending attribute id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::attribute::Attribute;
use super::value::Value;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TupleError {
    #[error("tuple concatenation: attribute {0} present on both sides")]
    Overlap(Attribute),
    #[error("tuple restriction: attribute {0} not present")]
    Missing(Attribute),
    #[error("duplicate attribute {0} in tuple construction")]
    Duplicate(Attribute),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Tuple {
    entries: BTreeMap<Attribute, Value>,
}

impl Tuple {
    pub fn empty() -> Self {
        Tuple::default()
    }

    /// The single-attribute tuple `[a : x]`.
    pub fn single(attr: Attribute, value: Value) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(attr, value);
        Tuple { entries }
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (Attribute, Value)>,
    ) -> Result<Self, TupleError> {
        let mut entries = BTreeMap::new();
        for (a, v) in pairs {
            if entries.insert(a.clone(), v).is_some() {
                return Err(TupleError::Duplicate(a));
            }
        }
        Ok(Tuple { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, attr: &Attribute) -> Option<&Value> {
        self.entries.get(attr)
    }

    pub fn contains(&self, attr: &Attribute) -> bool {
        self.entries.contains_key(attr)
    }

    /// The attribute set `A(t)`.
    pub fn attr_set(&self) -> BTreeSet<Attribute> {
        self.entries.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Attribute, &Value)> {
        self.entries.iter()
    }

    /// Restriction `t|_A'`: keeps exactly the attributes in `attrs`.
    pub fn restrict<'a>(
        &self,
        attrs: impl IntoIterator<Item = &'a Attribute>,
    ) -> Result<Tuple, TupleError> {
        let mut entries = BTreeMap::new();
        for a in attrs {
            match self.entries.get(a) {
                Some(v) => {
                    entries.insert(a.clone(), v.clone());
                }
                None => return Err(TupleError::Missing(a.clone())),
            }
        }
        Ok(Tuple { entries })
    }

    /// Concatenation `t1 ∘ t2`; defined only for disjoint attribute sets.
    pub fn concat(&self, other: &Tuple) -> Result<Tuple, TupleError> {
        let mut entries = self.entries.clone();
        for (a, v) in &other.entries {
            if entries.insert(a.clone(), v.clone()).is_some() {
                return Err(TupleError::Overlap(a.clone()));
            }
        }
        Ok(Tuple { entries })
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (a, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}: {v}")?;
        }
        write!(f, "]")
    }
}
