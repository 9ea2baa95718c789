//! Column identities.
//!
//! An [`Attribute`] is a display name plus a numeric id that is unique within
//! the process. All equality, hashing and ordering go through the id, so two
//! columns named `d` created by separate [`Attribute::fresh`] calls are
//! distinct, which is what makes rename-based unnesting collision-free.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_ATTR_ID: AtomicU64 = AtomicU64::new(0);

/// A column identity: a display name (`base`) plus a session-unique `id`.
///
/// Printed as `base#id`, e.g. `c_custkey#0`.
#[derive(Debug, Clone)]
pub struct Attribute {
    base: String,
    id: u64,
}

impl Attribute {
    /// Creates an attribute with an id never issued before in this process.
    /// Ids strictly increase across calls.
    pub fn fresh(base: impl Into<String>) -> Self {
        let id = NEXT_ATTR_ID.fetch_add(1, Ordering::Relaxed);
        Attribute { base: base.into(), id }
    }

    /// Recreates an attribute with an explicit id (used when parsing printed
    /// plans or relations). Advances the fresh-id counter past `id` so later
    /// [`Attribute::fresh`] calls cannot collide with it.
    pub fn with_id(base: impl Into<String>, id: u64) -> Self {
        NEXT_ATTR_ID.fetch_max(id + 1, Ordering::Relaxed);
        Attribute { base: base.into(), id }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// A fresh attribute with the same display name, e.g. the `d'` copy of `d`.
    pub fn renamed_copy(&self) -> Self {
        Attribute::fresh(self.base.clone())
    }
}

impl PartialEq for Attribute {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Attribute {}

impl PartialOrd for Attribute {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Attribute {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl std::hash::Hash for Attribute {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.base, self.id)
    }
}
