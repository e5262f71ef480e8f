use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use crate::dsl::Term;
use crate::xml::SourcePos;

use super::PassOneResult;

/// A ground assertion. Identity is the term alone; `origin` is kept for
/// diagnostics only.
#[derive(Debug, Clone)]
pub struct Fact {
    pub term: Term,
    pub origin: SourcePos,
}

impl PartialEq for Fact {
    fn eq(&self, other: &Self) -> bool {
        self.term == other.term
    }
}

impl Eq for Fact {}

impl Hash for Fact {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.term.hash(state);
    }
}

impl PartialOrd for Fact {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fact {
    fn cmp(&self, other: &Self) -> Ordering {
        self.term.cmp(&other.term)
    }
}

/// The global environment: a set of ground functor terms, indexed by
/// `(name, arity)` and iterated in canonical order.
#[derive(Debug, Clone, Default)]
pub struct FactStore {
    by_signature: BTreeMap<(String, usize), BTreeMap<Term, SourcePos>>,
    declared: BTreeSet<String>,
}

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a fact; returns `false` if the term was already present. The
    /// smallest origin seen is kept so the store does not depend on merge
    /// order.
    pub fn insert(&mut self, fact: Fact) -> bool {
        let Some((name, arity)) = fact.term.signature() else {
            return false;
        };
        let bucket = self
            .by_signature
            .entry((name.to_string(), arity))
            .or_default();
        match bucket.get_mut(&fact.term) {
            Some(origin) => {
                if fact.origin < *origin {
                    *origin = fact.origin;
                }
                false
            }
            None => {
                bucket.insert(fact.term, fact.origin);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.by_signature.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, term: &Term) -> bool {
        term.signature()
            .and_then(|(n, a)| self.by_signature.get(&(n.to_string(), a)))
            .is_some_and(|b| b.contains_key(term))
    }

    /// Stored terms with the given functor, in canonical order.
    pub fn facts_for<'s>(
        &'s self,
        name: &str,
        arity: usize,
    ) -> impl Iterator<Item = &'s Term> + 's {
        self.by_signature
            .get(&(name.to_string(), arity))
            .into_iter()
            .flat_map(|b| b.keys())
    }

    pub fn count_for(&self, name: &str, arity: usize) -> usize {
        self.by_signature
            .get(&(name.to_string(), arity))
            .map_or(0, BTreeMap::len)
    }

    /// All facts, sorted by functor, arity, then arguments.
    pub fn iter(&self) -> impl Iterator<Item = Fact> + '_ {
        self.by_signature.values().flat_map(|b| {
            b.iter().map(|(term, origin)| Fact {
                term: term.clone(),
                origin: origin.clone(),
            })
        })
    }

    /// Records that the rule set can assert `name`, even if no document
    /// triggered it.
    pub fn declare(&mut self, name: impl Into<String>) {
        self.declared.insert(name.into());
    }

    /// Whether `name` is asserted anywhere (stored or declared), at any arity.
    pub fn knows_predicate(&self, name: &str) -> bool {
        self.declared.contains(name) || self.by_signature.keys().any(|(n, _)| n == name)
    }
}

/// Set union of the facts of every pass-one result.
pub fn merge_facts(results: &[PassOneResult]) -> FactStore {
    let mut store = FactStore::new();
    for r in results {
        for f in &r.facts {
            store.insert(f.clone());
        }
    }
    store
}
