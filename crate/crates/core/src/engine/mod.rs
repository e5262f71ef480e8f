//! Rule execution.
//!
//! Pass one walks each document independently, threading a local
//! environment down the tree, and produces facts plus delayed tests. Pass two
//! merges the facts of every document and resolves the delayed tests against
//! the merged store.

pub mod cache;
mod eval;
mod facts;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};

pub use eval::{applicable_rules, evaluate_bytes, evaluate_file, LocalEnv};
pub use facts::{merge_facts, Fact, FactStore};
pub use resolve::{resolve_tests, solve, Resolution, SolveError};

use crate::builtins::BuiltinRegistry;
use crate::diagnostic::Diagnostic;
use crate::digest::Digest;
use crate::dsl::{Consequence, Polarity, RuleSet, Term};
use crate::matcher::{Bindings, Value};
use crate::report::Message;
use crate::xml::SourcePos;

/// A `?` test captured in pass one, waiting for the global fact store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayedTest {
    pub rule_index: usize,
    pub polarity: Polarity,
    pub goal: Term,
    /// Projected values of the goal and consequence variables that were
    /// bound when the rule fired, plus `SourceFile` and `SourceLine`.
    pub captured: BTreeMap<String, Term>,
    pub consequence: Consequence,
    pub pos: SourcePos,
}

impl DelayedTest {
    pub fn bindings(&self) -> Bindings<'static> {
        let mut b = Bindings::new();
        for (name, t) in &self.captured {
            let v = match t {
                Term::Str(s) => Value::Str(s.clone()),
                t => Value::Term(t.clone()),
            };
            b.bind(name, v);
        }
        b
    }

    pub fn instantiated_goal(&self) -> Term {
        self.bindings().substitute(&self.goal)
    }
}

/// Everything pass one learned from one input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassOneResult {
    pub source_file: String,
    pub facts: Vec<Fact>,
    pub tests: Vec<DelayedTest>,
    pub diagnostics: Vec<Diagnostic>,
    pub input_digest: Digest,
    pub rules_digest: Digest,
}

/// Output of pass two over a whole collection.
#[derive(Debug, Clone, Default)]
pub struct Checked {
    pub store: FactStore,
    pub messages: Vec<Message>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Merges pass-one results and resolves every delayed test. Diagnostics from
/// pass one are carried over, followed by those raised while resolving.
pub fn pass_two(results: &[PassOneResult], rules: &RuleSet, builtins: &BuiltinRegistry) -> Checked {
    let mut store = merge_facts(results);
    for name in rules.asserted_predicates() {
        store.declare(name);
    }
    let tests: Vec<&DelayedTest> = results.iter().flat_map(|r| &r.tests).collect();
    builtins.prepare(tests.iter().map(|t| t.instantiated_goal()));
    let resolution = resolve_tests(tests.iter().copied(), &store, builtins);

    let mut diagnostics: Vec<Diagnostic> = results
        .iter()
        .flat_map(|r| r.diagnostics.iter().cloned())
        .collect();
    diagnostics.extend(resolution.diagnostics);
    let mut seen = BTreeSet::new();
    diagnostics.retain(|d| seen.insert(d.clone()));
    Checked {
        store,
        messages: resolution.messages,
        diagnostics,
    }
}
