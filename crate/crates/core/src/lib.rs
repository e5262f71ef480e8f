//! Semantic consistency checking for collections of XML documents.
//!
//! Rules pair an XML pattern with either environment actions (local
//! assignments, global assertions) or a delayed test whose failure produces
//! a warning message:
//!
//! ```
//! use semlint::{check_documents, dsl::parse_rules, builtins::{BuiltinConfig, BuiltinRegistry}};
//!
//! let rules = parse_rules(r#"
//! <staff> <$_> </staff> => inchart := "true";
//! <agent name=$P/> & inchart = "true" => member($P);
//! <report author=$P/> ? member($P) / <li>Unknown author <$P></li>;
//! "#, "demo.rules").unwrap();
//! let docs = [
//!     ("chart.xml", r#"<staff><agent name="Ada"/></staff>"#.as_bytes()),
//!     ("r.xml", r#"<x><report author="Ada"/><report author="Bob"/></x>"#.as_bytes()),
//! ];
//! let registry = BuiltinRegistry::standard(BuiltinConfig { offline: true, ..Default::default() });
//! let checked = check_documents(&rules, docs, &registry);
//! assert_eq!(checked.messages.len(), 1);
//! assert_eq!(checked.messages[0].text, "Unknown author Bob");
//! ```

pub mod builtins;
pub mod diagnostic;
pub mod digest;
pub mod dsl;
pub mod engine;
pub mod matcher;
pub mod orchestrator;
pub mod report;
pub mod xml;

pub use diagnostic::{Diagnostic, DiagnosticCode};
pub use engine::Checked;

use builtins::BuiltinRegistry;
use dsl::RuleSet;

/// Both passes over in-memory documents, without any caching.
pub fn check_documents<'d>(
    rules: &RuleSet,
    docs: impl IntoIterator<Item = (&'d str, &'d [u8])>,
    builtins: &BuiltinRegistry,
) -> Checked {
    let results: Vec<_> = docs
        .into_iter()
        .map(|(name, bytes)| engine::evaluate_bytes(bytes, rules, name))
        .collect();
    engine::pass_two(&results, rules, builtins)
}
