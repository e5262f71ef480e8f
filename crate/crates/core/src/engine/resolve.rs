use std::collections::BTreeSet;

use thiserror::Error;

use crate::builtins::{BuiltinError, BuiltinRegistry};
use crate::diagnostic::{Diagnostic, DiagnosticCode};
use crate::dsl::{Polarity, Term};
use crate::matcher::{unify, Bindings};
use crate::report::{render_consequence, Message, RenderError};

use super::{DelayedTest, FactStore};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("unknown predicate {name}/{arity}: no builtin, fact or assertion has this name")]
    UnknownPredicate { name: String, arity: usize },
    #[error("goal {0} is not a predicate")]
    NotAPredicate(Term),
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
}

/// All solutions of a single goal: the builtin's answers if one is
/// registered, otherwise every extension of `b` unifying the goal with a
/// stored fact, in store order.
pub fn solve<'a>(
    goal: &Term,
    b: &Bindings<'a>,
    store: &FactStore,
    builtins: &BuiltinRegistry,
) -> Result<Vec<Bindings<'a>>, SolveError> {
    let Term::Functor { name, args } = goal else {
        return Err(SolveError::NotAPredicate(goal.clone()));
    };
    if let Some(builtin) = builtins.get(name, args.len()) {
        let args: Vec<Term> = args.iter().map(|a| b.substitute(a)).collect();
        return Ok(builtin.call(&args, b, store)?);
    }
    if store.count_for(name, args.len()) == 0 && !store.knows_predicate(name) {
        return Err(SolveError::UnknownPredicate {
            name: name.clone(),
            arity: args.len(),
        });
    }
    Ok(store
        .facts_for(name, args.len())
        .filter_map(|fact| unify(goal, fact, b))
        .collect())
}

#[derive(Debug, Clone, Default)]
pub struct Resolution {
    pub messages: Vec<Message>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Pass two proper: runs every delayed test and renders the messages it
/// calls for.
pub fn resolve_tests<'t>(
    tests: impl IntoIterator<Item = &'t DelayedTest>,
    store: &FactStore,
    builtins: &BuiltinRegistry,
) -> Resolution {
    let mut out = Resolution::default();
    let mut unknown = BTreeSet::new();
    for test in tests {
        let b = test.bindings();
        let solutions = match solve(&test.goal, &b, store, builtins) {
            Ok(s) => s,
            Err(SolveError::UnknownPredicate { name, arity }) => {
                if unknown.insert((name.clone(), arity)) {
                    out.diagnostics.push(
                        Diagnostic::new(
                            DiagnosticCode::UnknownPredicate,
                            format!("unknown predicate {name}/{arity} (misspelled?)"),
                        )
                        .at(test.pos.clone())
                        .rule(test.rule_index),
                    );
                }
                continue;
            }
            Err(SolveError::Builtin(BuiltinError::MalformedUrl(url))) => {
                out.messages.push(malformed_url(test, &url));
                continue;
            }
            Err(e) => {
                let code = match e {
                    SolveError::Builtin(BuiltinError::Instantiation(_)) => {
                        DiagnosticCode::InstantiationError
                    }
                    _ => DiagnosticCode::TypeMismatch,
                };
                out.diagnostics.push(
                    Diagnostic::new(code, e.to_string())
                        .at(test.pos.clone())
                        .rule(test.rule_index),
                );
                continue;
            }
        };

        let rendered: Vec<(Bindings<'_>, String)> = match test.polarity {
            Polarity::IfAbsent if solutions.is_empty() => vec![(b.clone(), String::new())],
            Polarity::IfAbsent => vec![],
            Polarity::IfPresent => solutions
                .into_iter()
                .map(|s| {
                    let key = solution_key(&s, &b);
                    (s, key)
                })
                .collect(),
        };
        let mut seen = BTreeSet::new();
        for (sol, key) in rendered {
            match render_consequence(&test.consequence, &sol) {
                Ok((html, text)) => {
                    if seen.insert(html.clone()) {
                        out.messages.push(Message {
                            pos: test.pos.clone(),
                            rule_index: test.rule_index,
                            html,
                            text,
                            solution_key: key,
                        });
                    }
                }
                Err(RenderError::Unbound(var)) => {
                    out.diagnostics.push(
                        Diagnostic::new(
                            DiagnosticCode::UnboundInConsequence,
                            format!("${var} is not bound when the message is rendered"),
                        )
                        .at(test.pos.clone())
                        .rule(test.rule_index),
                    );
                }
            }
        }
    }
    out
}

/// Canonical text of the bindings a solution added on top of `base`.
fn solution_key(sol: &Bindings<'_>, base: &Bindings<'_>) -> String {
    sol.iter()
        .filter(|(name, _)| !base.is_bound(name))
        .map(|(name, v)| format!("{name}={}", v.to_term()))
        .collect::<Vec<_>>()
        .join(",")
}

fn malformed_url(test: &DelayedTest, url: &str) -> Message {
    let text = format!(
        "Warning: {} is not an absolute http or https URL; line {} in {}.",
        crate::dsl::quoted(url),
        test.pos.line,
        test.pos.file
    );
    Message {
        pos: test.pos.clone(),
        rule_index: test.rule_index,
        html: format!("<li>{}</li>", crate::report::escape_html(&text)),
        text,
        solution_key: format!("url={}", crate::dsl::quoted(url)),
    }
}
