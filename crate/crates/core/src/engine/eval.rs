use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostic::{Diagnostic, DiagnosticCode};
use crate::digest::Digest;
use crate::dsl::{Action, Condition, Rule, RuleBody, RuleSet, Term, SOURCE_FILE, SOURCE_LINE};
use crate::matcher::{deep_contains, match_node, unify_value, Bindings, Value};
use crate::xml::{parse_xml, XmlNode};

use super::{DelayedTest, Fact, PassOneResult};

/// Names assigned with `:=`, visible in the subtree where they were set.
/// Cloning is how a child scope is made; the parent is never touched.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocalEnv<'a> {
    vars: BTreeMap<String, Value<'a>>,
}

impl<'a> LocalEnv<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value<'a>> {
        self.vars.get(name)
    }

    pub fn set(&mut self, name: impl Into<String>, value: Value<'a>) {
        self.vars.insert(name.into(), value);
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

/// Pass one over an already parsed document. The input digest is left
/// zeroed since the bytes are not known here.
pub fn evaluate_file(doc: &XmlNode, rules: &RuleSet, file: &str) -> PassOneResult {
    let mut walker = Walker {
        rules,
        facts: Vec::new(),
        tests: Vec::new(),
        diagnostics: Vec::new(),
        trace: None,
    };
    walker.visit(doc, &LocalEnv::new());
    PassOneResult {
        source_file: file.to_string(),
        facts: walker.facts,
        tests: walker.tests,
        diagnostics: walker.diagnostics,
        input_digest: Digest::default(),
        rules_digest: rules.source_hash,
    }
}

/// For every node in pre-order, the indices of the rules applicable there.
pub fn applicable_rules(doc: &XmlNode, rules: &RuleSet) -> Vec<Vec<usize>> {
    let mut walker = Walker {
        rules,
        facts: Vec::new(),
        tests: Vec::new(),
        diagnostics: Vec::new(),
        trace: Some(Vec::new()),
    };
    walker.visit(doc, &LocalEnv::new());
    walker.trace.unwrap_or_default()
}

/// Parses and evaluates one input. A document that fails to parse yields a
/// result carrying only the parse diagnostic.
pub fn evaluate_bytes(bytes: &[u8], rules: &RuleSet, file: &str) -> PassOneResult {
    let mut result = match parse_xml(bytes, file) {
        Ok(doc) => evaluate_file(&doc, rules, file),
        Err(e) => PassOneResult {
            source_file: file.to_string(),
            facts: Vec::new(),
            tests: Vec::new(),
            diagnostics: vec![
                Diagnostic::new(DiagnosticCode::MalformedXml, e.to_string()).at(e.pos().clone())
            ],
            input_digest: Digest::default(),
            rules_digest: rules.source_hash,
        },
    };
    result.input_digest = Digest::of(bytes);
    result
}

struct Walker<'r> {
    rules: &'r RuleSet,
    facts: Vec<Fact>,
    tests: Vec<DelayedTest>,
    diagnostics: Vec<Diagnostic>,
    trace: Option<Vec<Vec<usize>>>,
}

impl Walker<'_> {
    fn visit<'a>(&mut self, node: &'a XmlNode, env: &LocalEnv<'a>) {
        let pos = node.pos();
        let mut base = Bindings::new();
        base.bind(SOURCE_FILE, Value::Str(pos.file.to_string()));
        base.bind(SOURCE_LINE, Value::Str(pos.line.to_string()));

        // Every rule sees the environment as it was on entry to this node.
        let applicable: Vec<(&Rule, Bindings<'a>)> = self
            .rules
            .rules
            .iter()
            .filter(|r| !r.skipped)
            .filter_map(|r| self.applicable(r, node, env, &base).map(|b| (r, b)))
            .collect();
        if let Some(trace) = &mut self.trace {
            let mut idx: Vec<usize> = applicable.iter().map(|(r, _)| r.index).collect();
            idx.sort_unstable();
            trace.push(idx);
        }

        let mut child_env = env.clone();
        let mut assigned: BTreeMap<&str, usize> = BTreeMap::new();
        for (rule, b) in &applicable {
            match &rule.body {
                RuleBody::Env(actions) => {
                    for action in actions {
                        match action {
                            Action::Assign { name, value } => {
                                if let Some(earlier) = assigned.insert(name, rule.index) {
                                    self.diagnostics.push(
                                        Diagnostic::new(
                                            DiagnosticCode::AssignmentConflict,
                                            format!(
                                                "{name} is assigned by rules #{earlier} and #{} at the same node; the later rule wins",
                                                rule.index
                                            ),
                                        )
                                        .at(pos.clone())
                                        .rule(rule.index),
                                    );
                                }
                                match assigned_value(value, b) {
                                    Some(v) => child_env.set(name.clone(), v),
                                    None => self.non_ground(rule, node, &b.substitute(value)),
                                }
                            }
                            Action::Assert(term) => {
                                let t = b.substitute(term);
                                if t.is_ground() {
                                    self.facts.push(Fact {
                                        term: t,
                                        origin: pos.clone(),
                                    });
                                } else {
                                    self.non_ground(rule, node, &t);
                                }
                            }
                        }
                    }
                }
                RuleBody::Test(test) => {
                    let mut wanted = BTreeSet::new();
                    test.goal.collect_vars(&mut wanted);
                    test.consequence.collect_vars(&mut wanted);
                    wanted.insert(SOURCE_FILE.to_string());
                    wanted.insert(SOURCE_LINE.to_string());
                    let captured = wanted
                        .into_iter()
                        .filter_map(|v| b.get(&v).map(|val| (v, val.to_term())))
                        .collect();
                    self.tests.push(DelayedTest {
                        rule_index: rule.index,
                        polarity: test.polarity,
                        goal: test.goal.clone(),
                        captured,
                        consequence: test.consequence.clone(),
                        pos: pos.clone(),
                    });
                }
            }
        }

        for child in node.children() {
            self.visit(child, &child_env);
        }
    }

    /// Bindings under which `rule` applies at `node`, if it does.
    fn applicable<'a>(
        &mut self,
        rule: &Rule,
        node: &'a XmlNode,
        env: &LocalEnv<'a>,
        base: &Bindings<'a>,
    ) -> Option<Bindings<'a>> {
        let mut b = match_node(&rule.pattern, node, base)?;
        for cond in &rule.conditions {
            b = match cond {
                Condition::Eq { name, rhs } => unify_value(rhs, env.get(name)?, &b)?,
                Condition::Contains { var, pattern } => {
                    let root = b.get(var)?.clone();
                    match first_solution(deep_contains(&root, pattern, &b)) {
                        Ok(found) => found?,
                        Err(e) => {
                            self.diagnostics.push(
                                Diagnostic::new(
                                    DiagnosticCode::TypeMismatch,
                                    format!("${var}: {e}"),
                                )
                                .at(node.pos().clone())
                                .rule(rule.index),
                            );
                            return None;
                        }
                    }
                }
            };
        }
        Some(b)
    }

    fn non_ground(&mut self, rule: &Rule, node: &XmlNode, t: &Term) {
        self.diagnostics.push(
            Diagnostic::new(
                DiagnosticCode::NonGroundAssertion,
                format!("{t} still contains unbound variables"),
            )
            .at(node.pos().clone())
            .rule(rule.index),
        );
    }
}

/// `contains` keeps only the first match in document order.
fn first_solution<T, E>(all: Result<Vec<T>, E>) -> Result<Option<T>, E> {
    all.map(|v| v.into_iter().next())
}

/// The value an assignment stores. A lone variable keeps whatever it is
/// bound to (possibly a node); anything else must be ground.
fn assigned_value<'a>(value: &Term, b: &Bindings<'a>) -> Option<Value<'a>> {
    if let Term::Var(v) = value {
        if let Some(val) = b.get(v) {
            return Some(val.clone());
        }
    }
    let t = b.substitute(value);
    if !t.is_ground() {
        return None;
    }
    Some(match t {
        Term::Str(s) => Value::Str(s),
        t => Value::Term(t),
    })
}
