//! Predicates implemented by the host rather than by facts.

mod url;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::dsl::Term;
use crate::engine::FactStore;
use crate::matcher::{unify_value, Bindings, Value};

pub use url::{HttpProbe, ProbeOutcome, StaticProbe, UreqProbe, UrlChecker, UrlProbeResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuiltinError {
    #[error("argument ${0} must be bound")]
    Instantiation(String),
    #[error("{0:?} is not an absolute http or https URL")]
    MalformedUrl(String),
}

/// A host predicate. Arguments arrive with the caller's bindings already
/// substituted; a remaining `Term::Var` is an unbound argument.
pub trait Builtin: Send + Sync {
    fn call<'a>(
        &self,
        args: &[Term],
        b: &Bindings<'a>,
        store: &FactStore,
    ) -> Result<Vec<Bindings<'a>>, BuiltinError>;

    /// Called once before pass two with the argument lists of every call that
    /// will be made, so slow work can be batched.
    fn prepare(&self, _calls: &[Vec<Term>]) {}
}

#[derive(Clone)]
pub struct BuiltinConfig {
    /// Case-fold and strip accents before comparing names in `personne1`.
    pub normalize_names: bool,
    /// `testurl` never probes and never fails.
    pub offline: bool,
    pub url_timeout: Duration,
    pub max_probes: usize,
    pub prober: Arc<dyn HttpProbe>,
}

impl Default for BuiltinConfig {
    fn default() -> Self {
        Self {
            normalize_names: false,
            offline: false,
            url_timeout: Duration::from_secs(10),
            max_probes: 8,
            prober: Arc::new(UreqProbe),
        }
    }
}

#[derive(Default)]
pub struct BuiltinRegistry {
    table: BTreeMap<(String, usize), Box<dyn Builtin>>,
}

impl BuiltinRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `sameyear/2`, `personne1/3`, `pubbyotherproject/3` and `testurl/3`.
    pub fn standard(cfg: BuiltinConfig) -> Self {
        let mut r = Self::new();
        r.register("sameyear", 2, SameYear);
        r.register(
            "personne1",
            3,
            Personne1 {
                normalize: cfg.normalize_names,
            },
        );
        r.register("pubbyotherproject", 3, PubByOtherProject);
        let checker = UrlChecker::new(cfg.prober.clone(), cfg.url_timeout, cfg.max_probes);
        r.register(
            "testurl",
            3,
            TestUrl {
                offline: cfg.offline,
                checker,
            },
        );
        r
    }

    pub fn register(&mut self, name: &str, arity: usize, b: impl Builtin + 'static) {
        self.table.insert((name.to_string(), arity), Box::new(b));
    }

    pub fn get(&self, name: &str, arity: usize) -> Option<&dyn Builtin> {
        self.table.get(&(name.to_string(), arity)).map(|b| &**b)
    }

    pub fn contains(&self, name: &str, arity: usize) -> bool {
        self.get(name, arity).is_some()
    }

    /// Hands each builtin the argument lists of the goals that target it.
    pub fn prepare(&self, goals: impl IntoIterator<Item = Term>) {
        let mut calls: BTreeMap<(String, usize), Vec<Vec<Term>>> = BTreeMap::new();
        for g in goals {
            if let Term::Functor { name, args } = g {
                let key = (name, args.len());
                if self.table.contains_key(&key) {
                    calls.entry(key).or_default().push(args);
                }
            }
        }
        for (key, c) in calls {
            self.table[&key].prepare(&c);
        }
    }
}

fn bound_str(t: &Term) -> Result<String, BuiltinError> {
    match t {
        Term::Str(s) => Ok(s.clone()),
        Term::Var(v) => Err(BuiltinError::Instantiation(v.clone())),
        other => Ok(other.to_string()),
    }
}

struct SameYear;

impl Builtin for SameYear {
    fn call<'a>(
        &self,
        args: &[Term],
        b: &Bindings<'a>,
        _store: &FactStore,
    ) -> Result<Vec<Bindings<'a>>, BuiltinError> {
        let x = bound_str(&args[0])?;
        let y = bound_str(&args[1])?;
        Ok(if same_year(&x, &y) {
            vec![b.clone()]
        } else {
            vec![]
        })
    }
}

/// Integer equality when both sides are numbers, string equality otherwise;
/// surrounding whitespace is ignored either way.
pub fn same_year(x: &str, y: &str) -> bool {
    let (x, y) = (x.trim(), y.trim());
    match (x.parse::<i64>(), y.parse::<i64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => x == y,
    }
}

struct Personne1 {
    normalize: bool,
}

impl Builtin for Personne1 {
    fn call<'a>(
        &self,
        args: &[Term],
        b: &Bindings<'a>,
        store: &FactStore,
    ) -> Result<Vec<Bindings<'a>>, BuiltinError> {
        let wanted = args.iter().map(bound_str).collect::<Result<Vec<_>, _>>()?;
        let found = if self.normalize {
            let wanted: Vec<String> = wanted.iter().map(|s| fold_name(s)).collect();
            store.facts_for("personne", 3).any(|f| match f {
                Term::Functor { args, .. } => args
                    .iter()
                    .zip(&wanted)
                    .all(|(a, w)| matches!(a, Term::Str(s) if fold_name(s) == *w)),
                _ => false,
            })
        } else {
            store.contains(&Term::functor(
                "personne",
                wanted.into_iter().map(Term::Str).collect(),
            ))
        };
        Ok(if found { vec![b.clone()] } else { vec![] })
    }
}

/// Lowercase with combining marks removed: "Dupónt" and "dupont" agree.
pub fn fold_name(s: &str) -> String {
    s.nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect::<String>()
        .to_lowercase()
}

struct PubByOtherProject;

impl Builtin for PubByOtherProject {
    fn call<'a>(
        &self,
        args: &[Term],
        b: &Bindings<'a>,
        store: &FactStore,
    ) -> Result<Vec<Bindings<'a>>, BuiltinError> {
        let title = bound_str(&args[0])?;
        let project = bound_str(&args[1])?;
        let mut out = Vec::new();
        for f in store.facts_for("pub", 2) {
            let Term::Functor { args: fa, .. } = f else {
                continue;
            };
            let (Term::Str(t), Term::Str(o)) = (&fa[0], &fa[1]) else {
                continue;
            };
            if *t == title && *o != project {
                if let Some(s) = unify_value(&args[2], &Value::Str(o.clone()), b) {
                    out.push(s);
                }
            }
        }
        Ok(out)
    }
}

struct TestUrl {
    offline: bool,
    checker: UrlChecker,
}

impl Builtin for TestUrl {
    fn call<'a>(
        &self,
        args: &[Term],
        b: &Bindings<'a>,
        _store: &FactStore,
    ) -> Result<Vec<Bindings<'a>>, BuiltinError> {
        let url = bound_str(&args[0])?;
        url::check_syntax(&url)?;
        if self.offline {
            return Ok(vec![]);
        }
        let Some((a1, a2)) = self.checker.check(&url).answers() else {
            return Ok(vec![]);
        };
        Ok(unify_value(&args[1], &Value::Str(a1), b)
            .and_then(|b| unify_value(&args[2], &Value::Str(a2), &b))
            .into_iter()
            .collect())
    }

    fn prepare(&self, calls: &[Vec<Term>]) {
        if self.offline {
            return;
        }
        let urls: Vec<String> = calls
            .iter()
            .filter_map(|args| match &args[0] {
                Term::Str(u) if url::check_syntax(u).is_ok() => Some(u.clone()),
                _ => None,
            })
            .collect();
        self.checker.prefetch(&urls);
    }
}
