use std::collections::BTreeSet;
use std::fmt;

use crate::digest::Digest;
use crate::xml::SourcePos;

/// Name of the predefined variable holding the current file.
pub const SOURCE_FILE: &str = "SourceFile";
/// Name of the predefined variable holding the current line.
pub const SOURCE_LINE: &str = "SourceLine";
/// The anonymous variable, `$_`.
pub const ANON: &str = "_";

/// Prolog-style term. `Var` names are stored without the `$`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Functor { name: String, args: Vec<Term> },
    Str(String),
    Var(String),
}

impl Term {
    pub fn functor(name: impl Into<String>, args: Vec<Term>) -> Self {
        Term::Functor {
            name: name.into(),
            args,
        }
    }

    pub fn str(s: impl Into<String>) -> Self {
        Term::Str(s.into())
    }

    pub fn var(s: impl Into<String>) -> Self {
        Term::Var(s.into())
    }

    /// `(name, arity)` for functors.
    pub fn signature(&self) -> Option<(&str, usize)> {
        match self {
            Term::Functor { name, args } => Some((name, args.len())),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Str(_) => true,
            Term::Functor { args, .. } => args.iter().all(Term::is_ground),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Str(_) => {}
            Term::Functor { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Str(s) => write_quoted(f, s),
            Term::Var(v) => write!(f, "${v}"),
            Term::Functor { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Writes `s` as a double-quoted string literal.
pub fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

pub fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    let _ = write_quoted(&mut out, s);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrValue {
    Str(String),
    Var(String),
    Anon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrPattern {
    pub name: String,
    pub value: AttrValue,
}

/// An XML fragment extended with logical variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Elem {
        name: String,
        attrs: Vec<AttrPattern>,
        children: Vec<Pattern>,
    },
    EmptyElem {
        name: String,
        attrs: Vec<AttrPattern>,
    },
    Var(String),
    Anon,
    Text(String),
}

impl Pattern {
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Pattern::Elem {
                attrs, children, ..
            } => {
                collect_attr_vars(attrs, out);
                children.iter().for_each(|c| c.collect_vars(out));
            }
            Pattern::EmptyElem { attrs, .. } => collect_attr_vars(attrs, out),
            Pattern::Var(v) => {
                out.insert(v.clone());
            }
            Pattern::Anon | Pattern::Text(_) => {}
        }
    }
}

fn collect_attr_vars(attrs: &[AttrPattern], out: &mut BTreeSet<String>) {
    for a in attrs {
        if let AttrValue::Var(v) = &a.value {
            out.insert(v.clone());
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn attrs(f: &mut fmt::Formatter<'_>, attrs: &[AttrPattern]) -> fmt::Result {
            for a in attrs {
                write!(f, " {}=", a.name)?;
                match &a.value {
                    AttrValue::Str(s) => write_quoted(f, s)?,
                    AttrValue::Var(v) => write!(f, "${v}")?,
                    AttrValue::Anon => f.write_str("$_")?,
                }
            }
            Ok(())
        }
        match self {
            Pattern::Elem {
                name,
                attrs: a,
                children,
            } => {
                write!(f, "<{name}")?;
                attrs(f, a)?;
                f.write_str(">")?;
                for c in children {
                    write!(f, "{c}")?;
                }
                write!(f, "</{name}>")
            }
            Pattern::EmptyElem { name, attrs: a } => {
                write!(f, "<{name}")?;
                attrs(f, a)?;
                f.write_str("/>")
            }
            Pattern::Var(v) => write!(f, "<${v}>"),
            Pattern::Anon => f.write_str("<$_>"),
            Pattern::Text(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    /// `name = term`: reads the local environment.
    Eq { name: String, rhs: Term },
    /// `$var contains <pattern>`: deep search below a bound variable.
    Contains { var: String, pattern: Pattern },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Assign { name: String, value: Term },
    Assert(Term),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    /// `? goal / consequence`: report when the goal has no solution.
    IfAbsent,
    /// `? goal -> consequence`: report once per solution.
    IfPresent,
}

impl Polarity {
    pub fn operator(self) -> &'static str {
        match self {
            Polarity::IfAbsent => "/",
            Polarity::IfPresent => "->",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consequence {
    Pattern(Pattern),
    Term(Term),
}

impl Consequence {
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Consequence::Pattern(p) => p.collect_vars(out),
            Consequence::Term(t) => t.collect_vars(out),
        }
    }
}

impl fmt::Display for Consequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Consequence::Pattern(p) => write!(f, "{p}"),
            Consequence::Term(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Test {
    pub polarity: Polarity,
    pub goal: Term,
    pub consequence: Consequence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleBody {
    Env(Vec<Action>),
    Test(Test),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// 1-based, dense across all rule files of a set.
    pub index: usize,
    pub pattern: Pattern,
    pub conditions: Vec<Condition>,
    pub body: RuleBody,
    /// Rule was written with a leading `<*`.
    pub skipped: bool,
    pub pos: SourcePos,
}

impl Rule {
    pub fn is_test(&self) -> bool {
        matches!(self.body, RuleBody::Test(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub source_hash: Digest,
}

impl RuleSet {
    pub fn env_rule_count(&self) -> usize {
        self.rules.iter().filter(|r| !r.is_test()).count()
    }

    pub fn test_rule_count(&self) -> usize {
        self.rules.iter().filter(|r| r.is_test()).count()
    }

    /// Predicate names that some (non-skipped) rule may assert.
    pub fn asserted_predicates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for rule in self.rules.iter().filter(|r| !r.skipped) {
            if let RuleBody::Env(actions) = &rule.body {
                for action in actions {
                    if let Action::Assert(Term::Functor { name, .. }) = action {
                        out.insert(name.clone());
                    }
                }
            }
        }
        out
    }
}
