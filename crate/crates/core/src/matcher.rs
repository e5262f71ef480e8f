//! Pattern matching against XML nodes and term unification.
//!
//! Variables bind to [`Value`]s: strings (attribute values, literals), single
//! nodes, node lists (the tail of a child list), or ground terms. Matching
//! never backtracks: attribute names are unique and child matching is
//! positional, so every pattern has at most one way to match a node.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::dsl::{AttrValue, Pattern, Term, ANON};
use crate::xml::{normalize_whitespace, XmlNode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value<'a> {
    Str(String),
    Node(&'a XmlNode),
    NodeList(&'a [XmlNode]),
    /// A ground term.
    Term(Term),
}

impl<'a> Value<'a> {
    /// Flattened, whitespace-normalized text of the value. Ground terms
    /// other than plain strings project to their canonical syntax.
    pub fn projection(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Node(n) => {
                let mut s = String::new();
                n.collect_text(&mut s);
                normalize_whitespace(&s)
            }
            Value::NodeList(ns) => {
                let mut s = String::new();
                ns.iter().for_each(|n| n.collect_text(&mut s));
                normalize_whitespace(&s)
            }
            Value::Term(Term::Str(s)) => s.clone(),
            Value::Term(t) => t.to_string(),
        }
    }

    /// Converts to a ground term, string-projecting node values.
    pub fn to_term(&self) -> Term {
        match self {
            Value::Term(t) => t.clone(),
            other => Term::Str(other.projection()),
        }
    }

    pub fn is_node(&self) -> bool {
        matches!(self, Value::Node(_) | Value::NodeList(_))
    }

    /// Identity used by nonlinear patterns and unification. Nodes compare
    /// structurally, ignoring positions; `Str` and `Term(Str)` coincide.
    pub fn same(&self, other: &Value<'_>) -> bool {
        match (self, other) {
            (Value::Node(a), Value::Node(b)) => a.same_content(b),
            (Value::NodeList(a), Value::NodeList(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.same_content(y))
            }
            (Value::Node(_) | Value::NodeList(_), _) | (_, Value::Node(_) | Value::NodeList(_)) => {
                false
            }
            (a, b) => a.to_term() == b.to_term(),
        }
    }

    /// Detaches the value from the document it was matched in.
    pub fn detach(&self) -> Value<'static> {
        Value::Term(self.to_term()).simplify()
    }

    fn simplify(self) -> Self {
        match self {
            Value::Term(Term::Str(s)) => Value::Str(s),
            v => v,
        }
    }
}

impl fmt::Display for Value<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.projection())
    }
}

/// A substitution from variable names (without `$`) to values.
///
/// Extending a binding set never changes an existing entry. Two unbound
/// variables unified with each other are linked; binding either one binds
/// both.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings<'a> {
    values: BTreeMap<String, Value<'a>>,
    links: BTreeMap<String, String>,
}

impl<'a> Bindings<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    fn root<'n>(&'n self, mut name: &'n str) -> &'n str {
        while let Some(next) = self.links.get(name) {
            name = next;
        }
        name
    }

    pub fn get(&self, name: &str) -> Option<&Value<'a>> {
        self.values.get(self.root(name))
    }

    pub fn is_bound(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// Bound variables (linked aliases excluded) in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value<'a>)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Binds `name`, or checks agreement if it is already bound.
    /// Returns `false` on conflict. `$_` is never bound.
    pub fn bind(&mut self, name: &str, value: Value<'a>) -> bool {
        if name == ANON {
            return true;
        }
        let root = self.root(name).to_string();
        match self.values.get(&root) {
            Some(existing) => existing.same(&value),
            None => {
                self.values.insert(root, value);
                true
            }
        }
    }

    pub fn with(mut self, name: &str, value: Value<'a>) -> Option<Self> {
        self.bind(name, value).then_some(self)
    }

    fn link(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.root(a).to_string(), self.root(b).to_string());
        if ra != rb {
            self.links.insert(ra, rb);
        }
    }

    /// True if every variable bound in `base` is bound to the same value here.
    pub fn extends(&self, base: &Bindings<'_>) -> bool {
        base.values
            .keys()
            .chain(base.links.keys())
            .all(|k| match (base.get(k), self.get(k)) {
                (Some(a), Some(b)) => a.same(b),
                (None, _) => true,
                (Some(_), None) => false,
            })
    }

    /// Replaces bound variables in `t`. Unbound variables stay in place.
    pub fn substitute(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.get(v) {
                Some(value) => value.to_term(),
                None => Term::Var(self.root(v).to_string()),
            },
            Term::Str(_) => t.clone(),
            Term::Functor { name, args } => Term::Functor {
                name: name.clone(),
                args: args.iter().map(|a| self.substitute(a)).collect(),
            },
        }
    }
}

/// Matches one pattern against one node.
pub fn match_node<'a>(p: &Pattern, n: &'a XmlNode, b: &Bindings<'a>) -> Option<Bindings<'a>> {
    let mut out = b.clone();
    match_into(p, n, &mut out).then_some(out)
}

/// Positional child matching; a trailing variable takes the rest of the list.
pub fn match_children<'a>(
    ps: &[Pattern],
    ns: &'a [XmlNode],
    b: &Bindings<'a>,
) -> Option<Bindings<'a>> {
    let mut out = b.clone();
    children_into(ps, ns, &mut out).then_some(out)
}

fn match_into<'a>(p: &Pattern, n: &'a XmlNode, b: &mut Bindings<'a>) -> bool {
    match (p, n) {
        (Pattern::Anon, _) => true,
        (Pattern::Var(v), n) => b.bind(v, Value::Node(n)),
        (Pattern::Text(t), XmlNode::Text(text)) => t.trim() == text.content.trim(),
        (Pattern::Text(_), _) => false,
        (
            Pattern::Elem {
                name,
                attrs,
                children,
            },
            XmlNode::Element(e),
        ) => name == &e.name && attrs_into(attrs, e, b) && children_into(children, &e.children, b),
        (Pattern::EmptyElem { name, attrs }, XmlNode::Element(e)) => {
            name == &e.name && attrs_into(attrs, e, b) && e.children.is_empty()
        }
        (Pattern::Elem { .. } | Pattern::EmptyElem { .. }, XmlNode::Text(_)) => false,
    }
}

fn attrs_into<'a>(
    attrs: &[crate::dsl::AttrPattern],
    e: &'a crate::xml::Element,
    b: &mut Bindings<'a>,
) -> bool {
    attrs.iter().all(|ap| match e.attr(&ap.name) {
        None => false,
        Some(actual) => match &ap.value {
            AttrValue::Str(s) => s == actual,
            AttrValue::Var(v) => b.bind(v, Value::Str(actual.to_string())),
            AttrValue::Anon => true,
        },
    })
}

fn children_into<'a>(ps: &[Pattern], ns: &'a [XmlNode], b: &mut Bindings<'a>) -> bool {
    let Some((last, init)) = ps.split_last() else {
        return ns.is_empty();
    };
    match last {
        Pattern::Var(_) | Pattern::Anon => {
            if ns.len() < init.len() {
                return false;
            }
            let (head, tail) = ns.split_at(init.len());
            if !init.iter().zip(head).all(|(p, n)| match_into(p, n, b)) {
                return false;
            }
            match last {
                Pattern::Var(v) => b.bind(v, Value::NodeList(tail)),
                _ => true,
            }
        }
        _ => ns.len() == ps.len() && ps.iter().zip(ns).all(|(p, n)| match_into(p, n, b)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("'contains' needs an element or element list, got the string \"{0}\"")]
    TypeMismatch(String),
}

/// Every match of `p` in the subtree(s) of `root`, roots included, in
/// document order.
pub fn deep_contains<'a>(
    root: &Value<'a>,
    p: &Pattern,
    b: &Bindings<'a>,
) -> Result<Vec<Bindings<'a>>, MatchError> {
    let roots: &'a [XmlNode] = match root {
        Value::Node(n) => std::slice::from_ref(*n),
        Value::NodeList(ns) => ns,
        other => return Err(MatchError::TypeMismatch(other.projection())),
    };
    Ok(roots
        .iter()
        .flat_map(XmlNode::descendants)
        .filter_map(|n| match_node(p, n, b))
        .collect())
}

/// Syntactic unification of two terms under `b`. No occurs check.
pub fn unify<'a>(t1: &Term, t2: &Term, b: &Bindings<'a>) -> Option<Bindings<'a>> {
    let mut out = b.clone();
    unify_into(t1, t2, &mut out).then_some(out)
}

/// Unifies a term with an already computed value.
pub fn unify_value<'a>(t: &Term, v: &Value<'a>, b: &Bindings<'a>) -> Option<Bindings<'a>> {
    let mut out = b.clone();
    let ok = match resolve(t, &out) {
        Resolved::Wild => true,
        Resolved::Unbound(name) => out.bind(&name, v.clone()),
        Resolved::Value(existing) => existing.same(v),
        Resolved::Term(t) => match v {
            Value::Node(_) | Value::NodeList(_) => false,
            other => unify_into(&t, &other.to_term(), &mut out),
        },
    };
    ok.then_some(out)
}

enum Resolved<'a> {
    Wild,
    Unbound(String),
    /// A node or node list bound in the substitution.
    Value(Value<'a>),
    /// A non-variable term (possibly from a bound term value).
    Term(Term),
}

fn resolve<'a>(t: &Term, b: &Bindings<'a>) -> Resolved<'a> {
    match t {
        Term::Var(v) if v == ANON => Resolved::Wild,
        Term::Var(v) => match b.get(v) {
            None => Resolved::Unbound(b.root(v).to_string()),
            Some(val) if val.is_node() => Resolved::Value(val.clone()),
            Some(val) => resolve_owned(val.to_term(), b),
        },
        other => Resolved::Term(other.clone()),
    }
}

fn resolve_owned<'a>(t: Term, b: &Bindings<'a>) -> Resolved<'a> {
    match t {
        Term::Var(_) => resolve(&t, b),
        other => Resolved::Term(other),
    }
}

fn unify_into<'a>(t1: &Term, t2: &Term, b: &mut Bindings<'a>) -> bool {
    match (resolve(t1, b), resolve(t2, b)) {
        (Resolved::Wild, _) | (_, Resolved::Wild) => true,
        (Resolved::Unbound(x), Resolved::Unbound(y)) => {
            b.link(&x, &y);
            true
        }
        (Resolved::Unbound(x), Resolved::Value(v)) | (Resolved::Value(v), Resolved::Unbound(x)) => {
            b.bind(&x, v)
        }
        (Resolved::Unbound(x), Resolved::Term(t)) | (Resolved::Term(t), Resolved::Unbound(x)) => {
            let value = match b.substitute(&t) {
                Term::Str(s) => Value::Str(s),
                other => Value::Term(other),
            };
            b.bind(&x, value)
        }
        (Resolved::Value(a), Resolved::Value(c)) => a.same(&c),
        (Resolved::Value(_), Resolved::Term(_)) | (Resolved::Term(_), Resolved::Value(_)) => false,
        (Resolved::Term(a), Resolved::Term(c)) => match (&a, &c) {
            (Term::Str(x), Term::Str(y)) => x == y,
            (Term::Functor { name: n1, args: a1 }, Term::Functor { name: n2, args: a2 }) => {
                n1 == n2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| unify_into(x, y, b))
            }
            _ => false,
        },
    }
}
