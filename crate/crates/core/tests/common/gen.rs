//! Random trees, patterns and terms, plus the matcher invariants checked
//! over them. Shared by the property tests and the acceptance runner.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::sample::subsequence;
use proptest::test_runner::TestCaseError;

use semlint::dsl::{AttrPattern, AttrValue, Pattern, Term};
use semlint::matcher::{deep_contains, match_children, match_node, unify, Bindings, Value};
use semlint::xml::{Element, SourcePos, Text, XmlNode};

pub const NAMES: [&str; 4] = ["a", "b", "c", "t"];
pub const ATTRS: [&str; 3] = ["x", "y", "z"];
pub const VALS: [&str; 2] = ["1", "2"];
pub const VARS: [&str; 3] = ["A", "B", "C"];

pub fn arb_tree() -> impl Strategy<Value = XmlNode> {
    let leaf = prop_oneof![
        3 => (0..NAMES.len(), arb_attrs()).prop_map(|(n, attrs)| elem(NAMES[n], attrs, vec![])),
        1 => (0..VALS.len()).prop_map(|v| text(VALS[v])),
    ];
    leaf.prop_recursive(8, 400, 8, |inner| {
        (
            0..NAMES.len(),
            arb_attrs(),
            prop::collection::vec(inner, 0..9),
        )
            .prop_map(|(n, attrs, children)| elem(NAMES[n], attrs, children))
    })
    .prop_map(|t| {
        let mut t = match t {
            XmlNode::Text(_) => elem("a", vec![], vec![t]),
            e => e,
        };
        merge_text(&mut t);
        let mut budget = 200;
        truncate(&mut t, &mut budget);
        number(&mut t, &mut 1);
        t
    })
}

pub fn arb_attrs() -> impl Strategy<Value = Vec<(String, String)>> {
    subsequence(ATTRS.to_vec(), 0..=ATTRS.len()).prop_flat_map(|names| {
        let n = names.len();
        (Just(names), prop::collection::vec(0..VALS.len(), n)).prop_map(|(names, vals)| {
            names
                .into_iter()
                .zip(vals)
                .map(|(k, v)| (k.to_string(), VALS[v].to_string()))
                .collect()
        })
    })
}

pub fn elem(name: &str, attrs: Vec<(String, String)>, children: Vec<XmlNode>) -> XmlNode {
    XmlNode::Element(Element {
        name: name.into(),
        attrs,
        children,
        pos: SourcePos::new("gen.xml", 1),
    })
}

pub fn text(s: &str) -> XmlNode {
    XmlNode::Text(Text {
        content: s.into(),
        pos: SourcePos::new("gen.xml", 1),
    })
}

/// Joins adjacent text siblings, as a parser would.
pub fn merge_text(n: &mut XmlNode) {
    if let XmlNode::Element(e) = n {
        let mut out: Vec<XmlNode> = Vec::new();
        for mut c in std::mem::take(&mut e.children) {
            merge_text(&mut c);
            match (out.last_mut(), &c) {
                (Some(XmlNode::Text(prev)), XmlNode::Text(t)) => prev.content.push_str(&t.content),
                _ => out.push(c),
            }
        }
        e.children = out;
    }
}

/// Keeps at most `budget` nodes, in pre-order.
pub fn truncate(n: &mut XmlNode, budget: &mut usize) {
    *budget -= 1;
    if let XmlNode::Element(e) = n {
        let mut keep = 0;
        for c in e.children.iter_mut() {
            if *budget == 0 {
                break;
            }
            truncate(c, budget);
            keep += 1;
        }
        e.children.truncate(keep);
    }
}

/// Gives every node a distinct line: its pre-order number.
pub fn number(n: &mut XmlNode, next: &mut u32) {
    let line = *next;
    *next += 1;
    match n {
        XmlNode::Element(e) => {
            e.pos.line = line;
            e.children.iter_mut().for_each(|c| number(c, next));
        }
        XmlNode::Text(t) => t.pos.line = line,
    }
}

pub fn size(n: &XmlNode) -> usize {
    1 + n.children().iter().map(size).sum::<usize>()
}

pub fn arb_attr_pattern() -> impl Strategy<Value = Vec<AttrPattern>> {
    subsequence(ATTRS.to_vec(), 0..=2).prop_flat_map(|names| {
        let n = names.len();
        (Just(names), prop::collection::vec(arb_attr_value(), n)).prop_map(|(names, vals)| {
            names
                .into_iter()
                .zip(vals)
                .map(|(k, value)| AttrPattern {
                    name: k.to_string(),
                    value,
                })
                .collect()
        })
    })
}

pub fn arb_attr_value() -> impl Strategy<Value = AttrValue> {
    prop_oneof![
        (0..VALS.len()).prop_map(|v| AttrValue::Str(VALS[v].into())),
        (0..VARS.len()).prop_map(|v| AttrValue::Var(VARS[v].into())),
        Just(AttrValue::Anon),
    ]
}

pub fn arb_pattern() -> impl Strategy<Value = Pattern> {
    let leaf = prop_oneof![
        (0..VARS.len()).prop_map(|v| Pattern::Var(VARS[v].into())),
        Just(Pattern::Anon),
        (0..VALS.len()).prop_map(|v| Pattern::Text(VALS[v].into())),
        (0..NAMES.len(), arb_attr_pattern()).prop_map(|(n, attrs)| Pattern::EmptyElem {
            name: NAMES[n].into(),
            attrs
        }),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        (
            0..NAMES.len(),
            arb_attr_pattern(),
            prop::collection::vec(inner, 0..4),
        )
            .prop_map(|(n, attrs, children)| Pattern::Elem {
                name: NAMES[n].into(),
                attrs,
                children,
            })
    })
}

/// An element pattern (rule-head shaped).
pub fn arb_head() -> impl Strategy<Value = Pattern> {
    (
        0..NAMES.len(),
        arb_attr_pattern(),
        prop::collection::vec(arb_pattern(), 0..4),
    )
        .prop_map(|(n, attrs, children)| Pattern::Elem {
            name: NAMES[n].into(),
            attrs,
            children,
        })
}

pub fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0..VALS.len()).prop_map(|v| Term::str(VALS[v])),
        (0..VARS.len()).prop_map(|v| Term::var(VARS[v])),
        Just(Term::var("_")),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        (0..2usize, prop::collection::vec(inner, 0..3))
            .prop_map(|(f, args)| Term::functor(["f", "g"][f], args))
    })
}

pub fn arb_bindings() -> impl Strategy<Value = Bindings<'static>> {
    prop::collection::vec((0..VARS.len(), 0..VALS.len()), 0..3).prop_map(|pairs| {
        let mut b = Bindings::new();
        for (k, v) in pairs {
            b.bind(VARS[k], Value::Str(VALS[v].into()));
        }
        b
    })
}

// ---------------------------------------------------------------- helpers

/// Canonical serialization, attributes sorted by name.
pub fn canon_node(n: &XmlNode, out: &mut String) {
    match n {
        XmlNode::Text(t) => out.push_str(&format!("{:?}", t.content)),
        XmlNode::Element(e) => {
            let mut attrs = e.attrs.clone();
            attrs.sort();
            out.push_str(&format!("<{} {:?}>", e.name, attrs));
            e.children.iter().for_each(|c| canon_node(c, out));
            out.push_str("</>");
        }
    }
}

pub fn canon_value(v: &Value<'_>) -> String {
    let mut s = String::new();
    match v {
        Value::Node(n) => {
            s.push_str("node:");
            canon_node(n, &mut s);
        }
        Value::NodeList(ns) => {
            s.push_str("list:");
            ns.iter().for_each(|n| canon_node(n, &mut s));
        }
        other => s.push_str(&format!("str:{}", other.to_term())),
    }
    s
}

pub fn canon(b: &Option<Bindings<'_>>) -> Option<BTreeMap<String, String>> {
    b.as_ref().map(|b| {
        b.iter()
            .map(|(k, v)| (k.to_string(), canon_value(v)))
            .collect()
    })
}

/// Reverses the attribute list of every element.
pub fn permute_attrs(n: &XmlNode) -> XmlNode {
    match n {
        XmlNode::Text(_) => n.clone(),
        XmlNode::Element(e) => {
            let mut e = e.clone();
            e.attrs.reverse();
            if e.attrs.len() > 2 {
                e.attrs.swap(0, 1);
            }
            e.children = e.children.iter().map(permute_attrs).collect();
            XmlNode::Element(e)
        }
    }
}

/// Independent pre-order enumeration of every node of a forest.
pub fn all_nodes<'a>(roots: &'a [XmlNode], out: &mut Vec<&'a XmlNode>) {
    for r in roots {
        out.push(r);
        if let XmlNode::Element(e) = r {
            all_nodes(&e.children, out);
        }
    }
}

/// Renames every variable to a fresh name, making the pattern linear.
pub fn linearize(p: &Pattern, next: &mut usize) -> Pattern {
    let mut fresh = || {
        *next += 1;
        format!("V{next}")
    };
    match p {
        Pattern::Var(_) => Pattern::Var(fresh()),
        Pattern::Elem {
            name,
            attrs,
            children,
        } => Pattern::Elem {
            name: name.clone(),
            attrs: attrs
                .iter()
                .map(|a| AttrPattern {
                    name: a.name.clone(),
                    value: match a.value {
                        AttrValue::Var(_) => AttrValue::Var(fresh()),
                        ref v => v.clone(),
                    },
                })
                .collect(),
            children: children.iter().map(|c| linearize(c, next)).collect(),
        },
        Pattern::EmptyElem { name, attrs } => Pattern::EmptyElem {
            name: name.clone(),
            attrs: attrs
                .iter()
                .map(|a| AttrPattern {
                    name: a.name.clone(),
                    value: match a.value {
                        AttrValue::Var(_) => AttrValue::Var(fresh()),
                        ref v => v.clone(),
                    },
                })
                .collect(),
        },
        other => other.clone(),
    }
}

// ---------------------------------------------------------------- invariants

/// deep_contains agrees with trying every node in pre-order.
pub fn check_deep_contains(
    tree: &XmlNode,
    p: &Pattern,
    as_list: bool,
) -> Result<(), TestCaseError> {
    prop_assert!(size(tree) <= 200);
    let forest: Vec<XmlNode> = if as_list {
        tree.children().to_vec()
    } else {
        vec![tree.clone()]
    };
    let root = if as_list {
        Value::NodeList(&forest)
    } else {
        Value::Node(&forest[0])
    };
    let got = deep_contains(&root, p, &Bindings::new()).unwrap();
    let mut nodes = Vec::new();
    all_nodes(&forest, &mut nodes);
    let expected: Vec<Bindings<'_>> = nodes
        .into_iter()
        .filter_map(|n| match_node(p, n, &Bindings::new()))
        .collect();
    prop_assert_eq!(got, expected);
    Ok(())
}

pub fn check_match_monotone(
    tree: &XmlNode,
    p: &Pattern,
    b: &Bindings<'_>,
) -> Result<(), TestCaseError> {
    if let Some(out) = match_node(p, tree, b) {
        prop_assert!(out.extends(b));
    }
    for n in tree.descendants() {
        if let Some(out) = match_node(p, n, b) {
            prop_assert!(out.extends(b));
        }
    }
    Ok(())
}

pub fn check_unify_monotone(x: &Term, y: &Term, b: &Bindings<'_>) -> Result<(), TestCaseError> {
    if let Some(out) = unify(x, y, b) {
        prop_assert!(out.extends(b));
    }
    Ok(())
}

pub fn check_attr_order(tree: &XmlNode, p: &Pattern) -> Result<(), TestCaseError> {
    let permuted = permute_attrs(tree);
    let a: Vec<_> = tree
        .descendants()
        .map(|n| canon(&match_node(p, n, &Bindings::new())))
        .collect();
    let b: Vec<_> = permuted
        .descendants()
        .map(|n| canon(&match_node(p, n, &Bindings::new())))
        .collect();
    prop_assert_eq!(a, b);
    Ok(())
}

/// A list pattern ending in an open tail still matches after children are
/// appended. Variables are renamed apart first.
pub fn check_open_tail(
    tree: &XmlNode,
    ps: &[Pattern],
    tail_is_var: bool,
    extra: Vec<XmlNode>,
) -> Result<(), TestCaseError> {
    let mut n = 0;
    let mut ps: Vec<Pattern> = ps.iter().map(|p| linearize(p, &mut n)).collect();
    ps.push(if tail_is_var {
        Pattern::Var("Tail".into())
    } else {
        Pattern::Anon
    });
    let children = tree.children().to_vec();
    if match_children(&ps, &children, &Bindings::new()).is_some() {
        let mut longer = children.clone();
        longer.extend(extra);
        prop_assert!(match_children(&ps, &longer, &Bindings::new()).is_some());
    }
    Ok(())
}

pub fn check_unify_symmetric(x: &Term, y: &Term, b: &Bindings<'_>) -> Result<(), TestCaseError> {
    prop_assert_eq!(unify(x, y, b).is_some(), unify(y, x, b).is_some());
    prop_assert_eq!(
        unify(x, y, &Bindings::new()).is_some(),
        unify(y, x, &Bindings::new()).is_some()
    );
    Ok(())
}
