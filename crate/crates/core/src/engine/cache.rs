//! Text serialization of [`PassOneResult`].
//!
//! ```text
//! #input <sha256 hex>
//! #rules <sha256 hex>
//! #source "<file>"
//! personne("A","B","axis").
//! %origins 12
//! %tests
//! test("5","40",personne1($P,$N,$Proj),bindings(b("N","B"),...))/<li>...</li>
//! %diagnostics
//! diag("assignment-conflict","12","3","...")
//! ```
//!
//! Every term is written in canonical syntax, so identical results always
//! serialize to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::diagnostic::{Diagnostic, DiagnosticCode};
use crate::digest::Digest;
use crate::dsl::{parse_term, parse_test_form, quoted, Term};
use crate::xml::SourcePos;

use super::{DelayedTest, Fact, PassOneResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cache line {line}: {detail}")]
pub struct CacheError {
    pub line: usize,
    pub detail: String,
}

pub fn write_pass_one(r: &PassOneResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "#input {}", r.input_digest);
    let _ = writeln!(out, "#rules {}", r.rules_digest);
    let _ = writeln!(out, "#source {}", quoted(&r.source_file));
    for f in &r.facts {
        let _ = writeln!(out, "{}.", f.term);
    }
    let origins: Vec<String> = r.facts.iter().map(|f| f.origin.line.to_string()).collect();
    let _ = writeln!(out, "%origins {}", origins.join(","));
    out.push_str("%tests\n");
    for t in &r.tests {
        let bindings = Term::functor(
            "bindings",
            t.captured
                .iter()
                .map(|(k, v)| Term::functor("b", vec![Term::str(k.clone()), v.clone()]))
                .collect(),
        );
        let head = Term::functor(
            "test",
            vec![
                Term::str(t.rule_index.to_string()),
                Term::str(t.pos.line.to_string()),
                t.goal.clone(),
                bindings,
            ],
        );
        let _ = writeln!(out, "{head}{}{}", t.polarity.operator(), t.consequence);
    }
    out.push_str("%diagnostics\n");
    for d in &r.diagnostics {
        let diag = Term::functor(
            "diag",
            vec![
                Term::str(d.code.as_str()),
                Term::str(
                    d.pos
                        .as_ref()
                        .map(|p| p.line.to_string())
                        .unwrap_or_default(),
                ),
                Term::str(d.rule.map(|i| i.to_string()).unwrap_or_default()),
                Term::str(d.message.clone()),
            ],
        );
        let _ = writeln!(out, "{diag}");
    }
    out
}

pub fn read_pass_one(text: &str) -> Result<PassOneResult, CacheError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = |key: &str| -> Result<(usize, String), CacheError> {
        let (n, l) = lines.next().ok_or(CacheError {
            line: 0,
            detail: "truncated header".into(),
        })?;
        let rest = l
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| err(n, format!("expected {key}")))?;
        Ok((n, rest.to_string()))
    };
    let (n, input) = header("#input")?;
    let input_digest: Digest = input.parse().map_err(|e| err(n, e))?;
    let (n, rules) = header("#rules")?;
    let rules_digest: Digest = rules.parse().map_err(|e| err(n, e))?;
    let (n, source) = header("#source")?;
    let source_file = match parse_term(&source, "cache") {
        Ok(Term::Str(s)) => s,
        _ => return Err(err(n, "bad #source")),
    };
    let file: &str = &source_file;
    let pos = |line: &str, n: usize| -> Result<SourcePos, CacheError> {
        let l: u32 = line.parse().map_err(|_| err(n, "bad line number"))?;
        if l == 0 {
            return Err(err(n, "bad line number"));
        }
        Ok(SourcePos::new(file, l))
    };

    let mut terms = Vec::new();
    let mut origins = None;
    for (n, l) in lines.by_ref() {
        if let Some(rest) = l.strip_prefix("%origins") {
            origins = Some(
                rest.trim()
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| pos(s, n))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            break;
        }
        let body = l
            .strip_suffix('.')
            .ok_or_else(|| err(n, "fact without '.'"))?;
        let t = parse_term(body, "cache").map_err(|e| err(n, e))?;
        if !t.is_ground() || t.signature().is_none() {
            return Err(err(n, "fact is not a ground predicate"));
        }
        terms.push(t);
    }
    let origins = origins.ok_or_else(|| err(0, "missing %origins"))?;
    if origins.len() != terms.len() {
        return Err(err(0, "origin count does not match fact count"));
    }
    let facts = terms
        .into_iter()
        .zip(origins)
        .map(|(term, origin)| Fact { term, origin })
        .collect();

    expect(lines.next(), "%tests")?;
    let mut tests = Vec::new();
    for (n, l) in lines.by_ref() {
        if l == "%diagnostics" {
            break;
        }
        let (head, polarity, consequence) = parse_test_form(l, "cache").map_err(|e| err(n, e))?;
        let Term::Functor { name, args } = head else {
            return Err(err(n, "bad test record"));
        };
        let [Term::Str(rule), Term::Str(line), goal, Term::Functor {
            name: bname,
            args: bs,
        }] = <[Term; 4]>::try_from(args).map_err(|_| err(n, "bad test record"))?
        else {
            return Err(err(n, "bad test record"));
        };
        if name != "test" || bname != "bindings" {
            return Err(err(n, "bad test record"));
        }
        let mut captured = BTreeMap::new();
        for b in bs {
            match b {
                Term::Functor { name, args } if name == "b" && args.len() == 2 => {
                    let [Term::Str(k), v] = <[Term; 2]>::try_from(args).unwrap() else {
                        return Err(err(n, "bad binding"));
                    };
                    captured.insert(k, v);
                }
                _ => return Err(err(n, "bad binding")),
            }
        }
        tests.push(DelayedTest {
            rule_index: rule.parse().map_err(|_| err(n, "bad rule index"))?,
            polarity,
            goal,
            captured,
            consequence,
            pos: pos(&line, n)?,
        });
    }

    let mut diagnostics = Vec::new();
    for (n, l) in lines {
        let t = parse_term(l, "cache").map_err(|e| err(n, e))?;
        let Term::Functor { name, args } = t else {
            return Err(err(n, "bad diagnostic"));
        };
        let [Term::Str(code), Term::Str(line), Term::Str(rule), Term::Str(message)] =
            <[Term; 4]>::try_from(args).map_err(|_| err(n, "bad diagnostic"))?
        else {
            return Err(err(n, "bad diagnostic"));
        };
        if name != "diag" {
            return Err(err(n, "bad diagnostic"));
        }
        let code: DiagnosticCode = code.parse().map_err(|e| err(n, e))?;
        let mut d = Diagnostic::new(code, message);
        if !line.is_empty() {
            d = d.at(pos(&line, n)?);
        }
        if !rule.is_empty() {
            d = d.rule(rule.parse().map_err(|_| err(n, "bad rule index"))?);
        }
        diagnostics.push(d);
    }

    Ok(PassOneResult {
        source_file,
        facts,
        tests,
        diagnostics,
        input_digest,
        rules_digest,
    })
}

fn err(line: usize, detail: impl ToString) -> CacheError {
    CacheError {
        line,
        detail: detail.to_string(),
    }
}

fn expect(next: Option<(usize, &str)>, want: &str) -> Result<(), CacheError> {
    match next {
        Some((_, l)) if l == want => Ok(()),
        Some((n, _)) => Err(err(n, format!("expected {want}"))),
        None => Err(err(0, format!("missing {want}"))),
    }
}
