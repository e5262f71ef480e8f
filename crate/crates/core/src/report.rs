//! Message rendering and report assembly.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::dsl::{AttrValue, Consequence, Pattern, ANON};
use crate::matcher::Bindings;
use crate::xml::{normalize_whitespace, SourcePos};

/// A warning about document content, produced by a test rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub pos: SourcePos,
    pub rule_index: usize,
    pub html: String,
    pub text: String,
    /// Canonical `Name="value"` list of the bindings contributed by the
    /// solution this message reports; empty for `/` tests.
    pub solution_key: String,
}

impl Message {
    fn sort_key(&self) -> (&SourcePos, usize, &str, &str) {
        (&self.pos, self.rule_index, &self.solution_key, &self.html)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("${0} is unbound")]
    Unbound(String),
}

/// Instantiates a consequence. Returns the HTML fragment (projections
/// escaped) and its plain-text form (tags stripped). Both are
/// whitespace-normalized.
pub fn render_consequence(
    c: &Consequence,
    b: &Bindings<'_>,
) -> Result<(String, String), RenderError> {
    match c {
        Consequence::Term(t) => {
            let t = b.substitute(t);
            let mut vars = Default::default();
            t.collect_vars(&mut vars);
            if let Some(v) = vars.into_iter().next() {
                return Err(RenderError::Unbound(v));
            }
            let text = t.to_string();
            Ok((escape_html(&text), text))
        }
        Consequence::Pattern(p) => {
            let mut html = String::new();
            let mut text = String::new();
            render_pattern(p, b, &mut html, &mut text)?;
            Ok((normalize_whitespace(&html), normalize_whitespace(&text)))
        }
    }
}

fn render_pattern(
    p: &Pattern,
    b: &Bindings<'_>,
    html: &mut String,
    text: &mut String,
) -> Result<(), RenderError> {
    match p {
        Pattern::Text(t) => {
            html.push_str(t);
            text.push_str(t);
        }
        Pattern::Anon => {}
        Pattern::Var(v) => {
            let value = lookup(v, b)?;
            html.push_str(&escape_html(&value));
            text.push_str(&value);
        }
        Pattern::Elem {
            name,
            attrs,
            children,
        } => {
            open_tag(name, attrs, b, html)?;
            html.push('>');
            for c in children {
                render_pattern(c, b, html, text)?;
            }
            let _ = write!(html, "</{name}>");
        }
        Pattern::EmptyElem { name, attrs } => {
            open_tag(name, attrs, b, html)?;
            html.push_str("/>");
        }
    }
    Ok(())
}

fn open_tag(
    name: &str,
    attrs: &[crate::dsl::AttrPattern],
    b: &Bindings<'_>,
    html: &mut String,
) -> Result<(), RenderError> {
    let _ = write!(html, "<{name}");
    for a in attrs {
        let value = match &a.value {
            AttrValue::Str(s) => s.clone(),
            AttrValue::Var(v) => lookup(v, b)?,
            AttrValue::Anon => String::new(),
        };
        let _ = write!(html, " {}=\"{}\"", a.name, escape_html(&value));
    }
    Ok(())
}

fn lookup(v: &str, b: &Bindings<'_>) -> Result<String, RenderError> {
    if v == ANON {
        return Ok(String::new());
    }
    b.get(v)
        .map(|val| val.projection())
        .ok_or_else(|| RenderError::Unbound(v.to_string()))
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Html,
    #[default]
    Text,
    Machine,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "html" => Ok(Format::Html),
            "text" => Ok(Format::Text),
            "machine" => Ok(Format::Machine),
            other => Err(format!(
                "unknown format {other:?} (expected html, text or machine)"
            )),
        }
    }
}

/// Sorted, duplicate-free copies of the inputs, in report order.
pub fn normalize(msgs: &[Message], diags: &[Diagnostic]) -> (Vec<Message>, Vec<Diagnostic>) {
    let mut msgs = msgs.to_vec();
    msgs.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then_with(|| a.cmp(b)));
    msgs.dedup();
    let mut diags = diags.to_vec();
    diags.sort();
    diags.dedup();
    (msgs, diags)
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("1 {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn summary(messages: usize, diagnostics: usize) -> String {
    let mut s = format!(
        "{}, {}",
        plural(messages, "message"),
        plural(diagnostics, "diagnostic")
    );
    if messages == 0 && diagnostics == 0 {
        s.push_str(": ok");
    }
    s
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record<'a> {
    Message {
        file: &'a str,
        line: u32,
        rule: usize,
        text: &'a str,
        html: &'a str,
    },
    Diagnostic {
        file: Option<&'a str>,
        line: Option<u32>,
        rule: Option<usize>,
        code: &'a str,
        message: &'a str,
    },
    Summary {
        messages: usize,
        diagnostics: usize,
        ok: bool,
    },
}

/// Renders a complete report. Output depends only on the set of messages
/// and diagnostics, not on their order.
pub fn emit_report(msgs: &[Message], diags: &[Diagnostic], format: Format) -> String {
    let (msgs, diags) = normalize(msgs, diags);
    let mut out = String::new();
    match format {
        Format::Text => {
            for m in &msgs {
                let _ = writeln!(out, "{}: warning: {}", m.pos, m.text);
            }
            for d in &diags {
                let _ = writeln!(out, "{d}");
            }
            let _ = writeln!(out, "{}", summary(msgs.len(), diags.len()));
        }
        Format::Html => {
            out.push_str("<ul class=\"semlint-messages\">\n");
            for m in &msgs {
                if m.html.starts_with("<li") {
                    let _ = writeln!(out, "{}", m.html);
                } else {
                    let _ = writeln!(out, "<li>{}</li>", m.html);
                }
            }
            out.push_str("</ul>\n");
            if !diags.is_empty() {
                out.push_str("<ul class=\"semlint-diagnostics\">\n");
                for d in &diags {
                    let _ = writeln!(out, "<li>{}</li>", escape_html(&d.to_string()));
                }
                out.push_str("</ul>\n");
            }
            let _ = writeln!(
                out,
                "<p class=\"semlint-summary\">{}</p>",
                summary(msgs.len(), diags.len())
            );
        }
        Format::Machine => {
            let mut line = |r: Record<'_>| {
                out.push_str(&serde_json::to_string(&r).expect("records serialize"));
                out.push('\n');
            };
            for m in &msgs {
                line(Record::Message {
                    file: &m.pos.file,
                    line: m.pos.line,
                    rule: m.rule_index,
                    text: &m.text,
                    html: &m.html,
                });
            }
            for d in &diags {
                line(Record::Diagnostic {
                    file: d.pos.as_ref().map(|p| &*p.file),
                    line: d.pos.as_ref().map(|p| p.line),
                    rule: d.rule,
                    code: d.code.as_str(),
                    message: &d.message,
                });
            }
            line(Record::Summary {
                messages: msgs.len(),
                diagnostics: diags.len(),
                ok: msgs.is_empty() && diags.is_empty(),
            });
        }
    }
    out
}
