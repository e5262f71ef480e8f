//! Position-annotated XML trees.
//!
//! A small, non-validating parser: no DTD processing, no namespace
//! resolution. Comments, processing instructions and the doctype are
//! discarded, CDATA is folded into text, and whitespace-only text children
//! are dropped. Every node remembers the line it starts on so diagnostics
//! can point back into the source.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A file name (as given by the caller) and a 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourcePos {
    pub file: Arc<str>,
    pub line: u32,
}

impl SourcePos {
    pub fn new(file: impl Into<Arc<str>>, line: u32) -> Self {
        debug_assert!(line >= 1);
        Self {
            file: file.into(),
            line,
        }
    }
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<XmlNode>,
    pub pos: SourcePos,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Text {
    pub content: String,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XmlNode {
    Element(Element),
    Text(Text),
}

impl XmlNode {
    pub fn pos(&self) -> &SourcePos {
        match self {
            XmlNode::Element(e) => &e.pos,
            XmlNode::Text(t) => &t.pos,
        }
    }

    pub fn as_element(&self) -> Option<&Element> {
        match self {
            XmlNode::Element(e) => Some(e),
            XmlNode::Text(_) => None,
        }
    }

    pub fn children(&self) -> &[XmlNode] {
        match self {
            XmlNode::Element(e) => &e.children,
            XmlNode::Text(_) => &[],
        }
    }

    /// Structural equality ignoring source positions and attribute order.
    pub fn same_content(&self, other: &XmlNode) -> bool {
        match (self, other) {
            (XmlNode::Text(a), XmlNode::Text(b)) => a.content == b.content,
            (XmlNode::Element(a), XmlNode::Element(b)) => {
                a.name == b.name
                    && a.attrs.len() == b.attrs.len()
                    && a.attrs.iter().all(|(n, v)| b.attr(n) == Some(v.as_str()))
                    && a.children.len() == b.children.len()
                    && a.children
                        .iter()
                        .zip(&b.children)
                        .all(|(x, y)| x.same_content(y))
            }
            _ => false,
        }
    }

    /// Appends the raw text content of this subtree, in document order.
    pub fn collect_text(&self, out: &mut String) {
        match self {
            XmlNode::Text(t) => out.push_str(&t.content),
            XmlNode::Element(e) => e.children.iter().for_each(|c| c.collect_text(out)),
        }
    }

    /// Pre-order iteration over this node and all of its descendants.
    pub fn descendants(&self) -> Descendants<'_> {
        Descendants { stack: vec![self] }
    }
}

pub struct Descendants<'a> {
    stack: Vec<&'a XmlNode>,
}

impl<'a> Iterator for Descendants<'a> {
    type Item = &'a XmlNode;

    fn next(&mut self) -> Option<&'a XmlNode> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children().iter().rev());
        Some(node)
    }
}

/// Collapses runs of whitespace to a single space and trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XmlError {
    #[error("{pos}: malformed XML: {detail}")]
    Malformed { pos: SourcePos, detail: String },
    #[error("{pos}: input is not valid UTF-8: {detail}")]
    Encoding { pos: SourcePos, detail: String },
}

impl XmlError {
    pub fn pos(&self) -> &SourcePos {
        match self {
            XmlError::Malformed { pos, .. } | XmlError::Encoding { pos, .. } => pos,
        }
    }
}

/// Parses a complete document and returns its root element.
pub fn parse_xml(bytes: &[u8], file: &str) -> Result<XmlNode, XmlError> {
    let file: Arc<str> = Arc::from(file);
    let text = match std::str::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => {
            let good = &bytes[..e.valid_up_to()];
            let line = 1 + good.iter().filter(|&&b| b == b'\n').count() as u32;
            return Err(XmlError::Encoding {
                pos: SourcePos::new(file, line),
                detail: format!("invalid byte sequence at offset {}", e.valid_up_to()),
            });
        }
    };
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut parser = Parser {
        src: text,
        at: 0,
        line: 1,
        file,
    };
    parser.document()
}

struct Parser<'s> {
    src: &'s str,
    at: usize,
    line: u32,
    file: Arc<str>,
}

impl<'s> Parser<'s> {
    fn pos(&self) -> SourcePos {
        SourcePos::new(self.file.clone(), self.line)
    }

    fn error<T>(&self, detail: impl Into<String>) -> Result<T, XmlError> {
        self.error_at(self.pos(), detail)
    }

    fn error_at<T>(&self, pos: SourcePos, detail: impl Into<String>) -> Result<T, XmlError> {
        Err(XmlError::Malformed {
            pos,
            detail: detail.into(),
        })
    }

    fn rest(&self) -> &'s str {
        &self.src[self.at..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn eof(&self) -> bool {
        self.at >= self.src.len()
    }

    fn advance(&mut self, n: usize) {
        let consumed = &self.src[self.at..self.at + n];
        self.line += consumed.bytes().filter(|&b| b == b'\n').count() as u32;
        self.at += n;
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.advance(s.len());
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        let n = self.rest().len() - self.rest().trim_start_matches(is_xml_ws).len();
        self.advance(n);
    }

    /// Consumes up to and including `end`; returns the skipped body.
    fn skip_past(&mut self, end: &str, what: &str) -> Result<&'s str, XmlError> {
        let start = self.pos();
        match self.rest().find(end) {
            Some(i) => {
                let body = &self.rest()[..i];
                self.advance(i + end.len());
                Ok(body)
            }
            None => self.error_at(start, format!("unterminated {what}")),
        }
    }

    fn document(&mut self) -> Result<XmlNode, XmlError> {
        self.misc(true)?;
        if self.eof() {
            return self.error("no root element");
        }
        if self.peek() != Some('<') {
            return self.error("text before the root element");
        }
        let root = self.element()?;
        self.misc(false)?;
        if !self.eof() {
            return self.error("content after the root element");
        }
        Ok(XmlNode::Element(root))
    }

    /// Skips whitespace, comments, processing instructions and (in the
    /// prolog) a doctype declaration.
    fn misc(&mut self, prolog: bool) -> Result<(), XmlError> {
        loop {
            self.skip_ws();
            if self.rest().starts_with("<!--") {
                self.advance(4);
                self.skip_past("-->", "comment")?;
            } else if self.rest().starts_with("<?") {
                self.advance(2);
                self.skip_past("?>", "processing instruction")?;
            } else if prolog && self.rest().starts_with("<!DOCTYPE") {
                self.doctype()?;
            } else {
                return Ok(());
            }
        }
    }

    fn doctype(&mut self) -> Result<(), XmlError> {
        let start = self.pos();
        let mut depth = 0usize;
        let mut quote: Option<char> = None;
        let mut len = 0;
        for c in self.rest().chars() {
            len += c.len_utf8();
            match (quote, c) {
                (Some(q), c) if c == q => quote = None,
                (Some(_), _) => {}
                (None, '"' | '\'') => quote = Some(c),
                (None, '[') => depth += 1,
                (None, ']') => depth = depth.saturating_sub(1),
                (None, '>') if depth == 0 => {
                    self.advance(len);
                    return Ok(());
                }
                _ => {}
            }
        }
        self.error_at(start, "unterminated doctype declaration")
    }

    fn name(&mut self) -> Result<String, XmlError> {
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if is_name_start(c) => {}
            Some((_, c)) => return self.error(format!("expected a name, found '{c}'")),
            None => return self.error("expected a name, found end of input"),
        }
        let end = chars
            .find(|&(_, c)| !is_name_char(c))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let name = rest[..end].to_string();
        self.advance(end);
        Ok(name)
    }

    fn element(&mut self) -> Result<Element, XmlError> {
        let pos = self.pos();
        debug_assert_eq!(self.peek(), Some('<'));
        self.advance(1);
        let name = self.name()?;
        let mut attrs: Vec<(String, String)> = Vec::new();
        loop {
            let had_ws = {
                let before = self.at;
                self.skip_ws();
                self.at != before
            };
            if self.eat("/>") {
                return Ok(Element {
                    name,
                    attrs,
                    children: Vec::new(),
                    pos,
                });
            }
            if self.eat(">") {
                break;
            }
            if self.eof() {
                return self.error_at(pos, format!("unterminated tag <{name}"));
            }
            if !had_ws {
                return self.error(format!("expected whitespace, '>' or '/>' in tag <{name}"));
            }
            let attr_pos = self.pos();
            let attr = self.name()?;
            self.skip_ws();
            if !self.eat("=") {
                return self.error(format!("expected '=' after attribute {attr}"));
            }
            self.skip_ws();
            let value = self.attr_value()?;
            if attrs.iter().any(|(n, _)| *n == attr) {
                return self.error_at(attr_pos, format!("duplicate attribute {attr} in <{name}>"));
            }
            attrs.push((attr, value));
        }

        let mut children = Vec::new();
        let mut text = TextRun::default();
        loop {
            if self.eof() {
                return self.error_at(
                    pos,
                    format!("unterminated element <{name}>, close tag {name} expected"),
                );
            }
            let rest = self.rest();
            if rest.starts_with("</") {
                text.flush(&mut children);
                let close_pos = self.pos();
                self.advance(2);
                let close = self.name()?;
                self.skip_ws();
                if !self.eat(">") {
                    return self.error(format!("expected '>' to end close tag {close}"));
                }
                if close != name {
                    return self.error_at(
                        close_pos,
                        format!("close tag {name} expected, found </{close}>"),
                    );
                }
                return Ok(Element {
                    name,
                    attrs,
                    children,
                    pos,
                });
            } else if rest.starts_with("<!--") {
                self.advance(4);
                self.skip_past("-->", "comment")?;
            } else if rest.starts_with("<![CDATA[") {
                self.advance(9);
                let line = self.line;
                let body = self.skip_past("]]>", "CDATA section")?;
                text.push(&body.replace("\r\n", "\n"), line, &self.file);
            } else if rest.starts_with("<?") {
                self.advance(2);
                self.skip_past("?>", "processing instruction")?;
            } else if rest.starts_with('<') {
                text.flush(&mut children);
                children.push(XmlNode::Element(self.element()?));
            } else {
                let end = rest.find('<').unwrap_or(rest.len());
                let line = self.line;
                let raw = &rest[..end];
                let decoded = self.decode(raw, false)?;
                self.advance(end);
                text.push(&decoded, line, &self.file);
            }
        }
    }

    fn attr_value(&mut self) -> Result<String, XmlError> {
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return self.error("expected a quoted attribute value"),
        };
        let start = self.pos();
        self.advance(1);
        let rest = self.rest();
        let Some(end) = rest.find(quote) else {
            return self.error_at(start, "unterminated attribute value");
        };
        let raw = &rest[..end];
        if raw.contains('<') {
            return self.error("'<' not allowed in attribute value");
        }
        let value = self.decode(raw, true)?;
        self.advance(end + 1);
        Ok(value)
    }

    /// Expands entity and character references. Attribute values also get
    /// their literal tabs and newlines normalized to spaces.
    fn decode(&self, raw: &str, attribute: bool) -> Result<String, XmlError> {
        let raw = raw.replace("\r\n", "\n");
        let mut out = String::with_capacity(raw.len());
        let mut line = self.line;
        let mut rest = raw.as_str();
        while let Some(i) =
            rest.find(|c| c == '&' || c == '\n' || (attribute && (c == '\t' || c == '\r')))
        {
            out.push_str(&rest[..i]);
            let c = rest[i..].chars().next().unwrap_or('&');
            if c != '&' {
                if c == '\n' {
                    line += 1;
                }
                out.push(if attribute { ' ' } else { c });
                rest = &rest[i + 1..];
                continue;
            }
            let after = &rest[i + 1..];
            let Some(semi) = after.find(';') else {
                return self.error_at(
                    SourcePos::new(self.file.clone(), line),
                    "bad entity: unterminated reference",
                );
            };
            let entity = &after[..semi];
            match decode_entity(entity) {
                Some(ch) => out.push(ch),
                None => {
                    return self.error_at(
                        SourcePos::new(self.file.clone(), line),
                        format!("bad entity &{entity};"),
                    )
                }
            }
            rest = &after[semi + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

fn decode_entity(entity: &str) -> Option<char> {
    match entity {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        _ => {
            let code = if let Some(hex) = entity.strip_prefix("#x") {
                u32::from_str_radix(hex, 16).ok()?
            } else {
                entity.strip_prefix('#')?.parse().ok()?
            };
            char::from_u32(code)
        }
    }
}

/// Accumulates adjacent character data (text, CDATA) into one node.
#[derive(Default)]
struct TextRun {
    content: String,
    pos: Option<SourcePos>,
}

impl TextRun {
    fn push(&mut self, s: &str, start_line: u32, file: &Arc<str>) {
        if self.pos.is_none() {
            // Position of the first non-whitespace character.
            if let Some(i) = s.find(|c: char| !is_xml_ws(c)) {
                let nl = s[..i].bytes().filter(|&b| b == b'\n').count() as u32;
                self.pos = Some(SourcePos::new(file.clone(), start_line + nl));
            }
        }
        self.content.push_str(s);
    }

    fn flush(&mut self, children: &mut Vec<XmlNode>) {
        let content = std::mem::take(&mut self.content);
        if let Some(pos) = self.pos.take() {
            children.push(XmlNode::Text(Text { content, pos }));
        }
    }
}

fn is_xml_ws(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\r' | '\n')
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == ':'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | ':' | '-' | '.') || c == '\u{b7}'
}
