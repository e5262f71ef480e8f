//! Mode-switching tokenizer for rule files.
//!
//! Outside of XML fragments the lexer produces term tokens (names, strings,
//! operators). Once an opening tag is closed with `>` it switches to content
//! mode, where any run of characters up to the next `<` becomes a single
//! TEXT token. The element depth decides which mode to return to after a
//! tag ends.

use std::fmt;
use std::sync::Arc;

use super::DslError;
use crate::xml::SourcePos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    /// `<*`
    Skip,
    /// `=>`
    Arrow,
    /// `?`
    Question,
    /// `/`
    Slash,
    /// `->`
    Implies,
    /// `&`
    Amp,
    /// `:=`
    Assign,
    /// `;`
    Semi,
    /// `<$`
    VarOpen,
    /// `</`
    CloseOpen,
    /// `/>`
    EmptyClose,
    LParen,
    RParen,
    Comma,
    /// `=`
    Eq,
    /// `$`
    Dollar,
    /// `<`
    Lt,
    /// `>`
    Gt,
    Name,
    Str,
    Text,
}

impl TokenKind {
    pub fn describe(self) -> &'static str {
        match self {
            TokenKind::Skip => "'<*'",
            TokenKind::Arrow => "'=>'",
            TokenKind::Question => "'?'",
            TokenKind::Slash => "'/'",
            TokenKind::Implies => "'->'",
            TokenKind::Amp => "'&'",
            TokenKind::Assign => "':='",
            TokenKind::Semi => "';'",
            TokenKind::VarOpen => "'<$'",
            TokenKind::CloseOpen => "'</'",
            TokenKind::EmptyClose => "'/>'",
            TokenKind::LParen => "'('",
            TokenKind::RParen => "')'",
            TokenKind::Comma => "','",
            TokenKind::Eq => "'='",
            TokenKind::Dollar => "'$'",
            TokenKind::Lt => "'<'",
            TokenKind::Gt => "'>'",
            TokenKind::Name => "NAME",
            TokenKind::Str => "STRING",
            TokenKind::Text => "TEXT",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

/// For NAME the lexeme is the name, for STRING the unescaped value, for
/// TEXT the raw character run; otherwise the operator itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub pos: SourcePos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Term,
    OpenTag,
    CloseTag,
    VarTag,
    Content,
}

pub fn tokenize(text: &str, file: &str) -> Result<Vec<Token>, DslError> {
    let mut lx = Lexer {
        src: text,
        at: 0,
        line: 1,
        file: Arc::from(file),
        depth: 0,
        mode: Mode::Term,
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

struct Lexer<'s> {
    src: &'s str,
    at: usize,
    line: u32,
    file: Arc<str>,
    depth: usize,
    mode: Mode,
    out: Vec<Token>,
}

impl<'s> Lexer<'s> {
    fn pos(&self) -> SourcePos {
        SourcePos::new(self.file.clone(), self.line)
    }

    fn rest(&self) -> &'s str {
        &self.src[self.at..]
    }

    fn advance(&mut self, n: usize) {
        self.line += self.src[self.at..self.at + n]
            .bytes()
            .filter(|&b| b == b'\n')
            .count() as u32;
        self.at += n;
    }

    fn emit(&mut self, kind: TokenKind, len: usize) {
        let pos = self.pos();
        let lexeme = self.rest()[..len].to_string();
        self.advance(len);
        self.out.push(Token { kind, lexeme, pos });
    }

    fn skip_ws(&mut self) {
        let n = self.rest().len() - self.rest().trim_start().len();
        self.advance(n);
    }

    fn after_tag(&self) -> Mode {
        if self.depth > 0 {
            Mode::Content
        } else {
            Mode::Term
        }
    }

    fn error<T>(&self, detail: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Lex {
            pos: self.pos(),
            detail: detail.into(),
        })
    }

    fn run(&mut self) -> Result<(), DslError> {
        loop {
            if self.mode != Mode::Content {
                self.skip_ws();
            }
            let Some(c) = self.rest().chars().next() else {
                return Ok(());
            };
            match self.mode {
                Mode::Term => self.term_token(c)?,
                Mode::OpenTag => self.open_tag_token(c)?,
                Mode::CloseTag | Mode::VarTag => self.tag_name_token(c)?,
                Mode::Content => self.content_token(c)?,
            }
        }
    }

    /// `<`, `<$`, `</` start an XML construct in either term or content mode.
    fn angle(&mut self, allow_skip: bool) -> Result<(), DslError> {
        let rest = self.rest();
        if allow_skip && rest.starts_with("<*") {
            self.emit(TokenKind::Skip, 2);
        } else if rest.starts_with("<$") {
            self.emit(TokenKind::VarOpen, 2);
            self.mode = Mode::VarTag;
        } else if rest.starts_with("</") {
            self.emit(TokenKind::CloseOpen, 2);
            self.mode = Mode::CloseTag;
        } else {
            self.emit(TokenKind::Lt, 1);
            self.mode = Mode::OpenTag;
        }
        Ok(())
    }

    fn term_token(&mut self, c: char) -> Result<(), DslError> {
        let rest = self.rest();
        let two = |s: &str| rest.starts_with(s);
        match c {
            '<' => self.angle(true)?,
            '=' if two("=>") => self.emit(TokenKind::Arrow, 2),
            '=' => self.emit(TokenKind::Eq, 1),
            '-' if two("->") => self.emit(TokenKind::Implies, 2),
            ':' if two(":=") => self.emit(TokenKind::Assign, 2),
            '?' => self.emit(TokenKind::Question, 1),
            '/' => self.emit(TokenKind::Slash, 1),
            '&' => self.emit(TokenKind::Amp, 1),
            ';' => self.emit(TokenKind::Semi, 1),
            '(' => self.emit(TokenKind::LParen, 1),
            ')' => self.emit(TokenKind::RParen, 1),
            ',' => self.emit(TokenKind::Comma, 1),
            '$' => self.emit(TokenKind::Dollar, 1),
            '>' => self.emit(TokenKind::Gt, 1),
            '"' => self.string()?,
            c if is_term_name_char(c) => self.name(is_term_name_char),
            c => return self.error(format!("unexpected character '{c}'")),
        }
        Ok(())
    }

    fn open_tag_token(&mut self, c: char) -> Result<(), DslError> {
        match c {
            '/' if self.rest().starts_with("/>") => {
                self.emit(TokenKind::EmptyClose, 2);
                self.mode = self.after_tag();
            }
            '>' => {
                self.emit(TokenKind::Gt, 1);
                self.depth += 1;
                self.mode = Mode::Content;
            }
            '=' => self.emit(TokenKind::Eq, 1),
            '$' => self.emit(TokenKind::Dollar, 1),
            '"' => self.string()?,
            c if is_tag_name_char(c) => self.name(is_tag_name_char),
            c => return self.error(format!("unexpected character '{c}' in tag")),
        }
        Ok(())
    }

    fn tag_name_token(&mut self, c: char) -> Result<(), DslError> {
        match c {
            '>' => {
                self.emit(TokenKind::Gt, 1);
                if self.mode == Mode::CloseTag {
                    self.depth = self.depth.saturating_sub(1);
                }
                self.mode = self.after_tag();
            }
            c if is_tag_name_char(c) => self.name(is_tag_name_char),
            c => return self.error(format!("unexpected character '{c}' in tag")),
        }
        Ok(())
    }

    fn content_token(&mut self, c: char) -> Result<(), DslError> {
        if c == '<' {
            return self.angle(false);
        }
        let rest = self.rest();
        let end = rest.find('<').unwrap_or(rest.len());
        let raw = &rest[..end];
        // Text tokens are positioned at their first visible character.
        let lead = raw.len() - raw.trim_start().len();
        let line = self.line + raw[..lead].bytes().filter(|&b| b == b'\n').count() as u32;
        self.out.push(Token {
            kind: TokenKind::Text,
            lexeme: raw.to_string(),
            pos: SourcePos::new(self.file.clone(), line),
        });
        self.advance(end);
        Ok(())
    }

    fn name(&mut self, class: fn(char) -> bool) {
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|&(_, c)| !class(c))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        self.emit(TokenKind::Name, end);
    }

    fn string(&mut self) -> Result<(), DslError> {
        let start = self.pos();
        let rest = self.rest();
        let mut value = String::new();
        let mut chars = rest.char_indices().skip(1);
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.advance(i + 1);
                    self.out.push(Token {
                        kind: TokenKind::Str,
                        lexeme: value,
                        pos: start,
                    });
                    return Ok(());
                }
                '\\' => match chars.next() {
                    Some((_, '"')) => value.push('"'),
                    Some((_, '\\')) => value.push('\\'),
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, other)) => {
                        value.push('\\');
                        value.push(other);
                    }
                    None => break,
                },
                c => value.push(c),
            }
        }
        Err(DslError::Lex {
            pos: start,
            detail: "unterminated string".into(),
        })
    }
}

fn is_term_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_tag_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':')
}
