use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::DslError;
use crate::xml::SourcePos;

/// How text inside an XML fragment is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TextMode {
    /// Patterns that are matched against documents: whitespace-only runs
    /// are dropped, other text is kept verbatim.
    Match,
    /// Message templates: whitespace runs collapse to one space but are
    /// kept, so `<$P> <$N>` still renders with a separator.
    Template,
}

pub(crate) struct Parser<'t> {
    toks: &'t [Token],
    at: usize,
    eof: SourcePos,
}

impl<'t> Parser<'t> {
    pub(crate) fn new(toks: &'t [Token], eof: SourcePos) -> Self {
        Self { toks, at: 0, eof }
    }

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.at)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn peek2_kind(&self) -> Option<TokenKind> {
        self.toks.get(self.at + 1).map(|t| t.kind)
    }

    fn pos(&self) -> SourcePos {
        self.peek()
            .map(|t| t.pos.clone())
            .unwrap_or_else(|| self.eof.clone())
    }

    pub(crate) fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn unexpected<T>(&self, expected: &[&str]) -> Result<T, DslError> {
        let found = match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Name | TokenKind::Text) => {
                format!("{} '{}'", t.kind, t.lexeme.trim())
            }
            Some(t) if t.kind == TokenKind::Str => format!("STRING {}", quoted(&t.lexeme)),
            Some(t) => t.kind.describe().to_string(),
            None => "end of input".to_string(),
        };
        Err(DslError::Parse {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        })
    }

    fn eat(&mut self, kind: TokenKind) -> Option<&'t Token> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.at += 1;
                Some(t)
            }
            _ => None,
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&'t Token, DslError> {
        match self.eat(kind) {
            Some(t) => Ok(t),
            None => self.unexpected(&[kind.describe()]),
        }
    }

    fn name(&mut self) -> Result<String, DslError> {
        Ok(self.expect(TokenKind::Name)?.lexeme.clone())
    }

    pub(crate) fn rules(&mut self, first_index: usize) -> Result<Vec<Rule>, DslError> {
        let mut rules = Vec::new();
        while !self.at_end() {
            let rule = self.rule(first_index + rules.len())?;
            rules.push(rule);
        }
        Ok(rules)
    }

    fn rule(&mut self, index: usize) -> Result<Rule, DslError> {
        let pos = self.pos();
        let skipped = self.eat(TokenKind::Skip).is_some();
        // A text head is written as a string literal; bare words here would
        // be indistinguishable from the rule syntax around them.
        let pattern = match self.peek_kind() {
            Some(TokenKind::Str) => Pattern::Text(self.expect(TokenKind::Str)?.lexeme.clone()),
            Some(TokenKind::Lt | TokenKind::VarOpen | TokenKind::Text) => {
                self.element(TextMode::Match)?
            }
            _ => return self.unexpected(&["'<'", "'<*'", "STRING"]),
        };
        if matches!(pattern, Pattern::Var(_) | Pattern::Anon) {
            return Err(DslError::Invalid {
                pos,
                detail: "a rule head must be an element, not a variable".into(),
            });
        }
        let mut conditions = Vec::new();
        while self.eat(TokenKind::Amp).is_some() {
            conditions.push(self.condition()?);
        }
        let body = match self.peek_kind() {
            Some(TokenKind::Arrow) => {
                self.at += 1;
                let mut actions = vec![self.action()?];
                while self.eat(TokenKind::Amp).is_some() {
                    actions.push(self.action()?);
                }
                RuleBody::Env(actions)
            }
            Some(TokenKind::Question) => {
                self.at += 1;
                RuleBody::Test(self.test()?)
            }
            _ => return self.unexpected(&["'&'", "'=>'", "'?'"]),
        };
        self.expect(TokenKind::Semi)?;
        let rule = Rule {
            index,
            pattern,
            conditions,
            body,
            skipped,
            pos,
        };
        validate(&rule)?;
        Ok(rule)
    }

    fn condition(&mut self) -> Result<Condition, DslError> {
        match self.peek_kind() {
            Some(TokenKind::Dollar) => {
                self.at += 1;
                let var = self.name()?;
                match self.peek() {
                    Some(t) if t.kind == TokenKind::Name && t.lexeme == "contains" => self.at += 1,
                    _ => return self.unexpected(&["'contains'"]),
                }
                let pattern = self.element(TextMode::Match)?;
                Ok(Condition::Contains { var, pattern })
            }
            Some(TokenKind::Name) => {
                let name = self.name()?;
                self.expect(TokenKind::Eq)?;
                let rhs = self.term()?;
                Ok(Condition::Eq { name, rhs })
            }
            _ => self.unexpected(&["NAME", "'$'"]),
        }
    }

    fn action(&mut self) -> Result<Action, DslError> {
        if self.peek_kind() == Some(TokenKind::Name) && self.peek2_kind() == Some(TokenKind::Assign)
        {
            let name = self.name()?;
            self.at += 1;
            let value = self.term()?;
            return Ok(Action::Assign { name, value });
        }
        let pos = self.pos();
        let term = self.term()?;
        if !matches!(term, Term::Functor { .. }) {
            return Err(DslError::Invalid {
                pos,
                detail: format!("assertion {term} is not a predicate term"),
            });
        }
        Ok(Action::Assert(term))
    }

    fn test(&mut self) -> Result<Test, DslError> {
        let (goal, polarity) = self.goal_and_polarity()?;
        let consequence = self.consequence()?;
        Ok(Test {
            polarity,
            goal,
            consequence,
        })
    }

    pub(crate) fn goal_and_polarity(&mut self) -> Result<(Term, Polarity), DslError> {
        let pos = self.pos();
        let goal = self.term()?;
        if !matches!(goal, Term::Functor { .. }) {
            return Err(DslError::Invalid {
                pos,
                detail: format!("test goal {goal} is not a predicate term"),
            });
        }
        let polarity = match self.peek_kind() {
            Some(TokenKind::Slash) => Polarity::IfAbsent,
            Some(TokenKind::Implies) => Polarity::IfPresent,
            _ => return self.unexpected(&["'/'", "'->'"]),
        };
        self.at += 1;
        Ok((goal, polarity))
    }

    pub(crate) fn consequence(&mut self) -> Result<Consequence, DslError> {
        match self.peek_kind() {
            Some(TokenKind::Lt | TokenKind::VarOpen | TokenKind::Text) => {
                Ok(Consequence::Pattern(self.element(TextMode::Template)?))
            }
            _ => Ok(Consequence::Term(self.term()?)),
        }
    }

    pub(crate) fn term(&mut self) -> Result<Term, DslError> {
        match self.peek_kind() {
            Some(TokenKind::Name) => {
                let name = self.name()?;
                self.expect(TokenKind::LParen)?;
                let mut args = Vec::new();
                if self.eat(TokenKind::RParen).is_none() {
                    loop {
                        args.push(self.term()?);
                        if self.eat(TokenKind::Comma).is_some() {
                            continue;
                        }
                        self.expect(TokenKind::RParen)?;
                        break;
                    }
                }
                Ok(Term::Functor { name, args })
            }
            Some(TokenKind::Str) => Ok(Term::Str(self.expect(TokenKind::Str)?.lexeme.clone())),
            Some(TokenKind::Dollar) => {
                self.at += 1;
                Ok(Term::Var(self.name()?))
            }
            _ => self.unexpected(&["NAME", "STRING", "'$'"]),
        }
    }

    fn element(&mut self, mode: TextMode) -> Result<Pattern, DslError> {
        match self.peek_kind() {
            Some(TokenKind::Text) => {
                let raw = &self.expect(TokenKind::Text)?.lexeme;
                Ok(Pattern::Text(match mode {
                    TextMode::Match => raw.clone(),
                    TextMode::Template => collapse_ws(raw),
                }))
            }
            Some(TokenKind::VarOpen) => {
                self.at += 1;
                let name = self.name()?;
                self.expect(TokenKind::Gt)?;
                Ok(if name == ANON {
                    Pattern::Anon
                } else {
                    Pattern::Var(name)
                })
            }
            Some(TokenKind::Lt) => {
                let open = self.expect(TokenKind::Lt)?.pos.clone();
                let name = self.name()?;
                let attrs = self.attrs(&name)?;
                if self.eat(TokenKind::EmptyClose).is_some() {
                    return Ok(Pattern::EmptyElem { name, attrs });
                }
                if self.eat(TokenKind::Gt).is_none() {
                    return self.unexpected(&["NAME", "'>'", "'/>'"]);
                }
                let mut children = Vec::new();
                loop {
                    match self.peek_kind() {
                        Some(TokenKind::CloseOpen) => break,
                        Some(TokenKind::Text) => {
                            let raw = &self.toks[self.at].lexeme;
                            let blank = raw.trim().is_empty();
                            if blank && mode == TextMode::Match {
                                self.at += 1;
                                continue;
                            }
                            children.push(self.element(mode)?);
                        }
                        Some(TokenKind::Lt | TokenKind::VarOpen) => {
                            children.push(self.element(mode)?)
                        }
                        _ => {
                            let close = format!("'</{name}>'");
                            return self.unexpected(&[close.as_str()]);
                        }
                    }
                }
                let close_pos = self.expect(TokenKind::CloseOpen)?.pos.clone();
                let close = self.name()?;
                self.expect(TokenKind::Gt)?;
                if close != name {
                    return Err(DslError::TagMismatch {
                        open_name: name,
                        open,
                        close_name: close,
                        close: close_pos,
                    });
                }
                Ok(Pattern::Elem {
                    name,
                    attrs,
                    children,
                })
            }
            _ => self.unexpected(&["'<'", "'<$'", "TEXT"]),
        }
    }

    fn attrs(&mut self, element: &str) -> Result<Vec<AttrPattern>, DslError> {
        let mut attrs: Vec<AttrPattern> = Vec::new();
        while self.peek_kind() == Some(TokenKind::Name) {
            let pos = self.pos();
            let name = self.name()?;
            self.expect(TokenKind::Eq)?;
            let value = match self.peek_kind() {
                Some(TokenKind::Str) => AttrValue::Str(self.expect(TokenKind::Str)?.lexeme.clone()),
                Some(TokenKind::Dollar) => {
                    self.at += 1;
                    let v = self.name()?;
                    if v == ANON {
                        AttrValue::Anon
                    } else {
                        AttrValue::Var(v)
                    }
                }
                _ => return self.unexpected(&["STRING", "'$'"]),
            };
            if attrs.iter().any(|a| a.name == name) {
                return Err(DslError::Invalid {
                    pos,
                    detail: format!("duplicate attribute {name} in <{element}>"),
                });
            }
            attrs.push(AttrPattern { name, value });
        }
        Ok(attrs)
    }
}

/// Collapses whitespace runs to a single space, keeping one space at either
/// end if the original had any there.
fn collapse_ws(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut in_ws = false;
    for c in raw.chars() {
        if c.is_whitespace() {
            in_ws = true;
        } else {
            if in_ws {
                out.push(' ');
                in_ws = false;
            }
            out.push(c);
        }
    }
    if in_ws {
        out.push(' ');
    }
    out
}

/// Variables a pattern binds when it matches (element and attribute
/// positions).
fn element_vars(p: &Pattern, out: &mut BTreeSet<String>) {
    match p {
        Pattern::Var(v) => {
            out.insert(v.clone());
        }
        Pattern::Elem { children, .. } => children.iter().for_each(|c| element_vars(c, out)),
        _ => {}
    }
}

fn validate(rule: &Rule) -> Result<(), DslError> {
    let invalid = |detail: String| DslError::Invalid {
        pos: rule.pos.clone(),
        detail,
    };
    let mut node_vars = BTreeSet::new();
    element_vars(&rule.pattern, &mut node_vars);

    let mut bound = BTreeSet::from([SOURCE_FILE.to_string(), SOURCE_LINE.to_string()]);
    rule.pattern.collect_vars(&mut bound);
    for cond in &rule.conditions {
        match cond {
            Condition::Eq { rhs, .. } => rhs.collect_vars(&mut bound),
            Condition::Contains { var, pattern } => {
                if !node_vars.contains(var) {
                    return Err(invalid(format!(
                        "${var} in 'contains' is not an element variable of the rule pattern"
                    )));
                }
                pattern.collect_vars(&mut bound);
            }
        }
    }

    let check = |used: BTreeSet<String>, bound: &BTreeSet<String>, what: &str| match used
        .iter()
        .find(|v| *v != ANON && !bound.contains(*v))
    {
        Some(v) => Err(invalid(format!("${v} in {what} is never bound"))),
        None => Ok(()),
    };
    match &rule.body {
        RuleBody::Env(actions) => {
            for action in actions {
                let mut used = BTreeSet::new();
                match action {
                    Action::Assign { value, .. } => value.collect_vars(&mut used),
                    Action::Assert(t) => t.collect_vars(&mut used),
                }
                check(used, &bound, "an action")?;
            }
        }
        RuleBody::Test(test) => {
            let mut with_goal = bound.clone();
            test.goal.collect_vars(&mut with_goal);
            let mut used = BTreeSet::new();
            test.consequence.collect_vars(&mut used);
            check(used, &with_goal, "the test consequence")?;
        }
    }
    Ok(())
}

pub(crate) fn tokens(text: &str, file: &str) -> Result<(Vec<Token>, SourcePos), DslError> {
    let toks = tokenize(text, file)?;
    let last_line = 1 + text.bytes().filter(|&b| b == b'\n').count() as u32;
    Ok((toks, SourcePos::new(file, last_line)))
}
