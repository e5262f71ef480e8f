//! The rule language: lexer, AST and parser.
//!
//! A rule file is a sequence of `;`-terminated rules. Each rule has an XML
//! pattern head (with `$`-variables), optional `&`-separated conditions, and
//! either environment actions after `=>` or a single test after `?`.

pub mod ast;
pub mod lexer;
mod parser;

use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};

use crate::digest::Digest;
use crate::xml::SourcePos;
use parser::Parser;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("{pos}: {detail}")]
    Lex { pos: SourcePos, detail: String },
    #[error("{pos}: expected {}, found {found}", expected.join(" or "))]
    Parse {
        pos: SourcePos,
        expected: Vec<String>,
        found: String,
    },
    #[error("{close}: close tag {close_name} does not match {open_name} (opened at line {})", open.line)]
    TagMismatch {
        open_name: String,
        open: SourcePos,
        close_name: String,
        close: SourcePos,
    },
    #[error("{pos}: {detail}")]
    Invalid { pos: SourcePos, detail: String },
}

impl DslError {
    pub fn pos(&self) -> &SourcePos {
        match self {
            DslError::Lex { pos, .. }
            | DslError::Parse { pos, .. }
            | DslError::Invalid { pos, .. } => pos,
            DslError::TagMismatch { close, .. } => close,
        }
    }

    /// The error text without its leading position.
    pub fn detail(&self) -> String {
        let full = self.to_string();
        let prefix = format!("{}: ", self.pos());
        full.strip_prefix(&prefix)
            .map(str::to_string)
            .unwrap_or(full)
    }
}

/// Parses a single rule file.
pub fn parse_rules(text: &str, file: &str) -> Result<RuleSet, DslError> {
    parse_rule_sources([(file, text)])
}

/// Parses several rule files as one rule set, in the given order. Rule
/// indices run densely across files starting at 1.
pub fn parse_rule_sources<'a>(
    sources: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<RuleSet, DslError> {
    let mut rules = Vec::new();
    let mut texts: Vec<&[u8]> = Vec::new();
    for (file, text) in sources {
        let (toks, eof) = parser::tokens(text, file)?;
        let mut p = Parser::new(&toks, eof);
        rules.extend(p.rules(rules.len() + 1)?);
        texts.push(text.as_bytes());
    }
    Ok(RuleSet {
        rules,
        source_hash: Digest::of_parts(texts),
    })
}

/// Parses a standalone term such as `head("Smith",$X)`.
pub fn parse_term(text: &str, file: &str) -> Result<Term, DslError> {
    let (toks, eof) = parser::tokens(text, file)?;
    let mut p = Parser::new(&toks, eof);
    let t = p.term()?;
    finish(&p, t)
}

/// Parses `term op consequence` where `op` is `/` or `->`; the form used to
/// persist delayed tests.
pub(crate) fn parse_test_form(
    text: &str,
    file: &str,
) -> Result<(Term, Polarity, Consequence), DslError> {
    let (toks, eof) = parser::tokens(text, file)?;
    let mut p = Parser::new(&toks, eof);
    let (head, polarity) = p.goal_and_polarity()?;
    let consequence = p.consequence()?;
    finish(&p, (head, polarity, consequence))
}

fn finish<T>(p: &Parser<'_>, value: T) -> Result<T, DslError> {
    if p.at_end() {
        Ok(value)
    } else {
        Err(DslError::Invalid {
            pos: SourcePos::new("<input>", 1),
            detail: "trailing tokens".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(src: &str) -> Rule {
        let mut set = parse_rules(src, "t.rules").unwrap();
        assert_eq!(set.rules.len(), 1);
        set.rules.remove(0)
    }

    #[test]
    fn head_rule_from_department_example() {
        let r = rule("<head><$P></head> & dept=$X => head($P,$X);");
        assert_eq!(
            r.pattern,
            Pattern::Elem {
                name: "head".into(),
                attrs: vec![],
                children: vec![Pattern::Var("P".into())],
            }
        );
        assert_eq!(
            r.conditions,
            vec![Condition::Eq {
                name: "dept".into(),
                rhs: Term::var("X")
            }]
        );
        assert_eq!(
            r.body,
            RuleBody::Env(vec![Action::Assert(Term::functor(
                "head",
                vec![Term::var("P"), Term::var("X")]
            ))])
        );
        assert!(!r.skipped);
        assert_eq!(r.index, 1);
    }

    #[test]
    fn close_tag_mismatch() {
        let err = parse_rules("<a><$_></b> => x := \"1\";", "t.rules").unwrap_err();
        assert!(matches!(err, DslError::TagMismatch { .. }));
        assert!(
            err.to_string().contains("close tag b does not match a"),
            "{err}"
        );
    }

    #[test]
    fn skipped_rule_is_parsed_and_marked() {
        let r = rule("<* <a><$_></a> => x := \"1\";");
        assert!(r.skipped);
        assert_eq!(r.pattern.to_string(), "<a><$_></a>");
    }

    #[test]
    fn test_rule_with_template() {
        let r = rule(
            "<agent><$P></agent>\n  ? appointment($P,$X)\n    / <li> Warning: <$P> line <$SourceLine>\n does not appear.\n </li>;",
        );
        let RuleBody::Test(t) = &r.body else { panic!() };
        assert_eq!(t.polarity, Polarity::IfAbsent);
        assert_eq!(
            t.consequence.to_string(),
            "<li> Warning: <$P> line <$SourceLine> does not appear. </li>"
        );
    }

    #[test]
    fn template_keeps_separators_between_variables() {
        let r = rule("<p a=$A b=$B/> ? f($A) -> <i> <$A> <$B> </i>;");
        let RuleBody::Test(t) = &r.body else { panic!() };
        assert_eq!(t.polarity, Polarity::IfPresent);
        assert_eq!(t.consequence.to_string(), "<i> <$A> <$B> </i>");
    }

    #[test]
    fn anonymous_variables() {
        let r = rule("<a x=$_><$_></a> => f(\"1\");");
        assert_eq!(r.pattern.to_string(), "<a x=$_><$_></a>");
    }

    #[test]
    fn conditions_and_actions_lists() {
        let r = rule("<raweb year=$X> <$_> </raweb> => year := $X & defperso := \"false\";");
        let RuleBody::Env(actions) = &r.body else {
            panic!()
        };
        assert_eq!(actions.len(), 2);
        let r = rule("<c> <$A> </c> & $A contains <t><$T></t> & k = \"v\" => title := $T;");
        assert_eq!(r.conditions.len(), 2);
    }

    #[test]
    fn rule_positions_are_first_token_lines() {
        let set = parse_rules(
            "\n<a/> => x := \"1\";\n\n<* <b/>\n => y := \"2\";",
            "t.rules",
        )
        .unwrap();
        let lines: Vec<_> = set.rules.iter().map(|r| r.pos.line).collect();
        assert_eq!(lines, [2, 4]);
        assert_eq!(
            set.rules.iter().map(|r| r.index).collect::<Vec<_>>(),
            [1, 2]
        );
    }

    #[test]
    fn rejects_bad_rules() {
        let cases = [
            ("<$X> => x := \"1\";", "must be an element"),
            ("<a/> => \"lit\";", "not a predicate"),
            ("<a/> => f($Y);", "$Y in an action is never bound"),
            (
                "<a x=$V/> & $V contains <b/> => f($V);",
                "not an element variable",
            ),
            (
                "<a/> ? g(\"x\") / <li><$Q></li>;",
                "$Q in the test consequence",
            ),
            ("<a x=\"1\" x=\"2\"/> => f(\"1\");", "duplicate attribute"),
            ("<a/> => x := \"1\"; trailing", "expected"),
            ("<a/> => x := \"1\"", "expected ';'"),
            ("<a/> x := \"1\";", "'=>'"),
        ];
        for (src, needle) in cases {
            let err = parse_rules(src, "t.rules").unwrap_err();
            assert!(err.to_string().contains(needle), "{src}: {err}");
        }
    }

    #[test]
    fn test_goal_may_bind_fresh_variables() {
        rule("<x u=$U/> ? testurl($U,$A1,$A2) -> <li><$A1> <$A2></li>;");
    }

    #[test]
    fn multiple_sources_share_index_space() {
        let set = parse_rule_sources([
            ("a.rules", "<a/> => x := \"1\";"),
            ("b.rules", "<b/> => y := \"1\";\n<c/> => z := \"1\";"),
        ])
        .unwrap();
        let idx: Vec<_> = set
            .rules
            .iter()
            .map(|r| (r.index, r.pos.to_string()))
            .collect();
        assert_eq!(
            idx,
            [
                (1, "a.rules:1".to_string()),
                (2, "b.rules:1".into()),
                (3, "b.rules:2".into())
            ]
        );
        let single = parse_rules("<a/> => x := \"1\";", "a.rules").unwrap();
        assert_ne!(single.source_hash, set.source_hash);
    }

    #[test]
    fn test_form_round_trips() {
        let src = "test(\"3\",personne1($P,$N),bindings(b(\"N\",\"B\")))/<li> Warning: <i><$P> <$N></i> x. </li>";
        let (head, pol, cons) = parse_test_form(src, "c").unwrap();
        assert_eq!(pol, Polarity::IfAbsent);
        let again = format!("{head}{}{cons}", pol.operator());
        assert_eq!(again, src);
    }

    #[test]
    fn term_display_is_canonical() {
        let t = parse_term("f( \"a\\\"b\" , $X, g() )", "t").unwrap();
        assert_eq!(t.to_string(), "f(\"a\\\"b\",$X,g())");
        assert_eq!(parse_term(&t.to_string(), "t").unwrap(), t);
    }
}
