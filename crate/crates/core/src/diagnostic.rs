use std::fmt;
use std::str::FromStr;

use crate::xml::SourcePos;

/// Problems with the rule set or the inputs themselves, as opposed to
/// warnings about document content (see [`crate::report::Message`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticCode {
    AssignmentConflict,
    NonGroundAssertion,
    UnknownPredicate,
    InstantiationError,
    UnboundInConsequence,
    TypeMismatch,
    MalformedXml,
    RuleSyntax,
    Io,
}

impl DiagnosticCode {
    pub const ALL: [DiagnosticCode; 9] = [
        DiagnosticCode::AssignmentConflict,
        DiagnosticCode::NonGroundAssertion,
        DiagnosticCode::UnknownPredicate,
        DiagnosticCode::InstantiationError,
        DiagnosticCode::UnboundInConsequence,
        DiagnosticCode::TypeMismatch,
        DiagnosticCode::MalformedXml,
        DiagnosticCode::RuleSyntax,
        DiagnosticCode::Io,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::AssignmentConflict => "assignment-conflict",
            DiagnosticCode::NonGroundAssertion => "non-ground-assertion",
            DiagnosticCode::UnknownPredicate => "unknown-predicate",
            DiagnosticCode::InstantiationError => "instantiation-error",
            DiagnosticCode::UnboundInConsequence => "unbound-in-consequence",
            DiagnosticCode::TypeMismatch => "type-mismatch",
            DiagnosticCode::MalformedXml => "malformed-xml",
            DiagnosticCode::RuleSyntax => "rule-syntax",
            DiagnosticCode::Io => "io",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiagnosticCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown diagnostic code {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub pos: Option<SourcePos>,
    pub rule: Option<usize>,
    pub code: DiagnosticCode,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Self {
            pos: None,
            rule: None,
            code,
            message: message.into(),
        }
    }

    pub fn at(mut self, pos: SourcePos) -> Self {
        self.pos = Some(pos);
        self
    }

    pub fn rule(mut self, index: usize) -> Self {
        self.rule = Some(index);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(pos) = &self.pos {
            write!(f, "{pos}: ")?;
        }
        write!(f, "error[{}]: {}", self.code, self.message)?;
        if let Some(rule) = self.rule {
            write!(f, " (rule #{rule})")?;
        }
        Ok(())
    }
}
