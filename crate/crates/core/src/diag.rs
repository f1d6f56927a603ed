//! Diagnostics shared by the model front end and the OCL checker.

use std::fmt;

use crate::span::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagCode {
    SyntaxError,
    ResolutionError,
    DuplicateError,
    ContractArityError,
    TypeError,
    ScopeError,
    UnclassifiableDefinition,
    UnclassifiablePrecondition,
    UnclassifiablePostcondition,
    EquationFormError,
    DataflowError,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::SyntaxError => "SyntaxError",
            DiagCode::ResolutionError => "ResolutionError",
            DiagCode::DuplicateError => "DuplicateError",
            DiagCode::ContractArityError => "ContractArityError",
            DiagCode::TypeError => "TypeError",
            DiagCode::ScopeError => "ScopeError",
            DiagCode::UnclassifiableDefinition => "UnclassifiableDefinition",
            DiagCode::UnclassifiablePrecondition => "UnclassifiablePrecondition",
            DiagCode::UnclassifiablePostcondition => "UnclassifiablePostcondition",
            DiagCode::EquationFormError => "EquationFormError",
            DiagCode::DataflowError => "DataflowError",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: DiagCode, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            span,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Renders as `path:line:col: CODE severity: message`.
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} {}: {}",
            self.span, self.code, self.severity, self.message
        )
    }
}

/// Stable ordering: by file, then line, then column, then code.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (&a.span.file, a.span.line, a.span.col, a.code).cmp(&(
            &b.span.file,
            b.span.line,
            b.span.col,
            b.code,
        ))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
