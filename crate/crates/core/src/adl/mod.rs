//! The API definition language: syntax tree, parser, printer and
//! well-formedness checks.

mod ast;
mod lexer;
mod parser;
mod printer;
mod validate;

pub use ast::*;
pub use parser::parse_syntax;
pub use printer::print_definition;
pub use validate::{validate_wellformedness, Diagnostic, DiagnosticKind, Severity};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdlError {
    #[error("{line}:{column}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax { line: usize, column: usize, expected: Vec<String>, found: String },
    #[error("{line}:{column}: invalid bound {value}, bounds must be at least 1")]
    InvalidBound { line: usize, column: usize, value: String },
    #[error("{path}: duplicate name")]
    DuplicateName { path: String },
    #[error("{path}: unknown type reference: {message}")]
    UnknownTypeReference { path: String, message: String },
    #[error("{path}: cyclic inheritance")]
    CyclicInheritance { path: String },
    #[error("{0}")]
    Invalid(Diagnostic),
}

impl From<Diagnostic> for AdlError {
    fn from(d: Diagnostic) -> Self {
        match d.kind {
            DiagnosticKind::DuplicateName => AdlError::DuplicateName { path: d.path },
            DiagnosticKind::UnknownTypeReference => {
                AdlError::UnknownTypeReference { path: d.path, message: d.message }
            }
            DiagnosticKind::CyclicInheritance => AdlError::CyclicInheritance { path: d.path },
            _ => AdlError::Invalid(d),
        }
    }
}

/// Parses and validates one definition. Fails with the first error-level
/// diagnostic; warnings are ignored.
pub fn parse_definition(text: &str) -> Result<ApiDefinition, AdlError> {
    let def = parse_syntax(text)?;
    if let Some(d) = validate_wellformedness(&def)
        .into_iter()
        .find(|d| d.severity == Severity::Error)
    {
        return Err(d.into());
    }
    Ok(def)
}
