// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error(transparent)]
    Semantic(#[from] SemanticError),
}

impl ParseError {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticError {
    #[error("signal '{signal}' has multiple drivers (line {line})")]
    MultipleDrivers { signal: String, line: usize },
    #[error("undeclared signal '{name}' (line {line})")]
    UndeclaredSignal { name: String, line: usize },
    #[error("width mismatch at line {line}: {message}")]
    WidthMismatch { line: usize, message: String },
    #[error("duplicate declaration of '{name}' (line {line})")]
    Duplicate { name: String, line: usize },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}
