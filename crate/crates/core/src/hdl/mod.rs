// SPDX-License-Identifier: Apache-2.0
//! HDL subset frontend: lexing, parsing and elaboration into [`Design`].

pub mod ast;
mod elab;
pub mod error;
pub mod eval;
pub mod ir;
pub mod lexer;
pub mod parser;

pub use error::{ParseError, SemanticError};
pub use ir::*;

/// Source text together with where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceText {
    pub text: String,
    pub origin: String,
}

impl SourceText {
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Self {
        SourceText {
            text: text.into(),
            origin: origin.into(),
        }
    }

    pub fn from_file(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(SourceText {
            text: std::fs::read_to_string(path)?,
            origin: path.display().to_string(),
        })
    }
}

/// Parses and elaborates a design. The last module that no other module
/// instantiates becomes the top.
pub fn parse_design(src: &SourceText) -> Result<Design, ParseError> {
    let toks = lexer::tokenize(&src.text)?;
    let modules = parser::Parser::new(toks).parse_source()?;
    elab::elaborate(&modules)
}

/// Declaration-ordered `(id, name, width, kind)` listing.
pub fn list_signals(d: &Design) -> Vec<(SignalId, &str, u32, SignalKind)> {
    d.list_signals()
}
