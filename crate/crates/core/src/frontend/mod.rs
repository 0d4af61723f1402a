//! Tokenizer, parser, and printer for the SIMD C++ dialect.

pub mod ast;
mod lexer;
mod parser;
mod print;

use thiserror::Error;

pub use ast::Loc;
pub use lexer::{is_keyword, tokenize, Token, TokenKind, KEYWORDS};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("{message}")]
    Lex { loc: Loc, message: String },
    #[error("expected {}, found {found}", expected.join(" or "))]
    Parse {
        loc: Loc,
        expected: Vec<String>,
        found: String,
    },
}

impl FrontendError {
    pub fn loc(&self) -> Loc {
        match self {
            FrontendError::Lex { loc, .. } | FrontendError::Parse { loc, .. } => *loc,
        }
    }
}

/// Tokenizes and parses in one step.
pub fn parse_source(source: &str) -> Result<ast::Program, FrontendError> {
    parse(&tokenize(source)?)
}
