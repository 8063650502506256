//! Frontend: lexing, parsing and AST dumping for the DSL.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod token;

pub use ast::{dump_ast, BinOp, Expr, VarDecl};
pub use lexer::tokenize;
pub use parser::{parse_expr_source, parse_program, parse_source};
pub use token::{Builtin, Pos, Token, TokenKind};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontendError {
    #[error("{pos}: unknown character `{ch}`")]
    UnknownCharacter { ch: char, pos: Pos },
    #[error("{pos}: expected {expected}, found {found}")]
    Syntax {
        expected: String,
        found: String,
        pos: Pos,
    },
    #[error("{pos}: `{name}` declares shape {}x{} but its literal is {}x{}",
            declared.0, declared.1, found.0, found.1)]
    DeclaredShapeMismatch {
        name: String,
        declared: (usize, usize),
        found: (usize, usize),
        pos: Pos,
    },
    #[error("{pos}: tensor literal is not rectangular")]
    RaggedLiteral { pos: Pos },
}
