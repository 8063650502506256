//! Token alphabet of the DSL.

use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Matrix generator builtins of the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Dft,
    Identity,
    Twiddle,
    Permute,
    CreateComplex,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Dft => "DFT",
            Builtin::Identity => "I",
            Builtin::Twiddle => "twiddle",
            Builtin::Permute => "Permute",
            Builtin::CreateComplex => "createComplex",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "DFT" => Some(Builtin::Dft),
            "I" => Some(Builtin::Identity),
            "twiddle" => Some(Builtin::Twiddle),
            "Permute" => Some(Builtin::Permute),
            "createComplex" => Some(Builtin::CreateComplex),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Number,
    KwVar,
    Builtin(Builtin),
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Semicolon,
    Equals,
    // operators; `kron` and `.` are ASCII aliases for the first two
    Kron,
    Dot,
    Plus,
    Minus,
    Star,
    Slash,
    /// End of input; the only token with an empty lexeme.
    Eoi,
}

impl TokenKind {
    pub fn describe(self) -> &'static str {
        match self {
            TokenKind::Identifier => "identifier",
            TokenKind::Number => "number",
            TokenKind::KwVar => "`var`",
            TokenKind::Builtin(b) => b.name(),
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBracket => "`[`",
            TokenKind::RBracket => "`]`",
            TokenKind::Lt => "`<`",
            TokenKind::Gt => "`>`",
            TokenKind::Comma => "`,`",
            TokenKind::Semicolon => "`;`",
            TokenKind::Equals => "`=`",
            TokenKind::Kron => "`⊗`",
            TokenKind::Dot => "`·`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Slash => "`/`",
            TokenKind::Eoi => "end of input",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub pos: Pos,
}
