//! Lexer for the DSL.
//!
//! Whitespace separates tokens and `#` starts a comment running to the end
//! of the line. The Kronecker and matrix-product operators are recognized
//! both as the Unicode characters `⊗` / `·` and as the ASCII aliases
//! `kron` / `.`, so programs can be typed without Unicode input.

use super::token::{Builtin, Pos, Token, TokenKind};
use super::FrontendError;

struct Lexer<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.char_indices().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let item = self.chars.next();
        if let Some((_, ch)) = item {
            if ch == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        item
    }

    fn peek_char(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, ch)| ch)
    }

    fn peek_offset(&mut self) -> usize {
        self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len())
    }
}

/// Splits source text into tokens, ending with an end-of-input token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut lx = Lexer::new(source);
    let mut tokens = Vec::new();

    loop {
        // Skip whitespace and comments.
        loop {
            match lx.peek_char() {
                Some(ch) if ch.is_whitespace() => {
                    lx.bump();
                }
                Some('#') => {
                    while let Some(ch) = lx.peek_char() {
                        if ch == '\n' {
                            break;
                        }
                        lx.bump();
                    }
                }
                _ => break,
            }
        }

        let pos = Pos {
            line: lx.line,
            col: lx.col,
        };
        let (start, ch) = match lx.bump() {
            Some(item) => item,
            None => break,
        };

        let kind = match ch {
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            '[' => TokenKind::LBracket,
            ']' => TokenKind::RBracket,
            '<' => TokenKind::Lt,
            '>' => TokenKind::Gt,
            ',' => TokenKind::Comma,
            ';' => TokenKind::Semicolon,
            '=' => TokenKind::Equals,
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '/' => TokenKind::Slash,
            '⊗' => TokenKind::Kron,
            '·' => TokenKind::Dot,
            '.' => TokenKind::Dot,
            '0'..='9' => {
                while matches!(lx.peek_char(), Some('0'..='9')) {
                    lx.bump();
                }
                // A fractional part needs a digit after the dot; a bare dot
                // is the matrix-product operator.
                if lx.peek_char() == Some('.') {
                    let mut lookahead = lx.chars.clone();
                    lookahead.next();
                    if matches!(lookahead.peek(), Some(&(_, '0'..='9'))) {
                        lx.bump();
                        while matches!(lx.peek_char(), Some('0'..='9')) {
                            lx.bump();
                        }
                    }
                }
                TokenKind::Number
            }
            ch if ch.is_ascii_alphabetic() || ch == '_' => {
                while matches!(lx.peek_char(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    lx.bump();
                }
                let word = &lx.src[start..lx.peek_offset()];
                match word {
                    "var" => TokenKind::KwVar,
                    "kron" => TokenKind::Kron,
                    _ => match Builtin::from_name(word) {
                        Some(b) => TokenKind::Builtin(b),
                        None => TokenKind::Identifier,
                    },
                }
            }
            other => {
                return Err(FrontendError::UnknownCharacter { ch: other, pos });
            }
        };

        let end = lx.peek_offset();
        tokens.push(Token {
            kind,
            lexeme: lx.src[start..end].to_string(),
            pos,
        });
    }

    tokens.push(Token {
        kind: TokenKind::Eoi,
        lexeme: String::new(),
        pos: Pos {
            line: lx.line,
            col: lx.col,
        },
    });
    Ok(tokens)
}
