//! Recursive descent parser.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! program    -> var-decl* EOI
//! var-decl   -> 'var' identifier shape? '=' expression ';'
//! shape      -> '<' number ',' number '>'
//! expression -> mul-expr (('+' | '-') mul-expr)*
//! mul-expr   -> fft-expr (('*' | '/') fft-expr)*
//! fft-expr   -> primary (('⊗' | '·') fft-expr)?
//! primary    -> number | tensor-literal | builtin '(' args ')'
//!             | identifier | '(' expression ')'
//! ```
//!
//! `+ - * /` bind left-associatively at their conventional levels; the
//! matrix operators `⊗` and `·` share the tightest binary level and bind
//! right-associatively, so `a · b · c` parses as `a · (b · c)`.

use super::ast::{BinOp, Expr, VarDecl};
use super::token::{Token, TokenKind};
use super::FrontendError;

pub struct Parser<'t> {
    tokens: &'t [Token],
    position: usize,
}

impl<'t> Parser<'t> {
    pub fn new(tokens: &'t [Token]) -> Self {
        assert!(
            matches!(tokens.last(), Some(t) if t.kind == TokenKind::Eoi),
            "token stream must end with Eoi"
        );
        Parser {
            tokens,
            position: 0,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.position.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> &Token {
        let tok = &self.tokens[self.position.min(self.tokens.len() - 1)];
        if self.position < self.tokens.len() - 1 {
            self.position += 1;
        }
        tok
    }

    fn error(&self, expected: &str) -> FrontendError {
        let found = self.peek();
        FrontendError::Syntax {
            expected: expected.to_string(),
            found: if found.kind == TokenKind::Eoi {
                "end of input".to_string()
            } else {
                format!("`{}`", found.lexeme)
            },
            pos: found.pos,
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, FrontendError> {
        if self.peek().kind == kind {
            Ok(self.advance().clone())
        } else {
            Err(self.error(what))
        }
    }

    fn at(&self, kind: TokenKind) -> bool {
        self.peek().kind == kind
    }

    pub fn parse_program(&mut self) -> Result<Vec<VarDecl>, FrontendError> {
        let mut decls = Vec::new();
        while !self.at(TokenKind::Eoi) {
            decls.push(self.parse_var_decl()?);
        }
        Ok(decls)
    }

    fn parse_var_decl(&mut self) -> Result<VarDecl, FrontendError> {
        let kw = self.expect(TokenKind::KwVar, "`var`")?;
        let name_tok = self.expect(TokenKind::Identifier, "variable name")?;
        let shape = if self.at(TokenKind::Lt) {
            Some(self.parse_shape()?)
        } else {
            None
        };
        self.expect(TokenKind::Equals, "`=`")?;
        let init = self.parse_expression()?;
        self.expect(TokenKind::Semicolon, "`;`")?;

        if let (Some((r, c)), Expr::Literal { rows, pos }) = (shape, &init) {
            let (lr, lc) = (rows.len(), rows.first().map(|row| row.len()).unwrap_or(0));
            if (r, c) != (lr, lc) {
                return Err(FrontendError::DeclaredShapeMismatch {
                    name: name_tok.lexeme.clone(),
                    declared: (r, c),
                    found: (lr, lc),
                    pos: *pos,
                });
            }
        }

        Ok(VarDecl {
            name: name_tok.lexeme,
            shape,
            init,
            pos: kw.pos,
        })
    }

    fn parse_shape(&mut self) -> Result<(usize, usize), FrontendError> {
        self.expect(TokenKind::Lt, "`<`")?;
        let rows = self.parse_dimension()?;
        self.expect(TokenKind::Comma, "`,`")?;
        let cols = self.parse_dimension()?;
        self.expect(TokenKind::Gt, "`>`")?;
        Ok((rows, cols))
    }

    fn parse_dimension(&mut self) -> Result<usize, FrontendError> {
        let tok = self.expect(TokenKind::Number, "dimension")?;
        match tok.lexeme.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(FrontendError::Syntax {
                expected: "positive integer dimension".to_string(),
                found: format!("`{}`", tok.lexeme),
                pos: tok.pos,
            }),
        }
    }

    pub fn parse_expression(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.parse_mul_expr()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            let pos = self.advance().pos;
            let rhs = self.parse_mul_expr()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                pos,
            };
        }
        Ok(lhs)
    }

    fn parse_mul_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.parse_fft_expr()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            let pos = self.advance().pos;
            let rhs = self.parse_fft_expr()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                pos,
            };
        }
        Ok(lhs)
    }

    // Right recursion gives `a · b · c` = `a · (b · c)`.
    fn parse_fft_expr(&mut self) -> Result<Expr, FrontendError> {
        let lhs = self.parse_primary()?;
        let op = match self.peek().kind {
            TokenKind::Kron => BinOp::Kron,
            TokenKind::Dot => BinOp::MatMul,
            _ => return Ok(lhs),
        };
        let pos = self.advance().pos;
        let rhs = self.parse_fft_expr()?;
        Ok(Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            pos,
        })
    }

    fn parse_primary(&mut self) -> Result<Expr, FrontendError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Number => {
                self.advance();
                let value = tok.lexeme.parse::<f64>().map_err(|_| FrontendError::Syntax {
                    expected: "number".to_string(),
                    found: format!("`{}`", tok.lexeme),
                    pos: tok.pos,
                })?;
                Ok(Expr::Number {
                    value,
                    pos: tok.pos,
                })
            }
            TokenKind::LBracket => self.parse_literal(),
            TokenKind::Identifier => {
                self.advance();
                Ok(Expr::VariableRef {
                    name: tok.lexeme,
                    pos: tok.pos,
                })
            }
            TokenKind::Builtin(builtin) => {
                self.advance();
                self.expect(TokenKind::LParen, "`(`")?;
                let mut args = Vec::new();
                if !self.at(TokenKind::RParen) {
                    args.push(self.parse_expression()?);
                    while self.at(TokenKind::Comma) {
                        self.advance();
                        args.push(self.parse_expression()?);
                    }
                }
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(Expr::Call {
                    builtin,
                    args,
                    pos: tok.pos,
                })
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_expression()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("expression")),
        }
    }

    /// `[[1, 2], [3, 4]]` or a flat row `[1, 2]`; rows must be rectangular.
    fn parse_literal(&mut self) -> Result<Expr, FrontendError> {
        let open = self.expect(TokenKind::LBracket, "`[`")?;
        let mut rows: Vec<Vec<f64>> = Vec::new();

        if self.at(TokenKind::LBracket) {
            rows.push(self.parse_literal_row()?);
            while self.at(TokenKind::Comma) {
                self.advance();
                rows.push(self.parse_literal_row()?);
            }
        } else {
            // Flat list: a single row.
            let mut row = Vec::new();
            row.push(self.parse_literal_number()?);
            while self.at(TokenKind::Comma) {
                self.advance();
                row.push(self.parse_literal_number()?);
            }
            rows.push(row);
        }
        self.expect(TokenKind::RBracket, "`]`")?;

        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) || width == 0 {
            return Err(FrontendError::RaggedLiteral { pos: open.pos });
        }
        Ok(Expr::Literal {
            rows,
            pos: open.pos,
        })
    }

    fn parse_literal_row(&mut self) -> Result<Vec<f64>, FrontendError> {
        self.expect(TokenKind::LBracket, "`[`")?;
        let mut row = Vec::new();
        if !self.at(TokenKind::RBracket) {
            row.push(self.parse_literal_number()?);
            while self.at(TokenKind::Comma) {
                self.advance();
                row.push(self.parse_literal_number()?);
            }
        }
        self.expect(TokenKind::RBracket, "`]`")?;
        Ok(row)
    }

    fn parse_literal_number(&mut self) -> Result<f64, FrontendError> {
        let negative = if self.at(TokenKind::Minus) {
            self.advance();
            true
        } else {
            false
        };
        let tok = self.expect(TokenKind::Number, "number")?;
        let value = tok.lexeme.parse::<f64>().map_err(|_| FrontendError::Syntax {
            expected: "number".to_string(),
            found: format!("`{}`", tok.lexeme),
            pos: tok.pos,
        })?;
        Ok(if negative { -value } else { value })
    }
}

/// Parses a token stream into a list of variable declarations.
pub fn parse_program(tokens: &[Token]) -> Result<Vec<VarDecl>, FrontendError> {
    Parser::new(tokens).parse_program()
}

/// Convenience entry: tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<Vec<VarDecl>, FrontendError> {
    let tokens = super::lexer::tokenize(source)?;
    parse_program(&tokens)
}

/// Parses a single expression (used by tests and property checks).
pub fn parse_expr_source(source: &str) -> Result<Expr, FrontendError> {
    let tokens = super::lexer::tokenize(source)?;
    let mut parser = Parser::new(&tokens);
    let expr = parser.parse_expression()?;
    parser.expect(TokenKind::Eoi, "end of input")?;
    Ok(expr)
}
