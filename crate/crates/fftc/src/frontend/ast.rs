//! Abstract syntax tree of the DSL, plus the textual dump.
//!
//! The dump interleaves two renderings per declaration: an indented node
//! tree on `#` comment lines for inspection, followed by a canonical,
//! fully parenthesized re-rendering of the declaration itself. Because the
//! tree lines are comments, the dump of a program is itself a valid
//! program that reparses to the same structure.

use std::fmt::Write as _;

use super::token::{Builtin, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Kron,
    MatMul,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Kron => "⊗",
            BinOp::MatMul => "·",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    Number {
        value: f64,
        pos: Pos,
    },
    /// Rectangular rank-2 literal; `[[1], [2]]` is 2x1, `[1, 2]` is 1x2.
    Literal {
        rows: Vec<Vec<f64>>,
        pos: Pos,
    },
    VariableRef {
        name: String,
        pos: Pos,
    },
    Call {
        builtin: Builtin,
        args: Vec<Expr>,
        pos: Pos,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        pos: Pos,
    },
}

/// Structural equality ignores source positions.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Expr::Number { value: a, .. }, Expr::Number { value: b, .. }) => a == b,
            (Expr::Literal { rows: a, .. }, Expr::Literal { rows: b, .. }) => a == b,
            (Expr::VariableRef { name: a, .. }, Expr::VariableRef { name: b, .. }) => a == b,
            (
                Expr::Call {
                    builtin: ba,
                    args: aa,
                    ..
                },
                Expr::Call {
                    builtin: bb,
                    args: ab,
                    ..
                },
            ) => ba == bb && aa == ab,
            (
                Expr::Binary {
                    op: oa,
                    lhs: la,
                    rhs: ra,
                    ..
                },
                Expr::Binary {
                    op: ob,
                    lhs: lb,
                    rhs: rb,
                    ..
                },
            ) => oa == ob && la == lb && ra == rb,
            _ => false,
        }
    }
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Number { pos, .. }
            | Expr::Literal { pos, .. }
            | Expr::VariableRef { pos, .. }
            | Expr::Call { pos, .. }
            | Expr::Binary { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub name: String,
    pub shape: Option<(usize, usize)>,
    pub init: Expr,
    pub pos: Pos,
}

impl PartialEq for VarDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.shape == other.shape && self.init == other.init
    }
}

/// Formats a literal number: integral values print without a decimal part.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn format_literal_rows(rows: &[Vec<f64>]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", body.join(", "))
}

/// Canonical source form of an expression. Binary operands that are
/// themselves binary are parenthesized, so nesting survives a reparse.
pub fn render_expr(expr: &Expr) -> String {
    match expr {
        Expr::Number { value, .. } => format_number(*value),
        Expr::Literal { rows, .. } => format_literal_rows(rows),
        Expr::VariableRef { name, .. } => name.clone(),
        Expr::Call { builtin, args, .. } => {
            let rendered: Vec<String> = args.iter().map(render_expr).collect();
            format!("{}({})", builtin.name(), rendered.join(", "))
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            let wrap = |e: &Expr| {
                let s = render_expr(e);
                if matches!(e, Expr::Binary { .. }) {
                    format!("({s})")
                } else {
                    s
                }
            };
            format!("{} {} {}", wrap(lhs), op.symbol(), wrap(rhs))
        }
    }
}

fn leaf_label(expr: &Expr) -> Option<String> {
    match expr {
        Expr::Number { value, .. } => Some(format!("Number {}", format_number(*value))),
        Expr::Literal { rows, .. } => Some(format!(
            "Literal<{}x{}>{}",
            rows.len(),
            rows.first().map(|r| r.len()).unwrap_or(0),
            format_literal_rows(rows)
        )),
        Expr::VariableRef { name, .. } => Some(format!("VariableRef {name}")),
        _ => None,
    }
}

fn dump_expr_tree(out: &mut String, expr: &Expr, depth: usize) {
    let indent = "  ".repeat(depth);
    if let Some(label) = leaf_label(expr) {
        let _ = writeln!(out, "#{indent} {label}");
        return;
    }
    match expr {
        Expr::Call { builtin, args, .. } => {
            let _ = writeln!(out, "#{indent} Call {}", builtin.name());
            for arg in args {
                dump_expr_tree(out, arg, depth + 1);
            }
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            let _ = writeln!(out, "#{indent} BinaryOp {}", op.symbol());
            dump_expr_tree(out, lhs, depth + 1);
            dump_expr_tree(out, rhs, depth + 1);
        }
        _ => unreachable!("leaves handled above"),
    }
}

/// Deterministic textual rendering of a parsed program.
pub fn dump_ast(decls: &[VarDecl]) -> String {
    let mut out = String::new();
    for decl in decls {
        let shape_note = match decl.shape {
            Some((r, c)) => format!(" <{r}x{c}>"),
            None => String::new(),
        };
        if let Some(label) = leaf_label(&decl.init) {
            let _ = writeln!(out, "# VarDecl {}{} = {}", decl.name, shape_note, label);
        } else {
            let _ = writeln!(out, "# VarDecl {}{} =", decl.name, shape_note);
            dump_expr_tree(&mut out, &decl.init, 1);
        }
        let shape_src = match decl.shape {
            Some((r, c)) => format!(" <{r}, {c}>"),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "var {}{} = {};",
            decl.name,
            shape_src,
            render_expr(&decl.init)
        );
    }
    out
}
