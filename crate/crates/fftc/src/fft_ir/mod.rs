//! FFT-algebra IR: a typed, single-assignment representation of a parsed
//! program, one op per operator of the source language.
//!
//! Ops are topologically ordered and refer to operands by id. Generator
//! ops (`dft`, `identity`, `twiddle`, `Permute`) carry their integer
//! arguments; constants carry their tensor values. Shape inference
//! annotates each op and the verifier checks structural well-formedness.

pub mod fold;
pub mod shapes;

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::frontend::{BinOp, Builtin, Expr, Pos, VarDecl};
use crate::tensor::{ComplexTensor, ElementKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorShape {
    pub rows: usize,
    pub cols: usize,
    pub kind: ElementKind,
}

impl TensorShape {
    pub fn new(rows: usize, cols: usize, kind: ElementKind) -> Self {
        TensorShape { rows, cols, kind }
    }

    pub fn render(&self) -> String {
        format!("{}x{}x{}", self.rows, self.cols, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FftOpKind {
    /// Tensor literal. When bound directly to a source variable the
    /// constant doubles as a runtime-overridable input and keeps the
    /// literal as its default value.
    Constant {
        values: ComplexTensor,
        kind: ElementKind,
        input_name: Option<String>,
    },
    CreateComplex {
        real: OpId,
        imag: OpId,
    },
    MatMul {
        lhs: OpId,
        rhs: OpId,
    },
    Kronecker {
        lhs: OpId,
        rhs: OpId,
    },
    Dft {
        size: usize,
    },
    Identity {
        size: usize,
    },
    /// Diagonal twiddle matrix for the split size = k * block.
    Twiddle {
        size: usize,
        block: usize,
    },
    /// Stride permutation gathering at `stride`.
    Permute {
        size: usize,
        stride: usize,
    },
}

impl FftOpKind {
    pub fn operands(&self) -> Vec<OpId> {
        match *self {
            FftOpKind::Constant { .. }
            | FftOpKind::Dft { .. }
            | FftOpKind::Identity { .. }
            | FftOpKind::Twiddle { .. }
            | FftOpKind::Permute { .. } => vec![],
            FftOpKind::CreateComplex { real, imag } => vec![real, imag],
            FftOpKind::MatMul { lhs, rhs } | FftOpKind::Kronecker { lhs, rhs } => vec![lhs, rhs],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FftOpKind::Constant { .. } => "fft.constant",
            FftOpKind::CreateComplex { .. } => "fft.createCT",
            FftOpKind::MatMul { .. } => "fft.matmul",
            FftOpKind::Kronecker { .. } => "fft.kroneckerproduct",
            FftOpKind::Dft { .. } => "fft.dft",
            FftOpKind::Identity { .. } => "fft.identity",
            FftOpKind::Twiddle { .. } => "fft.twiddle",
            FftOpKind::Permute { .. } => "fft.Permute",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FftOp {
    pub kind: FftOpKind,
    pub shape: Option<TensorShape>,
    pub pos: Pos,
}

/// A whole program: ordered ops, source-variable bindings and the
/// designated output (the last top-level declaration).
#[derive(Debug, Clone, PartialEq)]
pub struct FftProgram {
    pub ops: Vec<FftOp>,
    pub bindings: Vec<(String, OpId)>,
    pub output: Option<OpId>,
}

impl FftProgram {
    pub fn op(&self, id: OpId) -> &FftOp {
        &self.ops[id.0]
    }

    pub fn shape_of(&self, id: OpId) -> Option<TensorShape> {
        self.ops[id.0].shape
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("{pos}: undefined variable `{name}`")]
    UndefinedVariable { name: String, pos: Pos },
    #[error("{pos}: argument of {builtin} must be an integer literal")]
    NonConstantGeneratorArg { builtin: &'static str, pos: Pos },
    #[error("{pos}: argument of {builtin} must be a positive integer, got {value}")]
    InvalidGeneratorArg {
        builtin: &'static str,
        value: f64,
        pos: Pos,
    },
    #[error("{pos}: {builtin} takes {expected} argument(s), got {found}")]
    WrongArity {
        builtin: &'static str,
        expected: usize,
        found: usize,
        pos: Pos,
    },
    #[error("{pos}: operator `{op}` has no FFT-dialect mapping")]
    UnsupportedOperator { op: &'static str, pos: Pos },
}

struct Builder {
    ops: Vec<FftOp>,
    bindings: Vec<(String, OpId)>,
    env: HashMap<String, OpId>,
}

impl Builder {
    fn push(&mut self, kind: FftOpKind, pos: Pos) -> OpId {
        let id = OpId(self.ops.len());
        self.ops.push(FftOp {
            kind,
            shape: None,
            pos,
        });
        id
    }

    fn generator_arg(&self, builtin: Builtin, arg: &Expr) -> Result<usize, BuildError> {
        match arg {
            Expr::Number { value, pos } => {
                if value.fract() == 0.0 && *value >= 1.0 && *value <= u32::MAX as f64 {
                    Ok(*value as usize)
                } else {
                    Err(BuildError::InvalidGeneratorArg {
                        builtin: builtin.name(),
                        value: *value,
                        pos: *pos,
                    })
                }
            }
            other => Err(BuildError::NonConstantGeneratorArg {
                builtin: builtin.name(),
                pos: other.pos(),
            }),
        }
    }

    fn build_expr(&mut self, expr: &Expr) -> Result<OpId, BuildError> {
        match expr {
            Expr::Number { value, pos } => {
                // Scalar literals become 1x1 real constants.
                Ok(self.push(
                    FftOpKind::Constant {
                        values: ComplexTensor::from_real_rows(&[vec![*value]]),
                        kind: ElementKind::Real,
                        input_name: None,
                    },
                    *pos,
                ))
            }
            Expr::Literal { rows, pos } => Ok(self.push(
                FftOpKind::Constant {
                    values: ComplexTensor::from_real_rows(rows),
                    kind: ElementKind::Real,
                    input_name: None,
                },
                *pos,
            )),
            Expr::VariableRef { name, pos } => {
                self.env
                    .get(name)
                    .copied()
                    .ok_or_else(|| BuildError::UndefinedVariable {
                        name: name.clone(),
                        pos: *pos,
                    })
            }
            Expr::Call { builtin, args, pos } => self.build_call(*builtin, args, *pos),
            Expr::Binary {
                op, lhs, rhs, pos, ..
            } => {
                let kind = match op {
                    BinOp::Kron | BinOp::MatMul => {
                        let l = self.build_expr(lhs)?;
                        let r = self.build_expr(rhs)?;
                        if *op == BinOp::Kron {
                            FftOpKind::Kronecker { lhs: l, rhs: r }
                        } else {
                            FftOpKind::MatMul { lhs: l, rhs: r }
                        }
                    }
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        return Err(BuildError::UnsupportedOperator {
                            op: op.symbol(),
                            pos: *pos,
                        });
                    }
                };
                Ok(self.push(kind, *pos))
            }
        }
    }

    fn build_call(
        &mut self,
        builtin: Builtin,
        args: &[Expr],
        pos: Pos,
    ) -> Result<OpId, BuildError> {
        let arity = match builtin {
            Builtin::Dft | Builtin::Identity => 1,
            Builtin::Twiddle | Builtin::Permute | Builtin::CreateComplex => 2,
        };
        if args.len() != arity {
            return Err(BuildError::WrongArity {
                builtin: builtin.name(),
                expected: arity,
                found: args.len(),
                pos,
            });
        }
        let kind = match builtin {
            Builtin::Dft => FftOpKind::Dft {
                size: self.generator_arg(builtin, &args[0])?,
            },
            Builtin::Identity => FftOpKind::Identity {
                size: self.generator_arg(builtin, &args[0])?,
            },
            Builtin::Twiddle => FftOpKind::Twiddle {
                size: self.generator_arg(builtin, &args[0])?,
                block: self.generator_arg(builtin, &args[1])?,
            },
            Builtin::Permute => FftOpKind::Permute {
                size: self.generator_arg(builtin, &args[0])?,
                stride: self.generator_arg(builtin, &args[1])?,
            },
            Builtin::CreateComplex => {
                let real = self.build_expr(&args[0])?;
                let imag = self.build_expr(&args[1])?;
                FftOpKind::CreateComplex { real, imag }
            }
        };
        Ok(self.push(kind, pos))
    }
}

/// Builds the IR from a parsed program. Emission is a deterministic
/// post-order walk of each declaration's initializer.
pub fn build_ir(decls: &[VarDecl]) -> Result<FftProgram, BuildError> {
    let mut b = Builder {
        ops: Vec::new(),
        bindings: Vec::new(),
        env: HashMap::new(),
    };
    let mut output = None;
    for decl in decls {
        let id = b.build_expr(&decl.init)?;
        // A declaration binding a bare literal names a runtime input.
        if matches!(decl.init, Expr::Literal { .. } | Expr::Number { .. }) {
            if let FftOpKind::Constant { input_name, .. } = &mut b.ops[id.0].kind {
                *input_name = Some(decl.name.clone());
            }
        }
        b.env.insert(decl.name.clone(), id);
        b.bindings.push((decl.name.clone(), id));
        output = Some(id);
    }
    Ok(FftProgram {
        ops: b.ops,
        bindings: b.bindings,
        output,
    })
}

/// An IR well-formedness finding; `verify` reports these instead of failing.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub op: Option<OpId>,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.op {
            Some(id) => write!(f, "%{}: {}", id.0, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Checks single-assignment ordering, generator argument constraints and
/// constant well-formedness. An empty result means the program is valid.
pub fn verify(program: &FftProgram) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (index, op) in program.ops.iter().enumerate() {
        for operand in op.kind.operands() {
            if operand.0 >= index {
                diags.push(Diagnostic {
                    op: Some(OpId(index)),
                    message: format!(
                        "operand %{} does not precede its use (single-assignment order)",
                        operand.0
                    ),
                });
            }
        }
        match &op.kind {
            FftOpKind::Twiddle { size, block } => {
                if *block == 0 || size % block != 0 {
                    diags.push(Diagnostic {
                        op: Some(OpId(index)),
                        message: format!("{block} does not divide {size}"),
                    });
                }
            }
            FftOpKind::Permute { size, stride } => {
                if *stride == 0 || size % stride != 0 {
                    diags.push(Diagnostic {
                        op: Some(OpId(index)),
                        message: format!("{stride} does not divide {size}"),
                    });
                }
            }
            FftOpKind::Dft { size } | FftOpKind::Identity { size } => {
                if *size == 0 {
                    diags.push(Diagnostic {
                        op: Some(OpId(index)),
                        message: "generator size must be >= 1".to_string(),
                    });
                }
            }
            FftOpKind::Constant { values, .. } => {
                if values.rows() == 0 || values.cols() == 0 {
                    diags.push(Diagnostic {
                        op: Some(OpId(index)),
                        message: "constant has empty dimensions".to_string(),
                    });
                }
            }
            _ => {}
        }
    }
    if let Some(out) = program.output {
        if out.0 >= program.ops.len() {
            diags.push(Diagnostic {
                op: None,
                message: format!("output %{} is not a defined op", out.0),
            });
        }
    }
    for (name, id) in &program.bindings {
        if id.0 >= program.ops.len() {
            diags.push(Diagnostic {
                op: None,
                message: format!("binding `{name}` refers to undefined op %{}", id.0),
            });
        }
    }
    diags
}

fn render_constant_values(values: &ComplexTensor, kind: ElementKind) -> String {
    let mut rows = Vec::with_capacity(values.rows());
    for r in 0..values.rows() {
        let cells: Vec<String> = (0..values.cols())
            .map(|c| {
                let z = values.get(r, c);
                match kind {
                    ElementKind::Real => crate::frontend::ast::format_number(z.re),
                    ElementKind::Complex => crate::tensor::format_complex(z),
                }
            })
            .collect();
        rows.push(format!("[{}]", cells.join(", ")));
    }
    format!("[{}]", rows.join(", "))
}

/// Deterministic one-op-per-line textual form of the IR.
pub fn dump_ir(program: &FftProgram) -> String {
    let mut out = String::new();
    for (index, op) in program.ops.iter().enumerate() {
        let _ = write!(out, "%{index} = ");
        match &op.kind {
            FftOpKind::Constant {
                values,
                kind,
                input_name,
            } => {
                match input_name {
                    Some(name) => {
                        let _ = write!(
                            out,
                            "fft.constant \"{name}\" dense<{}>",
                            render_constant_values(values, *kind)
                        );
                    }
                    None => {
                        let _ = write!(
                            out,
                            "fft.constant dense<{}>",
                            render_constant_values(values, *kind)
                        );
                    }
                }
            }
            FftOpKind::CreateComplex { real, imag } => {
                let _ = write!(out, "fft.createCT(%{}, %{})", real.0, imag.0);
            }
            FftOpKind::MatMul { lhs, rhs } => {
                let _ = write!(out, "fft.matmul %{}, %{}", lhs.0, rhs.0);
            }
            FftOpKind::Kronecker { lhs, rhs } => {
                let _ = write!(out, "fft.kroneckerproduct %{}, %{}", lhs.0, rhs.0);
            }
            FftOpKind::Dft { size } => {
                let _ = write!(out, "fft.dft({size})");
            }
            FftOpKind::Identity { size } => {
                let _ = write!(out, "fft.identity({size})");
            }
            FftOpKind::Twiddle { size, block } => {
                let _ = write!(out, "fft.twiddle({size}, {block})");
            }
            FftOpKind::Permute { size, stride } => {
                let _ = write!(out, "fft.Permute({size}, {stride})");
            }
        }
        if let Some(shape) = op.shape {
            let _ = write!(out, " : {}", shape.render());
        }
        let _ = writeln!(out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn build(src: &str) -> FftProgram {
        build_ir(&parse_source(src).unwrap()).unwrap()
    }

    #[test]
    fn single_generator() {
        let p = build("var y = I(3);");
        assert_eq!(p.ops.len(), 1);
        assert_eq!(p.ops[0].kind, FftOpKind::Identity { size: 3 });
        assert_eq!(p.output, Some(OpId(0)));
    }

    #[test]
    fn undefined_variable_is_reported() {
        let decls = parse_source("var z = A · B;").unwrap();
        match build_ir(&decls) {
            Err(BuildError::UndefinedVariable { name, .. }) => assert_eq!(name, "A"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_constant_generator_arg_rejected() {
        let decls = parse_source("var n = 2; var y = DFT(n);").unwrap();
        assert!(matches!(
            build_ir(&decls),
            Err(BuildError::NonConstantGeneratorArg { .. })
        ));
    }

    #[test]
    fn fractional_generator_arg_rejected() {
        let decls = parse_source("var y = DFT(2.5);").unwrap();
        assert!(matches!(
            build_ir(&decls),
            Err(BuildError::InvalidGeneratorArg { .. })
        ));
    }

    #[test]
    fn arithmetic_operators_have_no_mapping() {
        let decls = parse_source("var y = I(2) + I(2);").unwrap();
        assert!(matches!(
            build_ir(&decls),
            Err(BuildError::UnsupportedOperator { op: "+", .. })
        ));
    }

    #[test]
    fn fft4_program_op_inventory() {
        let p = build(
            "var InputReal <4, 1> = [[1], [2], [3], [4]];\n\
             var InputImg <4, 1> = [[1], [2], [3], [4]];\n\
             var InputComplex = createComplex(InputReal, InputImg);\n\
             var result = (DFT(2) ⊗ I(2)) · twiddle(4,2) · (I(2) ⊗ DFT(2)) · Permute(4,2) · InputComplex;",
        );
        let mut counts: HashMap<&'static str, usize> = HashMap::new();
        for op in &p.ops {
            *counts.entry(op.kind.name()).or_default() += 1;
        }
        assert_eq!(counts["fft.constant"], 2);
        assert_eq!(counts["fft.createCT"], 1);
        assert_eq!(counts["fft.dft"], 2);
        assert_eq!(counts["fft.identity"], 2);
        assert_eq!(counts["fft.kroneckerproduct"], 2);
        assert_eq!(counts["fft.twiddle"], 1);
        assert_eq!(counts["fft.Permute"], 1);
        assert_eq!(counts["fft.matmul"], 4);
        assert_eq!(p.ops.len(), 15);
        assert!(verify(&p).is_empty());

        // Inputs are the two literal-bound declarations.
        let inputs: Vec<_> = p
            .ops
            .iter()
            .filter_map(|op| match &op.kind {
                FftOpKind::Constant {
                    input_name: Some(n),
                    ..
                } => Some(n.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(inputs, ["InputReal", "InputImg"]);
    }

    #[test]
    fn build_is_deterministic() {
        let src = "var a = DFT(2) ⊗ I(4); var b = a · a;";
        let p1 = build(src);
        let p2 = build(src);
        assert_eq!(p1, p2);
    }

    #[test]
    fn verify_reports_bad_divisibility() {
        let p = build("var t = twiddle(4, 3);");
        let diags = verify(&p);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("3 does not divide 4"));
    }

    #[test]
    fn verify_reports_forward_reference() {
        let mut p = build("var y = I(2); var z = y · y;");
        // Corrupt the program: make the matmul reference a later id.
        if let FftOpKind::MatMul { rhs, .. } = &mut p.ops[1].kind {
            *rhs = OpId(5);
        }
        p.ops.push(FftOp {
            kind: FftOpKind::Identity { size: 2 },
            shape: None,
            pos: Pos::default(),
        });
        p.ops.push(FftOp {
            kind: FftOpKind::Identity { size: 2 },
            shape: None,
            pos: Pos::default(),
        });
        p.ops.push(FftOp {
            kind: FftOpKind::Identity { size: 2 },
            shape: None,
            pos: Pos::default(),
        });
        p.ops.push(FftOp {
            kind: FftOpKind::Identity { size: 2 },
            shape: None,
            pos: Pos::default(),
        });
        assert!(!verify(&p).is_empty());
    }

    #[test]
    fn dump_identity_format() {
        let mut p = build("var y = I(2);");
        shapes::infer_shapes(&mut p).unwrap();
        assert_eq!(dump_ir(&p), "%0 = fft.identity(2) : 2x2xcomplex\n");
    }

    #[test]
    fn dump_empty_program() {
        let p = build("");
        assert_eq!(dump_ir(&p), "");
    }
}
