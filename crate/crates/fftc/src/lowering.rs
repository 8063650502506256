//! Lowering from the FFT-algebra IR to the loop-nest IR.
//!
//! Constant subgraphs are materialized first: generator matrices and any
//! op whose operands are all compile-time constants are computed through
//! the dense algebra and become read-only buffers. What remains is the
//! input-dependent spine of the program, which lowers to loop nests:
//!
//! * matrix product: triple nest with an explicit zero-init store and a
//!   load-multiply-add-store body,
//! * Kronecker product: four-deep nest writing `a[i,j] * b[u,v]` to
//!   `out[i*r + u, j*s + v]`,
//! * complex pairing: two-deep elementwise nest computing `re + i * im`,
//! * anonymous literal constants: straight-line initialization stores.
//!
//! Temp buffers are allocated at first definition and deallocated after
//! their last use, found by a linear scan over the top-level statements.

use num_complex::Complex64;
use thiserror::Error;

use crate::fft_ir::fold::{fold_constants, EvalError};
use crate::fft_ir::{FftOpKind, FftProgram, OpId};
use crate::generators;
use crate::loop_ir::{
    AffineExpr, BufId, Buffer, BufferInit, Loop, LoopIr, LoopVarId, RegId, Stmt, ValueExpr,
};
use crate::tensor::{ComplexTensor, ElementKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowerError {
    #[error("program has no output")]
    EmptyProgram,
    #[error("%{}: op carries no shape annotation; run shape inference first", .0.0)]
    MissingShape(OpId),
    #[error("constant folding failed: {0}")]
    Fold(#[from] EvalError),
    #[error("%{}: {source}", op.0)]
    Generator {
        op: OpId,
        source: generators::AlgebraError,
    },
}

struct Lowerer {
    buffers: Vec<Buffer>,
    body: Vec<Stmt>,
    next_reg: u32,
    next_var: u32,
    /// Result buffer of each lowered op.
    op_buf: Vec<BufId>,
}

impl Lowerer {
    fn reg(&mut self) -> RegId {
        let r = RegId(self.next_reg);
        self.next_reg += 1;
        r
    }

    fn var(&mut self) -> LoopVarId {
        let v = LoopVarId(self.next_var);
        self.next_var += 1;
        v
    }

    fn add_buffer(&mut self, prefix: &str, rows: usize, cols: usize, init: BufferInit) -> BufId {
        let id = BufId(self.buffers.len() as u32);
        self.buffers.push(Buffer {
            name: format!("%{prefix}{}", id.0),
            rows,
            cols,
            init,
        });
        id
    }

    fn temp(&mut self, rows: usize, cols: usize) -> BufId {
        let id = self.add_buffer("buf", rows, cols, BufferInit::Temp);
        self.body.push(Stmt::Alloc(id));
        id
    }

    fn constant(&mut self, values: &ComplexTensor) -> BufId {
        self.add_buffer(
            "cst",
            values.rows(),
            values.cols(),
            BufferInit::Const(values.data().to_vec()),
        )
    }

    /// Straight-line stores initializing an anonymous literal.
    fn literal_stores(&mut self, values: &ComplexTensor) -> BufId {
        let out = self.temp(values.rows(), values.cols());
        let reg = self.reg();
        for r in 0..values.rows() {
            for c in 0..values.cols() {
                self.body.push(Stmt::Assign {
                    dst: reg,
                    value: ValueExpr::Const(values.get(r, c)),
                });
                self.body.push(Stmt::Store {
                    buf: out,
                    row: AffineExpr::constant(r as i64),
                    col: AffineExpr::constant(c as i64),
                    value: reg,
                });
            }
        }
        out
    }

    fn lower_create_complex(&mut self, re: BufId, im: BufId) -> BufId {
        let (rows, cols) = {
            let b = &self.buffers[re.0 as usize];
            (b.rows, b.cols)
        };
        let out = self.temp(rows, cols);
        let (i, j) = (self.var(), self.var());
        let (r_re, r_im, r_unit, r_scaled, r_sum) =
            (self.reg(), self.reg(), self.reg(), self.reg(), self.reg());
        let body = vec![
            Stmt::Assign {
                dst: r_re,
                value: ValueExpr::Load {
                    buf: re,
                    row: AffineExpr::var(i),
                    col: AffineExpr::var(j),
                },
            },
            Stmt::Assign {
                dst: r_im,
                value: ValueExpr::Load {
                    buf: im,
                    row: AffineExpr::var(i),
                    col: AffineExpr::var(j),
                },
            },
            Stmt::Assign {
                dst: r_unit,
                value: ValueExpr::Const(Complex64::new(0.0, 1.0)),
            },
            Stmt::Assign {
                dst: r_scaled,
                value: ValueExpr::Mul(r_unit, r_im),
            },
            Stmt::Assign {
                dst: r_sum,
                value: ValueExpr::Add(r_re, r_scaled),
            },
            Stmt::Store {
                buf: out,
                row: AffineExpr::var(i),
                col: AffineExpr::var(j),
                value: r_sum,
            },
        ];
        self.body.push(Stmt::For(Loop {
            var: i,
            lower: 0,
            upper: rows as i64,
            body: vec![Stmt::For(Loop {
                var: j,
                lower: 0,
                upper: cols as i64,
                body,
            })],
        }));
        out
    }

    fn lower_matmul(&mut self, lhs: BufId, rhs: BufId) -> BufId {
        let (p, q) = {
            let b = &self.buffers[lhs.0 as usize];
            (b.rows, b.cols)
        };
        let r = self.buffers[rhs.0 as usize].cols;
        let out = self.temp(p, r);
        let (i, j, k) = (self.var(), self.var(), self.var());
        let (r_zero, r_acc, r_a, r_b, r_mul, r_sum) = (
            self.reg(),
            self.reg(),
            self.reg(),
            self.reg(),
            self.reg(),
            self.reg(),
        );
        let inner = vec![
            Stmt::Assign {
                dst: r_acc,
                value: ValueExpr::Load {
                    buf: out,
                    row: AffineExpr::var(i),
                    col: AffineExpr::var(j),
                },
            },
            Stmt::Assign {
                dst: r_a,
                value: ValueExpr::Load {
                    buf: lhs,
                    row: AffineExpr::var(i),
                    col: AffineExpr::var(k),
                },
            },
            Stmt::Assign {
                dst: r_b,
                value: ValueExpr::Load {
                    buf: rhs,
                    row: AffineExpr::var(k),
                    col: AffineExpr::var(j),
                },
            },
            Stmt::Assign {
                dst: r_mul,
                value: ValueExpr::Mul(r_a, r_b),
            },
            Stmt::Assign {
                dst: r_sum,
                value: ValueExpr::Add(r_acc, r_mul),
            },
            Stmt::Store {
                buf: out,
                row: AffineExpr::var(i),
                col: AffineExpr::var(j),
                value: r_sum,
            },
        ];
        let j_body = vec![
            Stmt::Assign {
                dst: r_zero,
                value: ValueExpr::Const(Complex64::new(0.0, 0.0)),
            },
            Stmt::Store {
                buf: out,
                row: AffineExpr::var(i),
                col: AffineExpr::var(j),
                value: r_zero,
            },
            Stmt::For(Loop {
                var: k,
                lower: 0,
                upper: q as i64,
                body: inner,
            }),
        ];
        self.body.push(Stmt::For(Loop {
            var: i,
            lower: 0,
            upper: p as i64,
            body: vec![Stmt::For(Loop {
                var: j,
                lower: 0,
                upper: r as i64,
                body: j_body,
            })],
        }));
        out
    }

    fn lower_kronecker(&mut self, lhs: BufId, rhs: BufId) -> BufId {
        let (p, q) = {
            let b = &self.buffers[lhs.0 as usize];
            (b.rows, b.cols)
        };
        let (r, s) = {
            let b = &self.buffers[rhs.0 as usize];
            (b.rows, b.cols)
        };
        let out = self.temp(p * r, q * s);
        let (i, j, u, v) = (self.var(), self.var(), self.var(), self.var());
        let (r_a, r_b, r_mul) = (self.reg(), self.reg(), self.reg());
        let inner = vec![
            Stmt::Assign {
                dst: r_a,
                value: ValueExpr::Load {
                    buf: lhs,
                    row: AffineExpr::var(i),
                    col: AffineExpr::var(j),
                },
            },
            Stmt::Assign {
                dst: r_b,
                value: ValueExpr::Load {
                    buf: rhs,
                    row: AffineExpr::var(u),
                    col: AffineExpr::var(v),
                },
            },
            Stmt::Assign {
                dst: r_mul,
                value: ValueExpr::Mul(r_a, r_b),
            },
            Stmt::Store {
                buf: out,
                row: AffineExpr::from_terms(vec![(r as i64, i), (1, u)], 0),
                col: AffineExpr::from_terms(vec![(s as i64, j), (1, v)], 0),
                value: r_mul,
            },
        ];
        let nest = Stmt::For(Loop {
            var: i,
            lower: 0,
            upper: p as i64,
            body: vec![Stmt::For(Loop {
                var: j,
                lower: 0,
                upper: q as i64,
                body: vec![Stmt::For(Loop {
                    var: u,
                    lower: 0,
                    upper: r as i64,
                    body: vec![Stmt::For(Loop {
                        var: v,
                        lower: 0,
                        upper: s as i64,
                        body: inner,
                    })],
                })],
            })],
        });
        self.body.push(nest);
        out
    }
}

/// True when the statement (recursively) touches the buffer.
fn references_buffer(stmt: &Stmt, buf: BufId) -> bool {
    match stmt {
        Stmt::Alloc(b) | Stmt::Dealloc(b) => *b == buf,
        Stmt::For(l) => l.body.iter().any(|s| references_buffer(s, buf)),
        Stmt::Assign { value, .. } => {
            matches!(value, ValueExpr::Load { buf: b, .. } if *b == buf)
        }
        Stmt::Store { buf: b, .. } => *b == buf,
    }
}

/// Inserts a `Dealloc` after the last top-level statement that uses each
/// temp buffer. The output buffer stays live.
fn insert_deallocs(ir: &mut LoopIr) {
    let mut deallocs: Vec<(usize, BufId)> = Vec::new();
    for (index, buffer) in ir.buffers.iter().enumerate() {
        let id = BufId(index as u32);
        if !matches!(buffer.init, BufferInit::Temp) || Some(id) == ir.output {
            continue;
        }
        if let Some(last) = ir
            .body
            .iter()
            .rposition(|stmt| references_buffer(stmt, id))
        {
            deallocs.push((last, id));
        }
    }
    // Insert from the back so earlier indices stay valid.
    deallocs.sort_by_key(|&(index, _)| std::cmp::Reverse(index));
    for (index, id) in deallocs {
        ir.body.insert(index + 1, Stmt::Dealloc(id));
    }
}

fn lower_program(program: &FftProgram) -> Result<LoopIr, LowerError> {
    let output_op = program.output.ok_or(LowerError::EmptyProgram)?;
    for (index, op) in program.ops.iter().enumerate() {
        if op.shape.is_none() {
            return Err(LowerError::MissingShape(OpId(index)));
        }
    }

    let mut lw = Lowerer {
        buffers: Vec::new(),
        body: Vec::new(),
        next_reg: 0,
        next_var: 0,
        op_buf: Vec::with_capacity(program.ops.len()),
    };

    for (index, op) in program.ops.iter().enumerate() {
        let id = OpId(index);
        let gen_err = |source| LowerError::Generator { op: id, source };
        let buf = match &op.kind {
            FftOpKind::Constant {
                values,
                kind,
                input_name,
            } => match input_name {
                Some(name) => lw.add_buffer(
                    "arg",
                    values.rows(),
                    values.cols(),
                    BufferInit::Input {
                        name: name.clone(),
                        default: values.data().to_vec(),
                    },
                ),
                None => match kind {
                    ElementKind::Real => lw.literal_stores(values),
                    ElementKind::Complex => lw.constant(values),
                },
            },
            FftOpKind::Dft { size } => {
                let m = generators::dft_matrix(*size);
                lw.constant(&m)
            }
            FftOpKind::Identity { size } => {
                let m = generators::identity_matrix(*size);
                lw.constant(&m)
            }
            FftOpKind::Twiddle { size, block } => {
                let m = generators::twiddle_matrix(*size, *block).map_err(gen_err)?;
                lw.constant(&m)
            }
            FftOpKind::Permute { size, stride } => {
                let m = generators::stride_permutation_matrix(*size, *stride).map_err(gen_err)?;
                lw.constant(&m)
            }
            FftOpKind::CreateComplex { real, imag } => {
                let (re, im) = (lw.op_buf[real.0], lw.op_buf[imag.0]);
                lw.lower_create_complex(re, im)
            }
            FftOpKind::MatMul { lhs, rhs } => {
                let (l, r) = (lw.op_buf[lhs.0], lw.op_buf[rhs.0]);
                lw.lower_matmul(l, r)
            }
            FftOpKind::Kronecker { lhs, rhs } => {
                let (l, r) = (lw.op_buf[lhs.0], lw.op_buf[rhs.0]);
                lw.lower_kronecker(l, r)
            }
        };
        lw.op_buf.push(buf);
    }

    let mut ir = LoopIr {
        buffers: lw.buffers,
        body: lw.body,
        output: Some(lw.op_buf[output_op.0]),
        reg_count: lw.next_reg,
        var_count: lw.next_var,
    };
    insert_deallocs(&mut ir);
    Ok(ir)
}

/// Standard lowering: materializes constant subgraphs, then lowers the
/// runtime spine to loop nests.
pub fn lower_to_loops(program: &FftProgram) -> Result<LoopIr, LowerError> {
    let folded = fold_constants(program)?;
    lower_program(&folded)
}

/// Lowering without cross-op constant materialization: only generator ops
/// become constant buffers; every product is a loop nest, including fully
/// constant ones. Used as the reference for fold-vs-nofold differential
/// tests.
pub fn lower_to_loops_unfolded(program: &FftProgram) -> Result<LoopIr, LowerError> {
    lower_program(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft_ir::{build_ir, shapes::infer_shapes};
    use crate::frontend::parse_source;
    use crate::loop_ir::verify_loop_ir;

    fn lower(src: &str) -> LoopIr {
        let mut p = build_ir(&parse_source(src).unwrap()).unwrap();
        infer_shapes(&mut p).unwrap();
        let ir = lower_to_loops(&p).unwrap();
        assert_eq!(verify_loop_ir(&ir), Vec::<String>::new());
        ir
    }

    fn top_level_loops(ir: &LoopIr) -> Vec<&Loop> {
        ir.body
            .iter()
            .filter_map(|s| match s {
                Stmt::For(l) => Some(l),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn identity_becomes_constant_buffer() {
        let ir = lower("var x <2, 1> = [[1], [2]]; var y = I(2) · x;");
        let consts: Vec<_> = ir
            .buffers
            .iter()
            .filter(|b| matches!(b.init, BufferInit::Const(_)))
            .collect();
        assert_eq!(consts.len(), 1);
        assert_eq!((consts[0].rows, consts[0].cols), (2, 2));
        let data = match &consts[0].init {
            BufferInit::Const(d) => d,
            _ => unreachable!(),
        };
        assert_eq!(data[0].re, 1.0);
        assert_eq!(data[1].re, 0.0);
        assert_eq!(data[3].re, 1.0);
    }

    #[test]
    fn matvec_loop_bounds() {
        let ir = lower("var x <4, 1> = [[1], [2], [3], [4]]; var y = DFT(4) · x;");
        let loops = top_level_loops(&ir);
        assert_eq!(loops.len(), 1);
        let i = loops[0];
        assert_eq!((i.lower, i.upper), (0, 4));
        let j = match &i.body[0] {
            Stmt::For(l) => l,
            other => panic!("expected inner loop, got {other:?}"),
        };
        assert_eq!((j.lower, j.upper), (0, 1));
        let k = j
            .body
            .iter()
            .find_map(|s| match s {
                Stmt::For(l) => Some(l),
                _ => None,
            })
            .expect("inner reduction loop");
        assert_eq!((k.lower, k.upper), (0, 4));
        // One temp allocation: the 4x1 result.
        let temps: Vec<_> = ir
            .buffers
            .iter()
            .filter(|b| matches!(b.init, BufferInit::Temp))
            .collect();
        assert_eq!(temps.len(), 1);
        assert_eq!((temps[0].rows, temps[0].cols), (4, 1));
    }

    #[test]
    fn fft4_structure_after_folding() {
        let ir = lower(
            "var InputReal <4, 1> = [[1], [2], [3], [4]];\n\
             var InputImg <4, 1> = [[1], [2], [3], [4]];\n\
             var InputComplex = createComplex(InputReal, InputImg);\n\
             var result = (DFT(2) ⊗ I(2)) · twiddle(4,2) · (I(2) ⊗ DFT(2)) · Permute(4,2) · InputComplex;",
        );
        // Runtime work: the pairing nest plus the four product nests of the
        // application spine; every factor matrix is a folded constant.
        assert_eq!(top_level_loops(&ir).len(), 5);
        let inputs = ir.input_descriptors();
        assert_eq!(
            inputs,
            vec![
                ("InputReal".to_string(), 4, 1),
                ("InputImg".to_string(), 4, 1)
            ]
        );
        let const_count = ir
            .buffers
            .iter()
            .filter(|b| matches!(b.init, BufferInit::Const(_)))
            .count();
        assert_eq!(const_count, 4);
        // Intermediates are deallocated, the output is not.
        let deallocs = ir
            .body
            .iter()
            .filter(|s| matches!(s, Stmt::Dealloc(_)))
            .count();
        assert_eq!(deallocs, 4);
        assert!(!ir
            .body
            .iter()
            .any(|s| matches!(s, Stmt::Dealloc(b) if Some(*b) == ir.output)));
    }

    #[test]
    fn unfolded_lowering_keeps_kronecker_nests() {
        let src = "var InputReal <4, 1> = [[1], [2], [3], [4]];\n\
             var InputImg <4, 1> = [[1], [2], [3], [4]];\n\
             var InputComplex = createComplex(InputReal, InputImg);\n\
             var result = (DFT(2) ⊗ I(2)) · twiddle(4,2) · (I(2) ⊗ DFT(2)) · Permute(4,2) · InputComplex;";
        let mut p = build_ir(&parse_source(src).unwrap()).unwrap();
        infer_shapes(&mut p).unwrap();
        let ir = lower_to_loops_unfolded(&p).unwrap();
        assert_eq!(verify_loop_ir(&ir), Vec::<String>::new());
        // 2 Kronecker + 4 matmul + 1 pairing nest.
        assert_eq!(top_level_loops(&ir).len(), 7);
    }

    #[test]
    fn anonymous_literal_lowers_to_init_stores() {
        let ir = lower("var x <2, 1> = [[5], [6]]; var y = ([[1, 2]] · x) ⊗ x;");
        // The 1x2 literal is anonymous (not variable-bound), so it becomes
        // a temp initialized by straight-line stores.
        let store_count = ir
            .body
            .iter()
            .filter(|s| matches!(s, Stmt::Store { .. }))
            .count();
        assert_eq!(store_count, 2);
    }

    #[test]
    fn empty_program_is_rejected() {
        let p = build_ir(&parse_source("").unwrap()).unwrap();
        assert_eq!(lower_to_loops(&p), Err(LowerError::EmptyProgram));
    }
}
