//! Loop-IR interpreter: the JIT-mode executor.
//!
//! Statements run in order with standard counted-loop semantics; registers
//! are mutable scalar cells, buffers are dense complex matrices. Every
//! buffer access is bounds-checked — an out-of-bounds index means the
//! lowering produced broken code and surfaces as an error instead of
//! corrupting results. Execution collects dynamic load/store and
//! arithmetic counters.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::loop_ir::{BufId, BufferInit, LoopIr, Stmt, ValueExpr};
use crate::tensor::ComplexTensor;

/// Dynamic execution counters plus the wall-time buckets of a full
/// compile-and-run (filled in by the driver).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExecStats {
    pub frontend_s: f64,
    pub pipeline_s: f64,
    pub execution_s: f64,
    pub loads: u64,
    pub stores: u64,
    pub complex_muls: u64,
    pub complex_adds: u64,
}

impl ExecStats {
    /// Total complex arithmetic operations.
    pub fn flops(&self) -> u64 {
        self.complex_muls + self.complex_adds
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("input `{name}`: expected shape {expected_rows}x{expected_cols}, found {found_rows}x{found_cols}")]
    InputMismatch {
        name: String,
        expected_rows: usize,
        expected_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },
    #[error("unknown input `{name}`; expected one of: {expected}")]
    UnknownInput { name: String, expected: String },
    #[error("out-of-bounds access to {buffer}[{row}, {col}] (shape {rows}x{cols}); this indicates a lowering bug")]
    OutOfBoundsAccess {
        buffer: String,
        row: i64,
        col: i64,
        rows: usize,
        cols: usize,
    },
    #[error("access to unallocated buffer {buffer}; this indicates a lowering bug")]
    Unallocated { buffer: String },
    #[error("program has no output buffer")]
    NoOutput,
}

struct Machine<'ir> {
    ir: &'ir LoopIr,
    regs: Vec<Complex64>,
    vars: Vec<i64>,
    storage: Vec<Option<Vec<Complex64>>>,
    loads: u64,
    stores: u64,
    muls: u64,
    adds: u64,
}

impl<'ir> Machine<'ir> {
    fn offset(&self, buf: BufId, row: i64, col: i64) -> Result<usize, ExecError> {
        let buffer = self.ir.buffer(buf);
        if row < 0 || col < 0 || row as usize >= buffer.rows || col as usize >= buffer.cols {
            return Err(ExecError::OutOfBoundsAccess {
                buffer: buffer.name.clone(),
                row,
                col,
                rows: buffer.rows,
                cols: buffer.cols,
            });
        }
        Ok(row as usize * buffer.cols + col as usize)
    }

    fn run(&mut self, stmts: &[Stmt]) -> Result<(), ExecError> {
        for stmt in stmts {
            match stmt {
                Stmt::Alloc(buf) => {
                    let len = self.ir.buffer(*buf).len();
                    self.storage[buf.0 as usize] = Some(vec![Complex64::new(0.0, 0.0); len]);
                }
                Stmt::Dealloc(buf) => {
                    self.storage[buf.0 as usize] = None;
                }
                Stmt::For(l) => {
                    let var = l.var.0 as usize;
                    let mut iv = l.lower;
                    while iv < l.upper {
                        self.vars[var] = iv;
                        self.run(&l.body)?;
                        iv += 1;
                    }
                }
                Stmt::Assign { dst, value } => {
                    let result = match value {
                        ValueExpr::Const(z) => *z,
                        ValueExpr::Load { buf, row, col } => {
                            let r = row.eval(&self.vars);
                            let c = col.eval(&self.vars);
                            let offset = self.offset(*buf, r, c)?;
                            let cells = self.storage[buf.0 as usize].as_ref().ok_or_else(|| {
                                ExecError::Unallocated {
                                    buffer: self.ir.buffer(*buf).name.clone(),
                                }
                            })?;
                            self.loads += 1;
                            cells[offset]
                        }
                        ValueExpr::Add(a, b) => {
                            self.adds += 1;
                            self.regs[a.0 as usize] + self.regs[b.0 as usize]
                        }
                        ValueExpr::Mul(a, b) => {
                            self.muls += 1;
                            self.regs[a.0 as usize] * self.regs[b.0 as usize]
                        }
                    };
                    self.regs[dst.0 as usize] = result;
                }
                Stmt::Store {
                    buf,
                    row,
                    col,
                    value,
                } => {
                    let r = row.eval(&self.vars);
                    let c = col.eval(&self.vars);
                    let offset = self.offset(*buf, r, c)?;
                    let v = self.regs[value.0 as usize];
                    let cells = self.storage[buf.0 as usize].as_mut().ok_or_else(|| {
                        ExecError::Unallocated {
                            buffer: self.ir.buffer(*buf).name.clone(),
                        }
                    })?;
                    self.stores += 1;
                    cells[offset] = v;
                }
            }
        }
        Ok(())
    }
}

/// Executes the program on named inputs and returns the output tensor plus
/// dynamic counters. Unknown input names and shape mismatches are
/// rejected before execution; missing inputs fall back to their baked
/// defaults. Evaluation order is fixed, so results and counters are
/// deterministic.
pub fn interpret(
    ir: &LoopIr,
    inputs: &HashMap<String, ComplexTensor>,
) -> Result<(ComplexTensor, ExecStats), ExecError> {
    let descriptors = ir.input_descriptors();
    for (name, tensor) in inputs {
        match descriptors.iter().find(|(n, _, _)| n == name) {
            None => {
                let expected: Vec<&str> =
                    descriptors.iter().map(|(n, _, _)| n.as_str()).collect();
                return Err(ExecError::UnknownInput {
                    name: name.clone(),
                    expected: if expected.is_empty() {
                        "(no inputs)".to_string()
                    } else {
                        expected.join(", ")
                    },
                });
            }
            Some(&(_, rows, cols)) => {
                if tensor.rows() != rows || tensor.cols() != cols {
                    return Err(ExecError::InputMismatch {
                        name: name.clone(),
                        expected_rows: rows,
                        expected_cols: cols,
                        found_rows: tensor.rows(),
                        found_cols: tensor.cols(),
                    });
                }
            }
        }
    }

    let mut storage: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(ir.buffers.len());
    for buffer in &ir.buffers {
        let cells = match &buffer.init {
            BufferInit::Temp => None, // materialized by Alloc
            BufferInit::Const(data) => Some(data.clone()),
            BufferInit::Input { name, default } => match inputs.get(name) {
                Some(tensor) => Some(tensor.data().to_vec()),
                None => Some(default.clone()),
            },
        };
        storage.push(cells);
    }

    let mut machine = Machine {
        ir,
        regs: vec![Complex64::new(0.0, 0.0); ir.reg_count as usize],
        vars: vec![0; ir.var_count as usize],
        storage,
        loads: 0,
        stores: 0,
        muls: 0,
        adds: 0,
    };
    machine.run(&ir.body)?;

    let output = ir.output.ok_or(ExecError::NoOutput)?;
    let buffer = ir.buffer(output);
    let cells = machine.storage[output.0 as usize]
        .take()
        .ok_or_else(|| ExecError::Unallocated {
            buffer: buffer.name.clone(),
        })?;
    let tensor = ComplexTensor::from_data(buffer.rows, buffer.cols, cells);
    let stats = ExecStats {
        loads: machine.loads,
        stores: machine.stores,
        complex_muls: machine.muls,
        complex_adds: machine.adds,
        ..ExecStats::default()
    };
    Ok((tensor, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft_ir::{build_ir, shapes::infer_shapes};
    use crate::frontend::parse_source;
    use crate::lowering::lower_to_loops;

    fn compile(src: &str) -> LoopIr {
        let mut p = build_ir(&parse_source(src).unwrap()).unwrap();
        infer_shapes(&mut p).unwrap();
        lower_to_loops(&p).unwrap()
    }

    const FFT4: &str = "\
        var InputReal <4, 1> = [[1], [2], [3], [4]];\n\
        var InputImg <4, 1> = [[1], [2], [3], [4]];\n\
        var InputComplex = createComplex(InputReal, InputImg);\n\
        var result = (DFT(2) ⊗ I(2)) · twiddle(4,2) · (I(2) ⊗ DFT(2)) · Permute(4,2) · InputComplex;";

    #[test]
    fn fft4_default_inputs() {
        let ir = compile(FFT4);
        let (out, stats) = interpret(&ir, &HashMap::new()).unwrap();
        let expect = [(10.0, 10.0), (-4.0, 0.0), (-2.0, -2.0), (0.0, -4.0)];
        for (z, (re, im)) in out.data().iter().zip(expect) {
            assert!((z.re - re).abs() <= 1e-12 && (z.im - im).abs() <= 1e-12);
        }
        assert!(stats.loads > 0 && stats.stores > 0 && stats.flops() > 0);
    }

    #[test]
    fn identity_application_preserves_input() {
        let ir = compile("var x <4, 1> = [[1], [2], [3], [4]]; var y = I(4) · x;");
        let input = ComplexTensor::column(&[
            Complex64::new(5.0, 1.0),
            Complex64::new(6.0, 2.0),
            Complex64::new(7.0, 3.0),
            Complex64::new(8.0, 4.0),
        ]);
        let mut inputs = HashMap::new();
        inputs.insert("x".to_string(), input.clone());
        let (out, _) = interpret(&ir, &inputs).unwrap();
        assert!(out.max_abs_diff(&input) <= 1e-15);
    }

    #[test]
    fn matmul_complex_mul_count_is_pqr() {
        // 4x4 times 4x1: exactly p*q*r = 16 complex multiplications.
        let ir = compile("var x <4, 1> = [[1], [2], [3], [4]]; var y = DFT(4) · x;");
        let (_, stats) = interpret(&ir, &HashMap::new()).unwrap();
        assert_eq!(stats.complex_muls, 16);
        assert_eq!(stats.complex_adds, 16);
        // Loads: 3 per inner iteration; stores: zero-init + one per iteration.
        assert_eq!(stats.loads, 48);
        assert_eq!(stats.stores, 20);
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let ir = compile(FFT4);
        let mut inputs = HashMap::new();
        inputs.insert("InputReal".to_string(), ComplexTensor::zeros(2, 1));
        assert!(matches!(
            interpret(&ir, &inputs),
            Err(ExecError::InputMismatch { .. })
        ));
    }

    #[test]
    fn unknown_input_name_is_rejected() {
        let ir = compile(FFT4);
        let mut inputs = HashMap::new();
        inputs.insert("NoSuchInput".to_string(), ComplexTensor::zeros(4, 1));
        assert!(matches!(
            interpret(&ir, &inputs),
            Err(ExecError::UnknownInput { .. })
        ));
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let ir = compile(FFT4);
        let (a, sa) = interpret(&ir, &HashMap::new()).unwrap();
        let (b, sb) = interpret(&ir, &HashMap::new()).unwrap();
        assert!(a.bitwise_eq(&b));
        assert_eq!(sa, sb);
    }

    #[test]
    fn interpreter_matches_reference_evaluation() {
        let src = "var re <3, 1> = [[1], [2], [3]];\n\
                   var im <3, 1> = [[0.5], [0.25], [0.125]];\n\
                   var x = createComplex(re, im);\n\
                   var y = (DFT(3) · x) ⊗ x;";
        let mut p = build_ir(&parse_source(src).unwrap()).unwrap();
        infer_shapes(&mut p).unwrap();
        let reference = crate::fft_ir::fold::evaluate(&p, &HashMap::new()).unwrap();
        let ir = lower_to_loops(&p).unwrap();
        let (out, _) = interpret(&ir, &HashMap::new()).unwrap();
        assert_eq!(out.max_abs_diff(&reference), 0.0);
    }
}
