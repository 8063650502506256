//! Constant evaluation over the FFT-algebra IR.
//!
//! Generator ops and anonymous literals are compile-time constants; any op
//! whose operands are all constant is itself constant and can be
//! materialized through the matrix algebra in `generators`. Named inputs
//! are runtime values and block folding, so programs keep their
//! input-dependent spine as executable ops.

use std::collections::HashMap;

use thiserror::Error;

use crate::generators;
use crate::generators::AlgebraError;
use crate::tensor::{ComplexTensor, ElementKind};

use super::{FftOp, FftOpKind, FftProgram, OpId, TensorShape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("%{}: {source}", op.0)]
    Algebra { op: OpId, source: AlgebraError },
    #[error("input `{name}`: expected shape {expected_rows}x{expected_cols}, found {found_rows}x{found_cols}")]
    InputShape {
        name: String,
        expected_rows: usize,
        expected_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },
    #[error("program has no output")]
    NoOutput,
}

fn eval_kind(
    kind: &FftOpKind,
    id: OpId,
    operand: impl Fn(OpId) -> ComplexTensor,
) -> Result<ComplexTensor, EvalError> {
    let algebra = |source| EvalError::Algebra { op: id, source };
    match kind {
        FftOpKind::Constant { values, .. } => Ok(values.clone()),
        FftOpKind::CreateComplex { real, imag } => {
            generators::create_complex(&operand(*real), &operand(*imag)).map_err(algebra)
        }
        FftOpKind::MatMul { lhs, rhs } => {
            generators::matmul(&operand(*lhs), &operand(*rhs)).map_err(algebra)
        }
        FftOpKind::Kronecker { lhs, rhs } => {
            Ok(generators::kronecker(&operand(*lhs), &operand(*rhs)))
        }
        FftOpKind::Dft { size } => Ok(generators::dft_matrix(*size)),
        FftOpKind::Identity { size } => Ok(generators::identity_matrix(*size)),
        FftOpKind::Twiddle { size, block } => {
            generators::twiddle_matrix(*size, *block).map_err(algebra)
        }
        FftOpKind::Permute { size, stride } => {
            generators::stride_permutation_matrix(*size, *stride).map_err(algebra)
        }
    }
}

/// Reference evaluation of a whole program through the dense algebra,
/// substituting `inputs` for named constants by name. This is the
/// semantics the lowered loop program must reproduce.
pub fn evaluate(
    program: &FftProgram,
    inputs: &HashMap<String, ComplexTensor>,
) -> Result<ComplexTensor, EvalError> {
    let mut values: Vec<ComplexTensor> = Vec::with_capacity(program.ops.len());
    for (index, op) in program.ops.iter().enumerate() {
        let value = match &op.kind {
            FftOpKind::Constant {
                values: default,
                input_name: Some(name),
                ..
            } => match inputs.get(name) {
                Some(provided) => {
                    if provided.rows() != default.rows() || provided.cols() != default.cols() {
                        return Err(EvalError::InputShape {
                            name: name.clone(),
                            expected_rows: default.rows(),
                            expected_cols: default.cols(),
                            found_rows: provided.rows(),
                            found_cols: provided.cols(),
                        });
                    }
                    provided.clone()
                }
                None => default.clone(),
            },
            kind => eval_kind(kind, OpId(index), |id| values[id.0].clone())?,
        };
        values.push(value);
    }
    let output = program.output.ok_or(EvalError::NoOutput)?;
    Ok(values[output.0].clone())
}

/// Replaces every maximal constant subgraph with a materialized constant.
///
/// Named inputs stay live ops. Constant ops only referenced by other
/// folded ops disappear; constant ops feeding runtime ops (or serving as
/// program output) are kept as `fft.constant` values.
pub fn fold_constants(program: &FftProgram) -> Result<FftProgram, EvalError> {
    let n = program.ops.len();

    // Forward constant propagation.
    let mut const_val: Vec<Option<ComplexTensor>> = Vec::with_capacity(n);
    for (index, op) in program.ops.iter().enumerate() {
        let value = match &op.kind {
            FftOpKind::Constant {
                input_name: Some(_),
                ..
            } => None,
            FftOpKind::Constant { values, .. } => Some(values.clone()),
            kind => {
                if kind
                    .operands()
                    .iter()
                    .all(|operand| const_val[operand.0].is_some())
                {
                    Some(eval_kind(kind, OpId(index), |id| {
                        const_val[id.0].clone().expect("operand is constant")
                    })?)
                } else {
                    None
                }
            }
        };
        const_val.push(value);
    }

    // A constant op survives only where a runtime op (or the output) needs
    // its materialized value.
    let mut survives = vec![false; n];
    for (index, op) in program.ops.iter().enumerate() {
        if const_val[index].is_none() {
            survives[index] = true;
            for operand in op.kind.operands() {
                if const_val[operand.0].is_some() {
                    survives[operand.0] = true;
                }
            }
        }
    }
    if let Some(out) = program.output {
        if const_val[out.0].is_some() {
            survives[out.0] = true;
        }
    }

    let mut remap: Vec<Option<OpId>> = vec![None; n];
    let mut ops = Vec::new();
    for (index, op) in program.ops.iter().enumerate() {
        if !survives[index] {
            continue;
        }
        let new_id = OpId(ops.len());
        remap[index] = Some(new_id);
        match &const_val[index] {
            Some(value) => {
                let kind = op
                    .shape
                    .map(|s| s.kind)
                    .unwrap_or(ElementKind::Complex);
                ops.push(FftOp {
                    kind: FftOpKind::Constant {
                        values: value.clone(),
                        kind,
                        input_name: None,
                    },
                    shape: Some(TensorShape::new(value.rows(), value.cols(), kind)),
                    pos: op.pos,
                });
            }
            None => {
                let mut kind = op.kind.clone();
                match &mut kind {
                    FftOpKind::CreateComplex { real, imag } => {
                        *real = remap[real.0].expect("operand survives");
                        *imag = remap[imag.0].expect("operand survives");
                    }
                    FftOpKind::MatMul { lhs, rhs } | FftOpKind::Kronecker { lhs, rhs } => {
                        *lhs = remap[lhs.0].expect("operand survives");
                        *rhs = remap[rhs.0].expect("operand survives");
                    }
                    _ => {}
                }
                ops.push(FftOp {
                    kind,
                    shape: op.shape,
                    pos: op.pos,
                });
            }
        }
    }

    let bindings = program
        .bindings
        .iter()
        .filter_map(|(name, id)| remap[id.0].map(|new| (name.clone(), new)))
        .collect();
    let output = program.output.and_then(|out| remap[out.0]);

    Ok(FftProgram {
        ops,
        bindings,
        output,
    })
}
