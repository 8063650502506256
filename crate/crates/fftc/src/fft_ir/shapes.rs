//! Shape inference over the FFT-algebra IR.
//!
//! Shapes propagate forward from constants and generator arguments:
//! constants carry their literal dimensions, generators are n x n complex,
//! matmul contracts the inner dimension and the Kronecker product
//! multiplies dimensions elementwise. Real operands are promoted to
//! complex wherever a complex value is produced, except `createComplex`,
//! which demands two real operands.

use thiserror::Error;

use super::{FftOpKind, FftProgram, OpId, TensorShape};
use crate::tensor::ElementKind;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("%{}: shape mismatch: expected {expected}, found {found}", op.0)]
pub struct ShapeError {
    pub op: OpId,
    pub expected: String,
    pub found: String,
}

fn promote(a: ElementKind, b: ElementKind) -> ElementKind {
    if a == ElementKind::Complex || b == ElementKind::Complex {
        ElementKind::Complex
    } else {
        ElementKind::Real
    }
}

/// Annotates every op with its inferred shape.
pub fn infer_shapes(program: &mut FftProgram) -> Result<(), ShapeError> {
    for index in 0..program.ops.len() {
        let id = OpId(index);
        let shape = match &program.ops[index].kind {
            FftOpKind::Constant { values, kind, .. } => {
                TensorShape::new(values.rows(), values.cols(), *kind)
            }
            FftOpKind::CreateComplex { real, imag } => {
                let r = program.shape_of(*real).expect("operand precedes op");
                let i = program.shape_of(*imag).expect("operand precedes op");
                if r.kind != ElementKind::Real || i.kind != ElementKind::Real {
                    return Err(ShapeError {
                        op: id,
                        expected: "two real operands".to_string(),
                        found: format!("{} and {}", r.render(), i.render()),
                    });
                }
                if (r.rows, r.cols) != (i.rows, i.cols) {
                    return Err(ShapeError {
                        op: id,
                        expected: format!("imaginary part of shape {}x{}", r.rows, r.cols),
                        found: format!("{}x{}", i.rows, i.cols),
                    });
                }
                TensorShape::new(r.rows, r.cols, ElementKind::Complex)
            }
            FftOpKind::MatMul { lhs, rhs } => {
                let l = program.shape_of(*lhs).expect("operand precedes op");
                let r = program.shape_of(*rhs).expect("operand precedes op");
                if l.cols != r.rows {
                    return Err(ShapeError {
                        op: id,
                        expected: format!("inner dimension {}", l.cols),
                        found: format!("{}x{}", r.rows, r.cols),
                    });
                }
                TensorShape::new(l.rows, r.cols, promote(l.kind, r.kind))
            }
            FftOpKind::Kronecker { lhs, rhs } => {
                let l = program.shape_of(*lhs).expect("operand precedes op");
                let r = program.shape_of(*rhs).expect("operand precedes op");
                TensorShape::new(l.rows * r.rows, l.cols * r.cols, promote(l.kind, r.kind))
            }
            FftOpKind::Dft { size } | FftOpKind::Identity { size } => {
                TensorShape::new(*size, *size, ElementKind::Complex)
            }
            FftOpKind::Twiddle { size, .. } | FftOpKind::Permute { size, .. } => {
                TensorShape::new(*size, *size, ElementKind::Complex)
            }
        };
        program.ops[index].shape = Some(shape);
    }
    Ok(())
}
