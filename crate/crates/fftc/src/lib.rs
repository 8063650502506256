//! fftc: a compiler and execution engine for a small language that
//! describes Fast Fourier Transforms as products of sparse structured
//! matrices (Kronecker products, diagonal twiddle matrices, stride
//! permutations and small DFT blocks).
//!
//! Programs are parsed into an AST, translated to an FFT-algebra IR,
//! progressively lowered to an affine loop-nest IR, optimized by a small
//! pass pipeline, and executed either directly by an interpreter or from a
//! serialized plan file. A direct O(n^2) DFT oracle backs the verification
//! harness.

pub mod fft_ir;
pub mod frontend;
pub mod generators;
pub mod tensor;

pub use tensor::{ComplexTensor, ElementKind};

pub mod interp;
pub mod loop_ir;
pub mod lowering;
pub mod passes;
pub mod cli;
pub mod compile;
pub mod harness;
pub mod plan;
pub mod proggen;
