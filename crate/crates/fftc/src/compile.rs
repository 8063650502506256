//! End-to-end compilation: source text to executable loop IR.
//!
//! This is the entry the CLI, the harnesses and the C API share. Timing is
//! split into the frontend bucket (lexing, parsing, IR generation, shape
//! inference) and the pipeline bucket (lowering plus passes, reported
//! per pass).

use std::time::Instant;

use thiserror::Error;

use crate::fft_ir::shapes::ShapeError;
use crate::fft_ir::{self, BuildError, FftProgram};
use crate::frontend::{self, FrontendError};
use crate::loop_ir::LoopIr;
use crate::passes::{run_pipeline, PassLevel, PipelineError, PipelineReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("invalid program: {}", diagnostics.join("; "))]
    Invalid { diagnostics: Vec<String> },
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// A compiled program with its provenance and timing records.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    /// Shape-annotated FFT-algebra IR (before constant materialization).
    pub program: FftProgram,
    pub ir: LoopIr,
    pub report: PipelineReport,
    pub frontend_seconds: f64,
    pub source_hash: String,
    pub level: PassLevel,
}

/// Compiles source text at the given optimization level.
pub fn compile_source(source: &str, level: PassLevel) -> Result<CompiledProgram, CompileError> {
    let start = Instant::now();
    let decls = frontend::parse_source(source)?;
    let mut program = fft_ir::build_ir(&decls)?;
    let diagnostics = fft_ir::verify(&program);
    if !diagnostics.is_empty() {
        return Err(CompileError::Invalid {
            diagnostics: diagnostics.iter().map(|d| d.to_string()).collect(),
        });
    }
    fft_ir::shapes::infer_shapes(&mut program)?;
    let frontend_seconds = start.elapsed().as_secs_f64();

    let (ir, report) = run_pipeline(&program, level)?;
    Ok(CompiledProgram {
        program,
        ir,
        report,
        frontend_seconds,
        source_hash: crate::plan::source_hash(source),
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compiles_generated_program() {
        let src = crate::proggen::gen_cooley_tukey(&crate::proggen::GenSpec::radix2(8)).unwrap();
        let compiled = compile_source(&src, PassLevel::O3).unwrap();
        assert_eq!(compiled.level, PassLevel::O3);
        assert_eq!(compiled.report.pass_names().len(), 4);
        assert!(compiled.frontend_seconds >= 0.0);
        assert_eq!(compiled.source_hash.len(), 64);
    }

    #[test]
    fn divisibility_violation_is_reported_as_invalid() {
        let err = compile_source("var t = twiddle(4, 3);", PassLevel::O0).unwrap_err();
        match err {
            CompileError::Invalid { diagnostics } => {
                assert!(diagnostics[0].contains("3 does not divide 4"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
