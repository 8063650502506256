//! Optimization passes over the loop IR and the level-driven pipeline.
//!
//! Levels are cumulative: O0 lowers only, O2 adds loop fusion and
//! loop-invariant code motion, O3 adds scalar replacement on top. The
//! loop-IR verifier runs after lowering and after every pass; a failure
//! there is a compiler bug and aborts the pipeline.

pub mod fusion;
pub mod licm;
pub mod scalar_repl;
mod util;

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::fft_ir::FftProgram;
use crate::loop_ir::{verify_loop_ir, LoopIr};
use crate::lowering::{lower_to_loops, LowerError};

pub use fusion::pass_loop_fusion;
pub use licm::pass_licm;
pub use scalar_repl::pass_scalar_replacement;

/// Optimization level. There is no O1; the pass sets grow monotonically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PassLevel {
    O0,
    O2,
    O3,
}

impl PassLevel {
    pub const ALL: [PassLevel; 3] = [PassLevel::O0, PassLevel::O2, PassLevel::O3];

    /// Names of the pipeline stages this level runs, in order.
    pub fn pass_names(self) -> Vec<&'static str> {
        let mut names = vec!["lower"];
        if self >= PassLevel::O2 {
            names.push("loop-fusion");
            names.push("licm");
        }
        if self >= PassLevel::O3 {
            names.push("scalar-replacement");
        }
        names
    }
}

impl std::fmt::Display for PassLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PassLevel::O0 => write!(f, "O0"),
            PassLevel::O2 => write!(f, "O2"),
            PassLevel::O3 => write!(f, "O3"),
        }
    }
}

impl std::str::FromStr for PassLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "O0" | "o0" | "0" => Ok(PassLevel::O0),
            "O2" | "o2" | "2" => Ok(PassLevel::O2),
            "O3" | "o3" | "3" => Ok(PassLevel::O3),
            other => Err(format!("unknown optimization level `{other}` (use O0, O2 or O3)")),
        }
    }
}

/// Wall time of one pipeline stage.
#[derive(Debug, Clone, Serialize)]
pub struct PassTiming {
    pub name: String,
    pub seconds: f64,
}

/// Per-pass timing record of a pipeline run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PipelineReport {
    pub passes: Vec<PassTiming>,
}

impl PipelineReport {
    pub fn total_seconds(&self) -> f64 {
        self.passes.iter().map(|p| p.seconds).sum()
    }

    pub fn pass_names(&self) -> Vec<&str> {
        self.passes.iter().map(|p| p.name.as_str()).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error("pass `{pass}` broke loop-IR invariants: {}", diagnostics.join("; "))]
    Verify {
        pass: &'static str,
        diagnostics: Vec<String>,
    },
}

fn checked(
    pass: &'static str,
    report: &mut PipelineReport,
    ir: LoopIr,
    f: impl FnOnce(LoopIr) -> LoopIr,
) -> Result<LoopIr, PipelineError> {
    let start = Instant::now();
    let ir = f(ir);
    report.passes.push(PassTiming {
        name: pass.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
    let diagnostics = verify_loop_ir(&ir);
    if diagnostics.is_empty() {
        Ok(ir)
    } else {
        Err(PipelineError::Verify { pass, diagnostics })
    }
}

/// Lowers a verified, shape-annotated program and runs the pass set of
/// `level`, timing each stage.
pub fn run_pipeline(
    program: &FftProgram,
    level: PassLevel,
) -> Result<(LoopIr, PipelineReport), PipelineError> {
    let mut report = PipelineReport::default();

    let start = Instant::now();
    let ir = lower_to_loops(program)?;
    report.passes.push(PassTiming {
        name: "lower".to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
    let diagnostics = verify_loop_ir(&ir);
    if !diagnostics.is_empty() {
        return Err(PipelineError::Verify {
            pass: "lower",
            diagnostics,
        });
    }

    let mut ir = ir;
    if level >= PassLevel::O2 {
        ir = checked("loop-fusion", &mut report, ir, pass_loop_fusion)?;
        ir = checked("licm", &mut report, ir, pass_licm)?;
    }
    if level >= PassLevel::O3 {
        ir = checked("scalar-replacement", &mut report, ir, pass_scalar_replacement)?;
    }
    Ok((ir, report))
}
