//! Verification and benchmark harnesses.
//!
//! Verification compiles a generated radix-2 program once per size and
//! level, runs seeded random trials through the interpreter and compares
//! each result against the direct O(n^2) DFT oracle. The reported error
//! is the maximum elementwise modulus of the difference divided by the
//! transform size; a trial passes below 1e-7.
//!
//! Benchmarking reproduces the experimental protocol shape: per size it
//! times the direct program and the recursive program at O0/O2/O3, with a
//! fixed number of executions split into rounds; the mean and median are
//! taken over all executions and the standard deviation across the round
//! means. No timing assertions are made anywhere; numbers are reported
//! as CSV.

use std::collections::HashMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::compile::{compile_source, CompileError};
use crate::generators;
use crate::interp::{interpret, ExecError};
use crate::passes::PassLevel;
use crate::plan::{deserialize_plan, run_plan, serialize_plan, PlanError, PlanMeta};
use crate::proggen::{gen_cooley_tukey, gen_direct, GenError, GenSpec};
use crate::tensor::ComplexTensor;

/// Error threshold of the verification harness.
pub const VERIFY_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Outcome of one verification trial.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub size: usize,
    pub trial: usize,
    pub level: PassLevel,
    /// max elementwise |difference| / size.
    pub error: f64,
    /// max elementwise |difference| before the size reduction.
    pub max_abs_diff: f64,
    pub pass: bool,
    /// Diagnostics when compilation or execution failed.
    pub detail: Option<String>,
}

/// Draws a complex column vector with components uniform in [-1, 1],
/// returned as the (real, imaginary) tensor pair the generated programs
/// take as inputs.
pub fn random_input(rng: &mut ChaCha8Rng, n: usize) -> (ComplexTensor, ComplexTensor) {
    let dist = Uniform::new_inclusive(-1.0f64, 1.0f64);
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for _ in 0..n {
        re.push(Complex64::new(dist.sample(rng), 0.0));
        im.push(Complex64::new(dist.sample(rng), 0.0));
    }
    (ComplexTensor::column(&re), ComplexTensor::column(&im))
}

fn failed_reports(
    size: usize,
    trials: usize,
    level: PassLevel,
    detail: String,
) -> Vec<VerifyReport> {
    (0..trials)
        .map(|trial| VerifyReport {
            size,
            trial,
            level,
            error: f64::INFINITY,
            max_abs_diff: f64::INFINITY,
            pass: false,
            detail: Some(detail.clone()),
        })
        .collect()
}

/// Runs seeded random trials of the generated size-`size` program at the
/// given level against the direct-summation oracle. Compilation happens
/// once; compilation and execution are pure, so this is observationally
/// the same as recompiling per trial.
pub fn verify(size: usize, trials: usize, level: PassLevel, seed: u64) -> Vec<VerifyReport> {
    let source = match gen_cooley_tukey(&GenSpec::radix2(size)) {
        Ok(s) => s,
        Err(e) => return failed_reports(size, trials, level, e.to_string()),
    };
    let compiled = match compile_source(&source, level) {
        Ok(c) => c,
        Err(e) => return failed_reports(size, trials, level, e.to_string()),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(trials);
    for trial in 0..trials {
        let (re, im) = random_input(&mut rng, size);
        let mut inputs = HashMap::new();
        inputs.insert("InputReal".to_string(), re.clone());
        inputs.insert("InputImg".to_string(), im.clone());

        match interpret(&compiled.ir, &inputs) {
            Ok((result, _)) => {
                let x = generators::create_complex(&re, &im).expect("equal shapes");
                let oracle = generators::reference_dft(&x);
                let max_abs_diff = result.max_abs_diff(&oracle);
                let error = max_abs_diff / size as f64;
                reports.push(VerifyReport {
                    size,
                    trial,
                    level,
                    error,
                    max_abs_diff,
                    pass: error < VERIFY_THRESHOLD,
                    detail: None,
                });
            }
            Err(e) => {
                reports.push(VerifyReport {
                    size,
                    trial,
                    level,
                    error: f64::INFINITY,
                    max_abs_diff: f64::INFINITY,
                    pass: false,
                    detail: Some(e.to_string()),
                });
            }
        }
    }
    reports
}

// --- Benchmarking ---

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExecMode {
    Jit,
    Aot,
}

impl std::fmt::Display for ExecMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExecMode::Jit => write!(f, "jit"),
            ExecMode::Aot => write!(f, "aot"),
        }
    }
}

impl std::str::FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jit" => Ok(ExecMode::Jit),
            "aot" => Ok(ExecMode::Aot),
            other => Err(format!("unknown mode `{other}` (use jit or aot)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    /// Level applied to the direct variant; the recursive variants sweep
    /// O0/O2/O3 regardless.
    pub level: PassLevel,
    pub mode: ExecMode,
    /// Total executions per variant, split into `rounds` groups.
    pub repeats: usize,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![32, 64],
            level: PassLevel::O0,
            mode: ExecMode::Jit,
            repeats: 1000,
            rounds: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub variant: String,
    pub level: PassLevel,
    pub mode: ExecMode,
    pub mean_s: f64,
    pub median_s: f64,
    pub stddev_s: f64,
    pub flops: u64,
    pub loads: u64,
    pub stores: u64,
}

/// Fixed CSV schema of the benchmark output.
pub const BENCH_CSV_HEADER: &str =
    "size,variant,level,mode,mean_s,median_s,stddev_s,flops,loads,stores";

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6e},{:.6e},{:.6e},{},{},{}\n",
            row.size,
            row.variant,
            row.level,
            row.mode,
            row.mean_s,
            row.median_s,
            row.stddev_s,
            row.flops,
            row.loads,
            row.stores
        ));
    }
    out
}

fn timed_runs(
    ir: &crate::loop_ir::LoopIr,
    mode: ExecMode,
    inputs: &HashMap<String, ComplexTensor>,
    repeats: usize,
    rounds: usize,
    source_hash: &str,
    level: PassLevel,
) -> Result<(Vec<Vec<f64>>, crate::interp::ExecStats), HarnessError> {
    // AOT builds the plan once and replays it.
    let plan = match mode {
        ExecMode::Jit => None,
        ExecMode::Aot => {
            let bytes = serialize_plan(
                ir,
                &PlanMeta {
                    source_hash: source_hash.to_string(),
                    opt_level: level,
                },
            );
            Some(deserialize_plan(&bytes)?)
        }
    };

    let run_once = |timings: &mut Vec<f64>| -> Result<crate::interp::ExecStats, HarnessError> {
        let start = Instant::now();
        let (_, stats) = match &plan {
            Some(p) => run_plan(p, inputs)?,
            None => interpret(ir, inputs)?,
        };
        timings.push(start.elapsed().as_secs_f64());
        Ok(stats)
    };

    let rounds = rounds.max(1).min(repeats.max(1));
    let per_round = repeats / rounds;
    let remainder = repeats % rounds;

    let mut all_rounds = Vec::with_capacity(rounds);
    let mut stats = None;
    for round in 0..rounds {
        let count = per_round + usize::from(round < remainder);
        let mut timings = Vec::with_capacity(count);
        for _ in 0..count {
            let s = run_once(&mut timings)?;
            if stats.is_none() {
                stats = Some(s);
            }
        }
        all_rounds.push(timings);
    }
    Ok((all_rounds, stats.unwrap_or_default()))
}

fn summarize(rounds: &[Vec<f64>]) -> (f64, f64, f64) {
    let mut all: Vec<f64> = rounds.iter().flatten().copied().collect();
    if all.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if all.len() % 2 == 1 {
        all[all.len() / 2]
    } else {
        0.5 * (all[all.len() / 2 - 1] + all[all.len() / 2])
    };
    let round_means: Vec<f64> = rounds
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .collect();
    let stddev = if round_means.len() > 1 {
        let m = round_means.iter().sum::<f64>() / round_means.len() as f64;
        let var = round_means.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
            / (round_means.len() - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    (mean, median, stddev)
}

/// Benchmarks the four variants (direct, recursive at O0/O2/O3) per size.
pub fn bench(config: &BenchConfig) -> Result<Vec<BenchRow>, HarnessError> {
    let mut rows = Vec::new();
    for &size in &config.sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ size as u64);
        let (re, im) = random_input(&mut rng, size);
        let mut inputs = HashMap::new();
        inputs.insert("InputReal".to_string(), re);
        inputs.insert("InputImg".to_string(), im);

        let mut variants: Vec<(String, String, PassLevel)> = Vec::new();
        variants.push(("direct".to_string(), gen_direct(size), config.level));
        let recursive = gen_cooley_tukey(&GenSpec::radix2(size))?;
        for level in PassLevel::ALL {
            variants.push((format!("recursive-{level}"), recursive.clone(), level));
        }

        for (variant, source, level) in variants {
            let compiled = compile_source(&source, level)?;
            let (timings, stats) = timed_runs(
                &compiled.ir,
                config.mode,
                &inputs,
                config.repeats,
                config.rounds,
                &compiled.source_hash,
                level,
            )?;
            let (mean_s, median_s, stddev_s) = summarize(&timings);
            rows.push(BenchRow {
                size,
                variant,
                level,
                mode: config.mode,
                mean_s,
                median_s,
                stddev_s,
                flops: stats.flops(),
                loads: stats.loads,
                stores: stats.stores,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_size4_is_tight() {
        let reports = verify(4, 3, PassLevel::O0, 7);
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert!(r.pass, "{r:?}");
            assert!(r.error < 1e-12);
        }
    }

    #[test]
    fn verify_is_seed_reproducible() {
        let a = verify(8, 2, PassLevel::O2, 42);
        let b = verify(8, 2, PassLevel::O2, 42);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.error.to_bits(), y.error.to_bits());
        }
        let c = verify(8, 2, PassLevel::O2, 43);
        assert!(a[0].error.to_bits() != c[0].error.to_bits());
    }

    #[test]
    fn zero_input_has_zero_error() {
        let source = gen_cooley_tukey(&GenSpec::radix2(8)).unwrap();
        let compiled = compile_source(&source, PassLevel::O3).unwrap();
        let mut inputs = HashMap::new();
        inputs.insert("InputReal".to_string(), ComplexTensor::zeros(8, 1));
        inputs.insert("InputImg".to_string(), ComplexTensor::zeros(8, 1));
        let (result, _) = interpret(&compiled.ir, &inputs).unwrap();
        let oracle = generators::reference_dft(&ComplexTensor::zeros(8, 1));
        assert_eq!(result.max_abs_diff(&oracle), 0.0);
    }

    #[test]
    fn bench_emits_all_variants() {
        let config = BenchConfig {
            sizes: vec![4],
            repeats: 6,
            rounds: 3,
            ..BenchConfig::default()
        };
        let rows = bench(&config).unwrap();
        let variants: Vec<&str> = rows.iter().map(|r| r.variant.as_str()).collect();
        assert_eq!(
            variants,
            vec!["direct", "recursive-O0", "recursive-O2", "recursive-O3"]
        );
        for row in &rows {
            assert!(row.mean_s >= 0.0 && row.flops > 0);
        }
        let csv = bench_csv(&rows);
        assert!(csv.starts_with(BENCH_CSV_HEADER));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn bench_aot_mode_runs() {
        let config = BenchConfig {
            sizes: vec![4],
            mode: ExecMode::Aot,
            repeats: 4,
            rounds: 2,
            ..BenchConfig::default()
        };
        let rows = bench(&config).unwrap();
        assert_eq!(rows.len(), 4);
    }
}
