//! Command-line interface.
//!
//! Subcommands: `compile` (emit AST, FFT IR, loop IR or a plan file),
//! `run` (execute a source program or a plan), `gen` (write a recursive
//! factorized program), `verify` (random-trial comparison against the
//! direct DFT oracle) and `bench` (timing CSV for the direct and
//! recursive variants).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::compile::compile_source;
use crate::fft_ir;
use crate::frontend;
use crate::harness::{self, BenchConfig, ExecMode};
use crate::interp::{interpret, ExecStats};
use crate::loop_ir::dump_loop_ir;
use crate::passes::{PassLevel, PassTiming};
use crate::plan::{deserialize_plan, run_plan, serialize_plan, PlanMeta, PLAN_MAGIC};
use crate::proggen::{gen_cooley_tukey, GenSpec, RadixPolicy};
use crate::tensor::ComplexTensor;

#[derive(Parser)]
#[command(name = "fftc", version, about = "Compiler and runner for FFT factorization programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EmitKind {
    Ast,
    FftIr,
    LoopIr,
    Plan,
}

impl std::str::FromStr for EmitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ast" => Ok(EmitKind::Ast),
            "fft-ir" => Ok(EmitKind::FftIr),
            "loop-ir" => Ok(EmitKind::LoopIr),
            "plan" => Ok(EmitKind::Plan),
            other => Err(format!(
                "unknown emit kind `{other}` (use ast, fft-ir, loop-ir or plan)"
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile a source file and emit an intermediate form.
    Compile {
        file: PathBuf,
        /// What to emit: ast, fft-ir, loop-ir or plan.
        #[arg(long, default_value = "loop-ir")]
        emit: EmitKind,
        /// Optimization level: O0, O2 or O3.
        #[arg(long = "opt", default_value = "O0")]
        opt: PassLevel,
        /// Output file (stdout when omitted; required for --emit=plan).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile and execute a source file, or execute a plan file.
    Run {
        file: PathBuf,
        /// jit compiles and runs in one go; aot goes through a serialized
        /// plan. Plan files always run as plans.
        #[arg(long, default_value = "jit")]
        mode: ExecMode,
        /// JSON file with named inputs: {"InputReal": [[..]], ...}.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long = "opt", default_value = "O0")]
        opt: PassLevel,
        /// Print a timing and counter report as a JSON line.
        #[arg(long)]
        timing: bool,
    },
    /// Generate a recursive factorized program.
    Gen {
        #[arg(long)]
        size: usize,
        /// Fixed radix (a number) or `balanced`.
        #[arg(long, default_value = "2")]
        radix: String,
        /// Largest transform left as a direct DFT leaf.
        #[arg(long, default_value_t = 2)]
        base: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check generated programs against the direct DFT oracle.
    Verify {
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long = "opt", default_value = "O0")]
        opt: PassLevel,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the direct and recursive variants and emit CSV.
    Bench {
        /// Comma-separated transform sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long = "opt", default_value = "O0")]
        opt: PassLevel,
        #[arg(long, default_value = "jit")]
        mode: ExecMode,
        /// Total executions per variant.
        #[arg(long, default_value_t = 1000)]
        repeats: usize,
        /// Round count for the standard deviation.
        #[arg(long, default_value_t = 30)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct RunTiming<'a> {
    frontend_s: f64,
    pipeline_s: f64,
    execution_s: f64,
    passes: &'a [PassTiming],
    loads: u64,
    stores: u64,
    complex_muls: u64,
    complex_adds: u64,
    flops: u64,
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<(), String> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_source(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

/// Parses the run-input JSON: an object of 2-d number arrays keyed by
/// input name.
fn load_inputs(path: &Path) -> Result<HashMap<String, ComplexTensor>, String> {
    let text = read_source(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let object = value
        .as_object()
        .ok_or_else(|| format!("{}: expected a JSON object", path.display()))?;
    let mut inputs = HashMap::new();
    for (name, rows_value) in object {
        let rows = rows_value
            .as_array()
            .ok_or_else(|| format!("input `{name}`: expected an array of rows"))?;
        let mut parsed: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
        for row in rows {
            let cells = row
                .as_array()
                .ok_or_else(|| format!("input `{name}`: expected rows of numbers"))?;
            let mut out = Vec::with_capacity(cells.len());
            for cell in cells {
                out.push(
                    cell.as_f64()
                        .ok_or_else(|| format!("input `{name}`: non-numeric cell"))?,
                );
            }
            parsed.push(out);
        }
        if parsed.is_empty() || parsed.iter().any(|r| r.len() != parsed[0].len()) {
            return Err(format!("input `{name}`: rows must be non-empty and equal-length"));
        }
        inputs.insert(name.clone(), ComplexTensor::from_real_rows(&parsed));
    }
    Ok(inputs)
}

fn render_result(tensor: &ComplexTensor) -> String {
    let mut out = format!("result: {}x{} complex\n", tensor.rows(), tensor.cols());
    out.push_str(&tensor.to_string());
    out
}

fn cmd_compile(
    file: &Path,
    emit: EmitKind,
    opt: PassLevel,
    output: Option<&Path>,
) -> Result<(), String> {
    let source = read_source(file)?;
    match emit {
        EmitKind::Ast => {
            let decls = frontend::parse_source(&source).map_err(|e| e.to_string())?;
            write_or_print(output, &frontend::dump_ast(&decls))
        }
        EmitKind::FftIr => {
            let decls = frontend::parse_source(&source).map_err(|e| e.to_string())?;
            let mut program = fft_ir::build_ir(&decls).map_err(|e| e.to_string())?;
            let diags = fft_ir::verify(&program);
            if !diags.is_empty() {
                let rendered: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
                return Err(format!("invalid program: {}", rendered.join("; ")));
            }
            fft_ir::shapes::infer_shapes(&mut program).map_err(|e| e.to_string())?;
            write_or_print(output, &fft_ir::dump_ir(&program))
        }
        EmitKind::LoopIr => {
            let compiled = compile_source(&source, opt).map_err(|e| e.to_string())?;
            write_or_print(output, &dump_loop_ir(&compiled.ir))
        }
        EmitKind::Plan => {
            let path = output.ok_or("--emit=plan requires -o <file>")?;
            let compiled = compile_source(&source, opt).map_err(|e| e.to_string())?;
            let bytes = serialize_plan(
                &compiled.ir,
                &PlanMeta {
                    source_hash: compiled.source_hash.clone(),
                    opt_level: opt,
                },
            );
            std::fs::write(path, bytes)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
    }
}

fn cmd_run(
    file: &Path,
    mode: ExecMode,
    input: Option<&Path>,
    opt: PassLevel,
    timing: bool,
) -> Result<(), String> {
    let raw = std::fs::read(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let inputs = match input {
        Some(path) => load_inputs(path)?,
        None => HashMap::new(),
    };

    let (result, stats, frontend_s, pipeline_s, passes): (
        ComplexTensor,
        ExecStats,
        f64,
        f64,
        Vec<PassTiming>,
    );
    if raw.starts_with(PLAN_MAGIC) {
        let plan = deserialize_plan(&raw).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let (r, s) = run_plan(&plan, &inputs).map_err(|e| e.to_string())?;
        let execution = start.elapsed().as_secs_f64();
        (result, stats, frontend_s, pipeline_s, passes) = (r, s, 0.0, 0.0, Vec::new());
        print_run(&result, timing, frontend_s, pipeline_s, execution, &passes, &stats);
        return Ok(());
    }

    let source = String::from_utf8(raw)
        .map_err(|_| format!("{} is neither UTF-8 source nor a plan", file.display()))?;
    let compiled = compile_source(&source, opt).map_err(|e| e.to_string())?;

    let start = Instant::now();
    let (r, s) = match mode {
        ExecMode::Jit => interpret(&compiled.ir, &inputs).map_err(|e| e.to_string())?,
        ExecMode::Aot => {
            let bytes = serialize_plan(
                &compiled.ir,
                &PlanMeta {
                    source_hash: compiled.source_hash.clone(),
                    opt_level: opt,
                },
            );
            let plan = deserialize_plan(&bytes).map_err(|e| e.to_string())?;
            run_plan(&plan, &inputs).map_err(|e| e.to_string())?
        }
    };
    let execution = start.elapsed().as_secs_f64();
    (result, stats, frontend_s, pipeline_s, passes) = (
        r,
        s,
        compiled.frontend_seconds,
        compiled.report.total_seconds(),
        compiled.report.passes.clone(),
    );
    print_run(&result, timing, frontend_s, pipeline_s, execution, &passes, &stats);
    Ok(())
}

fn print_run(
    result: &ComplexTensor,
    timing: bool,
    frontend_s: f64,
    pipeline_s: f64,
    execution_s: f64,
    passes: &[PassTiming],
    stats: &ExecStats,
) {
    print!("{}", render_result(result));
    if timing {
        let report = RunTiming {
            frontend_s,
            pipeline_s,
            execution_s,
            passes,
            loads: stats.loads,
            stores: stats.stores,
            complex_muls: stats.complex_muls,
            complex_adds: stats.complex_adds,
            flops: stats.flops(),
        };
        println!(
            "{}",
            serde_json::to_string(&report).expect("timing report serializes")
        );
    }
}

fn cmd_gen(size: usize, radix: &str, base: usize, output: Option<&Path>) -> Result<(), String> {
    let policy = if radix == "balanced" {
        RadixPolicy::Balanced
    } else {
        let k: usize = radix
            .parse()
            .map_err(|_| format!("radix must be a number or `balanced`, got `{radix}`"))?;
        RadixPolicy::Fixed(k)
    };
    let source = gen_cooley_tukey(&GenSpec {
        size,
        radix: policy,
        base,
    })
    .map_err(|e| e.to_string())?;
    write_or_print(output, &source)
}

fn cmd_verify(size: usize, trials: usize, opt: PassLevel, seed: u64) -> Result<bool, String> {
    let reports = harness::verify(size, trials, opt, seed);
    let mut all_pass = true;
    for report in &reports {
        let status = if report.pass { "pass" } else { "FAIL" };
        match &report.detail {
            Some(detail) => println!(
                "size={} trial={} level={} {status}: {detail}",
                report.size, report.trial, report.level
            ),
            None => println!(
                "size={} trial={} level={} error={:.3e} max_abs={:.3e} {status}",
                report.size, report.trial, report.level, report.error, report.max_abs_diff
            ),
        }
        all_pass &= report.pass;
    }
    println!(
        "{}/{} trials below {:.0e}",
        reports.iter().filter(|r| r.pass).count(),
        reports.len(),
        harness::VERIFY_THRESHOLD
    );
    Ok(all_pass)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    sizes: Vec<usize>,
    opt: PassLevel,
    mode: ExecMode,
    repeats: usize,
    rounds: usize,
    seed: u64,
    csv: Option<&Path>,
) -> Result<(), String> {
    let config = BenchConfig {
        sizes,
        level: opt,
        mode,
        repeats,
        rounds,
        seed,
    };
    let rows = harness::bench(&config).map_err(|e| e.to_string())?;
    write_or_print(csv, &harness::bench_csv(&rows))
}

/// Runs the CLI; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Compile {
            file,
            emit,
            opt,
            output,
        } => cmd_compile(&file, emit, opt, output.as_deref()).map(|()| 0),
        Command::Run {
            file,
            mode,
            input,
            opt,
            timing,
        } => cmd_run(&file, mode, input.as_deref(), opt, timing).map(|()| 0),
        Command::Gen {
            size,
            radix,
            base,
            output,
        } => cmd_gen(size, &radix, base, output.as_deref()).map(|()| 0),
        Command::Verify {
            size,
            trials,
            opt,
            seed,
        } => cmd_verify(size, trials, opt, seed).map(|ok| if ok { 0 } else { 1 }),
        Command::Bench {
            sizes,
            opt,
            mode,
            repeats,
            rounds,
            seed,
            csv,
        } => cmd_bench(sizes, opt, mode, repeats, rounds, seed, csv.as_deref()).map(|()| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}
