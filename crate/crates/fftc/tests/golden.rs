//! Golden-file tests pinning the textual dump formats and the CSV schema.

use fftc::compile::compile_source;
use fftc::fft_ir::{build_ir, dump_ir, shapes::infer_shapes};
use fftc::frontend::{dump_ast, parse_source};
use fftc::harness::BENCH_CSV_HEADER;
use fftc::loop_ir::dump_loop_ir;
use fftc::passes::PassLevel;

fn golden(name: &str) -> String {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("missing golden {path}: {e}"))
}

fn sample_fft4() -> String {
    let path = format!("{}/../../samples/fft4.fftc", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("sample program")
}

#[test]
fn ast_dump_matches_golden() {
    let decls = parse_source(&sample_fft4()).unwrap();
    assert_eq!(dump_ast(&decls), golden("fft4_ast.txt"));
}

#[test]
fn ast_dump_header_format() {
    let decls = parse_source("var x = [[1]];").unwrap();
    let dump = dump_ast(&decls);
    assert!(
        dump.contains("VarDecl x = Literal<1x1>[[1]]"),
        "unexpected dump: {dump}"
    );
}

#[test]
fn fft_ir_dump_matches_golden() {
    let decls = parse_source(&sample_fft4()).unwrap();
    let mut program = build_ir(&decls).unwrap();
    infer_shapes(&mut program).unwrap();
    assert_eq!(dump_ir(&program), golden("fft4_fft_ir.txt"));
}

#[test]
fn loop_ir_dump_matches_golden_o0() {
    let compiled = compile_source(&sample_fft4(), PassLevel::O0).unwrap();
    assert_eq!(dump_loop_ir(&compiled.ir), golden("fft4_loop_ir_o0.txt"));
}

#[test]
fn matvec_loop_ir_matches_golden() {
    let source = "var x <4, 1> = [[1], [2], [3], [4]];\nvar y = DFT(4) · x;\n";
    let compiled = compile_source(source, PassLevel::O0).unwrap();
    assert_eq!(dump_loop_ir(&compiled.ir), golden("matvec_loop_ir_o0.txt"));
}

#[test]
fn csv_schema_is_stable() {
    assert_eq!(
        BENCH_CSV_HEADER,
        "size,variant,level,mode,mean_s,median_s,stddev_s,flops,loads,stores"
    );
}
