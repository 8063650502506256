//! Property tests for the lexer, parser and AST dump.

use fftc::frontend::{dump_ast, parse_expr_source, parse_source, tokenize, TokenKind};
use proptest::prelude::*;

/// Strategy for primary-expression source strings.
fn primary() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z][a-z0-9]{0,5}".prop_map(|s| s),
        (1usize..=9).prop_map(|n| format!("DFT({n})")),
        (1usize..=9).prop_map(|n| format!("I({n})")),
        (1usize..=4).prop_map(|k| format!("twiddle({}, {k})", k * 2)),
        (1usize..=4).prop_map(|k| format!("Permute({}, {k})", k * 3)),
        (0..100i64).prop_map(|n| n.to_string()),
        proptest::collection::vec(-99..99i64, 1..4).prop_map(|cells| {
            let rendered: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
            format!("[[{}]]", rendered.join(", "))
        }),
    ]
}

fn matrix_op() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("⊗"), Just("·"), Just("kron"), Just(".")]
}

proptest! {
    /// a op b op c parses exactly like a op (b op c) for the matrix ops.
    #[test]
    fn right_associativity(
        a in primary(),
        b in primary(),
        c in primary(),
        op1 in matrix_op(),
        op2 in matrix_op(),
    ) {
        let chained = parse_expr_source(&format!("{a} {op1} {b} {op2} {c}")).unwrap();
        let grouped = parse_expr_source(&format!("{a} {op1} ({b} {op2} {c})")).unwrap();
        prop_assert_eq!(&chained, &grouped);

        let left = parse_expr_source(&format!("({a} {op1} {b}) {op2} {c}")).unwrap();
        prop_assert_ne!(&chained, &left);
    }

    /// Longer chains nest rightward as well.
    #[test]
    fn chains_nest_rightward(operands in proptest::collection::vec(primary(), 3..6)) {
        let chained = operands.join(" · ");
        let mut grouped = operands.last().unwrap().clone();
        for operand in operands.iter().rev().skip(1) {
            grouped = format!("{operand} · ({grouped})");
        }
        let a = parse_expr_source(&chained).unwrap();
        let b = parse_expr_source(&grouped).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Parsing the dump reproduces the same structure.
    #[test]
    fn dump_round_trips(
        exprs in proptest::collection::vec(
            (primary(), matrix_op(), primary(), matrix_op(), primary()),
            1..4
        )
    ) {
        let mut source = String::new();
        for (index, (a, op1, b, op2, c)) in exprs.iter().enumerate() {
            source.push_str(&format!("var v{index} = {a} {op1} {b} {op2} {c};\n"));
        }
        let decls = parse_source(&source).unwrap();
        let dumped = dump_ast(&decls);
        let reparsed = parse_source(&dumped).unwrap();
        prop_assert_eq!(&decls, &reparsed);
        // The dump is canonical: dumping again is a fixpoint.
        let dumped_again = dump_ast(&reparsed);
        prop_assert_eq!(dumped, dumped_again);
    }

    /// Lexeme concatenation reproduces the source with whitespace removed
    /// (no comments in these inputs).
    #[test]
    fn lexemes_cover_source(
        a in primary(),
        b in primary(),
        op in matrix_op(),
    ) {
        let source = format!("var x = {a} {op} {b};");
        let tokens = tokenize(&source).unwrap();
        prop_assert_eq!(tokens.last().unwrap().kind, TokenKind::Eoi);
        let joined: String = tokens.iter().map(|t| t.lexeme.as_str()).collect();
        let stripped: String = source.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(joined, stripped);
        // Every token except end-of-input has a non-empty lexeme.
        for token in &tokens[..tokens.len() - 1] {
            prop_assert!(!token.lexeme.is_empty());
        }
    }
}

#[test]
fn parenthesization_overrides_associativity() {
    let flat = parse_expr_source("a · b · c").unwrap();
    let left = parse_expr_source("(a · b) · c").unwrap();
    assert_ne!(flat, left);
}
