//! Loop-invariant code motion.
//!
//! A register assignment sitting directly in a loop body hoists one level
//! when its value cannot change across iterations: constants always,
//! loads whose indices do not use the loop variable as long as nothing in
//! the loop stores to that buffer, and arithmetic whose operands are not
//! assigned inside the loop. The destination must be single-assignment in
//! the body and not read before its assignment, and empty loops are left
//! alone. Applied repeatedly until nothing moves, so invariants bubble
//! out of deep nests one level at a time.

use crate::loop_ir::{LoopIr, Stmt, ValueExpr};

use super::util;

/// True when `reg` is read by any of `stmts` (recursively).
fn read_anywhere(stmts: &[Stmt], reg: crate::loop_ir::RegId) -> bool {
    util::count_reads(stmts, reg) > 0
}

fn licm_list(stmts: Vec<Stmt>, changed: &mut bool) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for stmt in stmts {
        match stmt {
            Stmt::For(mut l) => {
                l.body = licm_list(l.body, changed);
                if l.upper > l.lower {
                    let mut kept = Vec::with_capacity(l.body.len());
                    let body_snapshot = l.body.clone();
                    let mut position = 0;
                    for s in l.body {
                        let hoistable = match &s {
                            Stmt::Assign { dst, value } => {
                                is_invariant_at(&body_snapshot, &l.var, value)
                                    && util::count_assigns(&body_snapshot, *dst) == 1
                                    && !read_anywhere(&body_snapshot[..position], *dst)
                            }
                            _ => false,
                        };
                        if hoistable {
                            out.push(s);
                            *changed = true;
                        } else {
                            kept.push(s);
                        }
                        position += 1;
                    }
                    l.body = kept;
                }
                out.push(Stmt::For(l));
            }
            other => out.push(other),
        }
    }
    out
}

fn is_invariant_at(
    body: &[Stmt],
    var: &crate::loop_ir::LoopVarId,
    value: &ValueExpr,
) -> bool {
    match value {
        ValueExpr::Const(_) => true,
        ValueExpr::Load { buf, row, col } => {
            !row.uses_var(*var) && !col.uses_var(*var) && !util::stores_to_buffer(body, *buf)
        }
        ValueExpr::Add(a, b) | ValueExpr::Mul(a, b) => {
            util::count_assigns(body, *a) == 0 && util::count_assigns(body, *b) == 0
        }
    }
}

/// Hoists invariant assignments one level, repeatedly, until a fixpoint.
pub fn pass_licm(mut ir: LoopIr) -> LoopIr {
    loop {
        let mut changed = false;
        ir.body = licm_list(std::mem::take(&mut ir.body), &mut changed);
        if !changed {
            return ir;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_ir::{
        verify_loop_ir, AffineExpr, BufId, Buffer, BufferInit, Loop, LoopVarId, RegId,
    };
    use num_complex::Complex64;

    /// for i { for k { r0 = load a[i, 0]; r1 = load a[k, 0];
    ///                 r2 = mul r0, r1; store out[i, k] = r2 } }
    fn nest_with_invariant_load() -> LoopIr {
        let a = BufId(0);
        let out = BufId(1);
        let (i, k) = (LoopVarId(0), LoopVarId(1));
        let (r0, r1, r2) = (RegId(0), RegId(1), RegId(2));
        let inner = Loop {
            var: k,
            lower: 0,
            upper: 3,
            body: vec![
                Stmt::Assign {
                    dst: r0,
                    value: ValueExpr::Load {
                        buf: a,
                        row: AffineExpr::var(i),
                        col: AffineExpr::constant(0),
                    },
                },
                Stmt::Assign {
                    dst: r1,
                    value: ValueExpr::Load {
                        buf: a,
                        row: AffineExpr::var(k),
                        col: AffineExpr::constant(0),
                    },
                },
                Stmt::Assign {
                    dst: r2,
                    value: ValueExpr::Mul(r0, r1),
                },
                Stmt::Store {
                    buf: out,
                    row: AffineExpr::var(i),
                    col: AffineExpr::var(k),
                    value: r2,
                },
            ],
        };
        LoopIr {
            buffers: vec![
                Buffer {
                    name: "%arg0".into(),
                    rows: 3,
                    cols: 1,
                    init: BufferInit::Input {
                        name: "a".into(),
                        default: vec![
                            Complex64::new(1.0, 2.0),
                            Complex64::new(3.0, -1.0),
                            Complex64::new(-2.0, 0.5),
                        ],
                    },
                },
                Buffer {
                    name: "%buf1".into(),
                    rows: 3,
                    cols: 3,
                    init: BufferInit::Temp,
                },
            ],
            body: vec![
                Stmt::Alloc(out),
                Stmt::For(Loop {
                    var: i,
                    lower: 0,
                    upper: 3,
                    body: vec![Stmt::For(inner)],
                }),
            ],
            output: Some(out),
            reg_count: 3,
            var_count: 2,
        }
    }

    #[test]
    fn hoists_index_independent_load() {
        let ir = nest_with_invariant_load();
        let optimized = pass_licm(ir.clone());
        assert!(verify_loop_ir(&optimized).is_empty());

        // r0's load no longer sits in the innermost body.
        let outer = optimized
            .body
            .iter()
            .find_map(|s| match s {
                Stmt::For(l) => Some(l),
                _ => None,
            })
            .unwrap();
        let hoisted_here = outer
            .body
            .iter()
            .any(|s| matches!(s, Stmt::Assign { dst, .. } if *dst == RegId(0)));
        assert!(hoisted_here, "{outer:?}");

        // Identical output, strictly fewer dynamic loads.
        let (a, sa) = crate::interp::interpret(&ir, &Default::default()).unwrap();
        let (b, sb) = crate::interp::interpret(&optimized, &Default::default()).unwrap();
        assert!(a.bitwise_eq(&b));
        assert_eq!(sa.loads, 18);
        assert_eq!(sb.loads, 12);
    }

    #[test]
    fn load_using_loop_var_stays() {
        let ir = nest_with_invariant_load();
        let optimized = pass_licm(ir);
        let outer = optimized
            .body
            .iter()
            .find_map(|s| match s {
                Stmt::For(l) => Some(l),
                _ => None,
            })
            .unwrap();
        let inner = outer
            .body
            .iter()
            .find_map(|s| match s {
                Stmt::For(l) => Some(l),
                _ => None,
            })
            .unwrap();
        // r1 depends on k and must remain in the k body.
        assert!(inner
            .body
            .iter()
            .any(|s| matches!(s, Stmt::Assign { dst, .. } if *dst == RegId(1))));
    }

    #[test]
    fn load_with_store_conflict_is_not_hoisted() {
        // for i { for k { r0 = load out[i, 0]; store out[i, 0] = r0 } }:
        // the load index ignores k but the loop stores to the buffer.
        let out = BufId(0);
        let (i, k) = (LoopVarId(0), LoopVarId(1));
        let r0 = RegId(0);
        let r1 = RegId(1);
        let ir = LoopIr {
            buffers: vec![Buffer {
                name: "%buf0".into(),
                rows: 2,
                cols: 1,
                init: BufferInit::Temp,
            }],
            body: vec![
                Stmt::Alloc(out),
                Stmt::Assign {
                    dst: r1,
                    value: ValueExpr::Const(Complex64::new(1.0, 0.0)),
                },
                Stmt::Store {
                    buf: out,
                    row: AffineExpr::constant(0),
                    col: AffineExpr::constant(0),
                    value: r1,
                },
                Stmt::Store {
                    buf: out,
                    row: AffineExpr::constant(1),
                    col: AffineExpr::constant(0),
                    value: r1,
                },
                Stmt::For(Loop {
                    var: i,
                    lower: 0,
                    upper: 2,
                    body: vec![Stmt::For(Loop {
                        var: k,
                        lower: 0,
                        upper: 2,
                        body: vec![
                            Stmt::Assign {
                                dst: r0,
                                value: ValueExpr::Load {
                                    buf: out,
                                    row: AffineExpr::var(i),
                                    col: AffineExpr::constant(0),
                                },
                            },
                            Stmt::Store {
                                buf: out,
                                row: AffineExpr::var(i),
                                col: AffineExpr::constant(0),
                                value: r0,
                            },
                        ],
                    })],
                }),
            ],
            output: Some(out),
            reg_count: 2,
            var_count: 2,
        };
        let optimized = pass_licm(ir.clone());
        // Nothing may move: the k-loop stores to the loaded buffer.
        assert_eq!(optimized, ir);
    }
}
