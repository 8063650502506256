//! Statement-tree analysis helpers shared by the passes.

use std::collections::{HashMap, HashSet};

use crate::loop_ir::{BufId, LoopVarId, RegId, Stmt, ValueExpr};

/// Number of assignments to `reg` anywhere in the tree.
pub fn count_assigns(stmts: &[Stmt], reg: RegId) -> usize {
    let mut n = 0;
    walk(stmts, &mut |stmt| {
        if let Stmt::Assign { dst, .. } = stmt {
            if *dst == reg {
                n += 1;
            }
        }
    });
    n
}

/// Number of reads of `reg` (arithmetic operands and store values).
pub fn count_reads(stmts: &[Stmt], reg: RegId) -> usize {
    let mut n = 0;
    walk(stmts, &mut |stmt| match stmt {
        Stmt::Assign { value, .. } => match value {
            ValueExpr::Add(a, b) | ValueExpr::Mul(a, b) => {
                n += usize::from(*a == reg) + usize::from(*b == reg);
            }
            _ => {}
        },
        Stmt::Store { value, .. } => {
            n += usize::from(*value == reg);
        }
        _ => {}
    });
    n
}

/// True when any statement in the tree stores to `buf`.
pub fn stores_to_buffer(stmts: &[Stmt], buf: BufId) -> bool {
    let mut found = false;
    walk(stmts, &mut |stmt| {
        if let Stmt::Store { buf: b, .. } = stmt {
            found |= *b == buf;
        }
    });
    found
}

/// Number of loads from `buf` anywhere in the tree.
pub fn count_loads_from(stmts: &[Stmt], buf: BufId) -> usize {
    let mut n = 0;
    walk(stmts, &mut |stmt| {
        if let Stmt::Assign {
            value: ValueExpr::Load { buf: b, .. },
            ..
        } = stmt
        {
            n += usize::from(*b == buf);
        }
    });
    n
}

/// Registers read before any assignment in pre-order (the values a
/// statement list needs from its environment).
pub fn live_in_regs(stmts: &[Stmt]) -> HashSet<RegId> {
    let mut live = HashSet::new();
    let mut defined = HashSet::new();
    walk(stmts, &mut |stmt| match stmt {
        Stmt::Assign { dst, value } => {
            if let ValueExpr::Add(a, b) | ValueExpr::Mul(a, b) = value {
                for r in [a, b] {
                    if !defined.contains(r) {
                        live.insert(*r);
                    }
                }
            }
            defined.insert(*dst);
        }
        Stmt::Store { value, .. } => {
            if !defined.contains(value) {
                live.insert(*value);
            }
        }
        _ => {}
    });
    live
}

/// Registers assigned anywhere in the tree.
pub fn assigned_regs(stmts: &[Stmt]) -> HashSet<RegId> {
    let mut set = HashSet::new();
    walk(stmts, &mut |stmt| {
        if let Stmt::Assign { dst, .. } = stmt {
            set.insert(*dst);
        }
    });
    set
}

/// Rewrites every read of `from` into a read of `to` (definitions stay).
pub fn rename_reg_reads(stmts: &mut [Stmt], from: RegId, to: RegId) {
    walk_mut(stmts, &mut |stmt| match stmt {
        Stmt::Assign { value, .. } => {
            if let ValueExpr::Add(a, b) | ValueExpr::Mul(a, b) = value {
                for r in [a, b] {
                    if *r == from {
                        *r = to;
                    }
                }
            }
        }
        Stmt::Store { value, .. } => {
            if *value == from {
                *value = to;
            }
        }
        _ => {}
    });
}

/// Rewrites every assignment of `from` into an assignment of `to`.
pub fn rename_reg_defs(stmts: &mut [Stmt], from: RegId, to: RegId) {
    walk_mut(stmts, &mut |stmt| {
        if let Stmt::Assign { dst, .. } = stmt {
            if *dst == from {
                *dst = to;
            }
        }
    });
}

/// Substitutes induction variables in every affine index expression.
pub fn rename_loop_vars(stmts: &mut [Stmt], map: &HashMap<LoopVarId, LoopVarId>) {
    let subst = |expr: &mut crate::loop_ir::AffineExpr| {
        for (_, v) in expr.terms.iter_mut() {
            if let Some(new) = map.get(v) {
                *v = *new;
            }
        }
    };
    walk_mut(stmts, &mut |stmt| match stmt {
        Stmt::Assign {
            value: ValueExpr::Load { row, col, .. },
            ..
        } => {
            subst(row);
            subst(col);
        }
        Stmt::Store { row, col, .. } => {
            subst(row);
            subst(col);
        }
        _ => {}
    });
}

fn walk(stmts: &[Stmt], f: &mut impl FnMut(&Stmt)) {
    for stmt in stmts {
        f(stmt);
        if let Stmt::For(l) = stmt {
            walk(&l.body, f);
        }
    }
}

fn walk_mut(stmts: &mut [Stmt], f: &mut impl FnMut(&mut Stmt)) {
    for stmt in stmts {
        f(stmt);
        if let Stmt::For(l) = stmt {
            walk_mut(&mut l.body, f);
        }
    }
}

/// Removes a buffer from the IR, shifting later buffer ids down by one.
/// The caller guarantees no statement references it any more.
pub fn remove_buffer(ir: &mut crate::loop_ir::LoopIr, buf: BufId) {
    debug_assert_eq!(count_loads_from(&ir.body, buf), 0);
    debug_assert!(!stores_to_buffer(&ir.body, buf));
    ir.buffers.remove(buf.0 as usize);
    let remap = |b: &mut BufId| {
        debug_assert_ne!(*b, buf);
        if b.0 > buf.0 {
            b.0 -= 1;
        }
    };
    walk_mut(&mut ir.body, &mut |stmt| match stmt {
        Stmt::Alloc(b) | Stmt::Dealloc(b) => remap(b),
        Stmt::Store { buf: b, .. } => remap(b),
        Stmt::Assign {
            value: ValueExpr::Load { buf: b, .. },
            ..
        } => remap(b),
        _ => {}
    });
    if let Some(out) = &mut ir.output {
        remap(out);
    }
}
