//! Scalar replacement of redundant buffer traffic.
//!
//! Two rewrites, both restricted to patterns whose legality is decidable
//! from affine index equality:
//!
//! 1. Accumulation: a store of a constant-valued register to cell `e`
//!    immediately followed by a loop that reloads `e`, combines it and
//!    stores back to `e` each iteration (the classic matrix-product inner
//!    loop). The cell becomes a loop-carried register with a single store
//!    after the loop.
//! 2. Store-to-load forwarding: within a straight-line statement run, a
//!    load from the exact cell just stored reuses the stored register,
//!    provided no other store to that buffer intervenes.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::loop_ir::{AffineExpr, BufId, LoopIr, RegId, Stmt, ValueExpr};

use super::util;

/// The constant a register carries when its single assignment in the
/// whole program is a `Const`.
fn unique_const_value(body: &[Stmt], reg: RegId) -> Option<Complex64> {
    fn walk(stmts: &[Stmt], reg: RegId, count: &mut usize, found: &mut Option<Complex64>) {
        for stmt in stmts {
            match stmt {
                Stmt::Assign { dst, value } if *dst == reg => {
                    *count += 1;
                    *found = match value {
                        ValueExpr::Const(z) => Some(*z),
                        _ => None,
                    };
                }
                Stmt::For(l) => walk(&l.body, reg, count, found),
                _ => {}
            }
        }
    }
    let mut found = None;
    let mut count = 0;
    walk(body, reg, &mut count, &mut found);
    if count == 1 {
        found
    } else {
        None
    }
}

struct AccPattern {
    /// Position of the initializing store in the enclosing body.
    store_pos: usize,
    load_reg: RegId,
    load_pos: usize,
    update_reg: RegId,
    update_pos: usize,
    init_value: Complex64,
    buf: BufId,
    row: AffineExpr,
    col: AffineExpr,
}

/// Matches `store buf[e] = r_init; for k { ... r = load buf[e] ...
/// store buf[e] = r_new }` with `e` independent of `k` and no other
/// traffic on `buf` inside the loop.
fn match_accumulator(ir: &LoopIr, body: &[Stmt], store_pos: usize) -> Option<AccPattern> {
    let Stmt::Store {
        buf,
        row,
        col,
        value: init_reg,
    } = &body[store_pos]
    else {
        return None;
    };
    let Some(Stmt::For(l)) = body.get(store_pos + 1) else {
        return None;
    };
    if row.uses_var(l.var) || col.uses_var(l.var) {
        return None;
    }
    if l.body.iter().any(|s| matches!(s, Stmt::For(_))) {
        return None;
    }

    let mut load: Option<(usize, RegId)> = None;
    let mut update: Option<(usize, RegId)> = None;
    for (pos, stmt) in l.body.iter().enumerate() {
        match stmt {
            Stmt::Assign {
                dst,
                value:
                    ValueExpr::Load {
                        buf: b,
                        row: r,
                        col: c,
                    },
            } if b == buf => {
                if r != row || c != col || load.is_some() {
                    return None;
                }
                load = Some((pos, *dst));
            }
            Stmt::Store {
                buf: b,
                row: r,
                col: c,
                value,
            } if b == buf => {
                if r != row || c != col || update.is_some() {
                    return None;
                }
                update = Some((pos, *value));
            }
            Stmt::Alloc(b) | Stmt::Dealloc(b) if b == buf => return None,
            _ => {}
        }
    }
    let (load_pos, load_reg) = load?;
    let (update_pos, update_reg) = update?;
    if load_pos >= update_pos || update_pos != l.body.len() - 1 || load_reg == update_reg {
        return None;
    }

    // The loaded register is local to the loop body; the updated register
    // is written once and read only by the store-back.
    if util::count_assigns(&l.body, load_reg) != 1
        || util::count_assigns(&ir.body, load_reg) != 1
    {
        return None;
    }
    if util::count_reads(&ir.body, load_reg) != util::count_reads(&l.body, load_reg) {
        return None;
    }
    if util::count_assigns(&l.body, update_reg) != 1
        || util::count_assigns(&ir.body, update_reg) != 1
        || util::count_reads(&ir.body, update_reg) != 1
    {
        return None;
    }

    // The initializer must be rematerializable: a register with a unique
    // constant definition (the zero of the reduction).
    let init_value = unique_const_value(&ir.body, *init_reg)?;

    Some(AccPattern {
        store_pos,
        load_reg,
        load_pos,
        update_reg,
        update_pos,
        init_value,
        buf: *buf,
        row: row.clone(),
        col: col.clone(),
    })
}

fn apply_accumulator(body: &mut Vec<Stmt>, pattern: AccPattern, acc: RegId) {
    {
        let Stmt::For(l) = &mut body[pattern.store_pos + 1] else {
            unreachable!("matched a loop");
        };
        l.body.remove(pattern.update_pos);
        util::rename_reg_defs(&mut l.body, pattern.update_reg, acc);
        l.body.remove(pattern.load_pos);
        util::rename_reg_reads(&mut l.body, pattern.load_reg, acc);
    }
    body[pattern.store_pos] = Stmt::Assign {
        dst: acc,
        value: ValueExpr::Const(pattern.init_value),
    };
    body.insert(
        pattern.store_pos + 2,
        Stmt::Store {
            buf: pattern.buf,
            row: pattern.row,
            col: pattern.col,
            value: acc,
        },
    );
}

/// Paths (sequences of statement indices through nested loops) of every
/// statement list, children before parents.
fn body_paths(stmts: &[Stmt], path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for (pos, stmt) in stmts.iter().enumerate() {
        if let Stmt::For(l) = stmt {
            path.push(pos);
            body_paths(&l.body, path, out);
            path.pop();
        }
    }
    out.push(path.clone());
}

fn body_at_path<'a>(body: &'a mut Vec<Stmt>, path: &[usize]) -> &'a mut Vec<Stmt> {
    let mut current = body;
    for &index in path {
        let Stmt::For(l) = &mut current[index] else {
            unreachable!("path points at loops");
        };
        current = &mut l.body;
    }
    current
}

fn body_at_path_ref<'a>(body: &'a [Stmt], path: &[usize]) -> &'a [Stmt] {
    let mut current = body;
    for &index in path {
        let Stmt::For(l) = &current[index] else {
            unreachable!("path points at loops");
        };
        current = &l.body;
    }
    current
}

/// Forwards loads that reread a cell stored earlier in the same
/// straight-line run. `outside` reports (reads, assigns) of a register
/// outside this list; only registers fully local to the list, with no
/// reads preceding the load, can be renamed away.
fn forward_in_list(outside: &dyn Fn(RegId) -> (usize, usize), body: &mut Vec<Stmt>) {
    // Tracked last store per buffer: (row, col, source reg, position).
    let mut last_store: HashMap<BufId, (AffineExpr, AffineExpr, RegId, usize)> = HashMap::new();
    let mut pos = 0;
    while pos < body.len() {
        match &body[pos] {
            Stmt::Store {
                buf,
                row,
                col,
                value,
            } => {
                last_store.insert(*buf, (row.clone(), col.clone(), *value, pos));
                pos += 1;
            }
            Stmt::For(_) | Stmt::Alloc(_) | Stmt::Dealloc(_) => {
                last_store.clear();
                pos += 1;
            }
            Stmt::Assign {
                dst,
                value: ValueExpr::Load { buf, row, col },
            } => {
                let dst = *dst;
                let candidate = last_store.get(buf).and_then(|(srow, scol, source, spos)| {
                    if srow != row || scol != col || *source == dst {
                        return None;
                    }
                    // The stored register must still hold the stored value.
                    let reassigned = body[*spos + 1..pos]
                        .iter()
                        .any(|s| matches!(s, Stmt::Assign { dst: d, .. } if *d == *source));
                    if reassigned {
                        None
                    } else {
                        Some(*source)
                    }
                });
                let forwardable = candidate.filter(|_| {
                    let (reads_out, assigns_out) = outside(dst);
                    reads_out == 0
                        && assigns_out == 0
                        && util::count_assigns(body, dst) == 1
                        && util::count_reads(&body[..pos], dst) == 0
                });
                match forwardable {
                    Some(source) => {
                        body.remove(pos);
                        util::rename_reg_reads(&mut body[pos..], dst, source);
                        // Positions in the store map shift left past `pos`.
                        for (_, _, _, spos) in last_store.values_mut() {
                            if *spos > pos {
                                *spos -= 1;
                            }
                        }
                        // Re-examine the statement now at `pos`.
                    }
                    None => pos += 1,
                }
            }
            Stmt::Assign { .. } => {
                pos += 1;
            }
        }
    }
}

/// Rewrites accumulation cells into loop-carried registers, then forwards
/// straight-line redundant loads.
pub fn pass_scalar_replacement(mut ir: LoopIr) -> LoopIr {
    // Accumulators one at a time; positions shift after each rewrite.
    loop {
        let mut found: Option<(Vec<usize>, AccPattern)> = None;
        let mut paths = Vec::new();
        body_paths(&ir.body, &mut Vec::new(), &mut paths);
        'search: for path in &paths {
            let list = body_at_path_ref(&ir.body, path);
            for pos in 0..list.len() {
                if let Some(p) = match_accumulator(&ir, list, pos) {
                    found = Some((path.clone(), p));
                    break 'search;
                }
            }
        }
        let Some((path, pattern)) = found else { break };
        let acc = RegId(ir.reg_count);
        ir.reg_count += 1;
        apply_accumulator(body_at_path(&mut ir.body, &path), pattern, acc);
    }

    // Forwarding, one list at a time, with fresh outside counts.
    let mut paths = Vec::new();
    body_paths(&ir.body, &mut Vec::new(), &mut paths);
    for path in paths {
        let whole = ir.body.clone();
        let list_snapshot = body_at_path_ref(&whole, &path).to_vec();
        // Renames stay inside the list, so these differences are stable
        // while the list is being rewritten.
        let outside = move |reg: RegId| {
            (
                util::count_reads(&whole, reg) - util::count_reads(&list_snapshot, reg),
                util::count_assigns(&whole, reg) - util::count_assigns(&list_snapshot, reg),
            )
        };
        forward_in_list(&outside, body_at_path(&mut ir.body, &path));
    }
    ir
}
