//! Loop fusion.
//!
//! Two top-level loop nests merge when they are adjacent (allocation
//! markers in between are allowed), perfect, have identical bounds layer
//! by layer, and the second one reads the first one's stored cell through
//! the identity index mapping — a 1:1 store-to-load dependency. The merged
//! nest runs both bodies per iteration; forwarded loads read the
//! producer's register directly, and an intermediate buffer that ends up
//! unread is deleted. Anything else is left untouched.

use std::collections::HashMap;

use crate::loop_ir::{AffineExpr, BufId, Loop, LoopIr, LoopVarId, RegId, Stmt, ValueExpr};

use super::util;

/// A perfect nest flattened into (var, lower, upper) layers plus its
/// straight-line innermost body.
struct Layers {
    dims: Vec<(LoopVarId, i64, i64)>,
    inner: Vec<Stmt>,
}

fn layers_of(l: &Loop) -> Option<Layers> {
    let mut dims = vec![(l.var, l.lower, l.upper)];
    let mut body = &l.body;
    loop {
        let has_for = body.iter().any(|s| matches!(s, Stmt::For(_)));
        if !has_for {
            return Some(Layers {
                dims,
                inner: body.clone(),
            });
        }
        // A perfect layer is exactly one nested loop.
        if body.len() != 1 {
            return None;
        }
        match &body[0] {
            Stmt::For(next) => {
                dims.push((next.var, next.lower, next.upper));
                body = &next.body;
            }
            _ => return None,
        }
    }
}

fn rebuild(dims: &[(LoopVarId, i64, i64)], inner: Vec<Stmt>) -> Stmt {
    let mut body = inner;
    for &(var, lower, upper) in dims.iter().rev() {
        body = vec![Stmt::For(Loop {
            var,
            lower,
            upper,
            body,
        })];
    }
    body.into_iter().next().expect("at least one layer")
}

/// The producer's stores keyed by buffer, or None when any buffer is
/// stored more than once per iteration.
fn single_stores(inner: &[Stmt]) -> Option<HashMap<BufId, (AffineExpr, AffineExpr, RegId)>> {
    let mut map = HashMap::new();
    for stmt in inner {
        if let Stmt::Store {
            buf,
            row,
            col,
            value,
        } = stmt
        {
            if map
                .insert(*buf, (row.clone(), col.clone(), *value))
                .is_some()
            {
                return None;
            }
        }
    }
    Some(map)
}

/// Attempts to fuse producer `a` with consumer `b`. `reads_elsewhere`
/// counts register reads in the rest of the program; a load is forwarded
/// only when its target register is local to the consumer body.
fn try_fuse(
    a: &Loop,
    b: &Loop,
    reads_elsewhere: &dyn Fn(RegId) -> usize,
) -> Option<(Stmt, Vec<BufId>)> {
    let la = layers_of(a)?;
    let lb = layers_of(b)?;
    if la.dims.len() != lb.dims.len() {
        return None;
    }
    for (&(_, al, au), &(_, bl, bu)) in la.dims.iter().zip(&lb.dims) {
        if (al, au) != (bl, bu) {
            return None;
        }
    }

    // Positional variable renaming b -> a.
    let var_map: HashMap<_, _> = lb
        .dims
        .iter()
        .zip(&la.dims)
        .map(|(&(bv, _, _), &(av, _, _))| (bv, av))
        .collect();
    let mut b_inner = lb.inner;
    util::rename_loop_vars(&mut b_inner, &var_map);

    // Register interference between the two bodies.
    let a_defs = util::assigned_regs(&la.inner);
    let b_defs = util::assigned_regs(&b_inner);
    if !a_defs.is_disjoint(&b_defs) {
        return None;
    }
    if util::live_in_regs(&b_inner).intersection(&a_defs).count() > 0 {
        return None;
    }
    if util::live_in_regs(&la.inner).intersection(&b_defs).count() > 0 {
        return None;
    }

    let a_stores = single_stores(&la.inner)?;

    // The consumer must not write anything the producer touches.
    for stmt in &b_inner {
        if let Stmt::Store { buf, .. } = stmt {
            if a_stores.contains_key(buf) || util::count_loads_from(&la.inner, *buf) > 0 {
                return None;
            }
        }
    }

    // Every load the consumer takes from a producer-stored buffer must hit
    // exactly the stored cell.
    for stmt in &b_inner {
        if let Stmt::Assign {
            value: ValueExpr::Load { buf, row, col },
            ..
        } = stmt
        {
            if let Some((srow, scol, _)) = a_stores.get(buf) {
                if row != srow || col != scol {
                    return None;
                }
            }
        }
    }

    // Merge, forwarding matched loads to the producer's stored register.
    let mut fused = la.inner;
    let mut forwarded: Vec<BufId> = Vec::new();
    let mut rest = b_inner;
    while !rest.is_empty() {
        let stmt = rest.remove(0);
        match &stmt {
            Stmt::Assign {
                dst,
                value: ValueExpr::Load { buf, .. },
            } if a_stores.contains_key(buf) => {
                let (_, _, source) = &a_stores[buf];
                // Safe only when the register is written nowhere else and
                // read only after this point in the merged body.
                if reads_elsewhere(*dst) == 0
                    && util::count_assigns(&rest, *dst) == 0
                    && util::count_reads(&fused, *dst) == 0
                {
                    util::rename_reg_reads(&mut rest, *dst, *source);
                    forwarded.push(*buf);
                    continue;
                }
                fused.push(stmt);
            }
            _ => fused.push(stmt),
        }
    }

    Some((rebuild(&la.dims, fused), forwarded))
}

/// Drops every store to `buf` and its alloc/dealloc markers.
fn strip_buffer_stmts(stmts: &mut Vec<Stmt>, buf: BufId) {
    stmts.retain_mut(|stmt| match stmt {
        Stmt::Alloc(b) | Stmt::Dealloc(b) => *b != buf,
        Stmt::Store { buf: b, .. } => *b != buf,
        Stmt::For(l) => {
            strip_buffer_stmts(&mut l.body, buf);
            true
        }
        _ => true,
    });
}

/// Merges adjacent producer-consumer nests in the top-level statement
/// list, then deletes intermediate buffers whose loads were all forwarded.
pub fn pass_loop_fusion(mut ir: LoopIr) -> LoopIr {
    let mut forwarded: Vec<BufId> = Vec::new();
    let mut work = std::mem::take(&mut ir.body);
    let mut out: Vec<Stmt> = Vec::with_capacity(work.len());

    'outer: while !work.is_empty() {
        let stmt = work.remove(0);
        let Stmt::For(a) = stmt else {
            out.push(stmt);
            continue;
        };

        // Look ahead for the next loop, stepping only over markers.
        let mut marker_indices = Vec::new();
        let mut index = 0;
        while index < work.len() {
            match &work[index] {
                Stmt::Alloc(_) | Stmt::Dealloc(_) => {
                    marker_indices.push(index);
                    index += 1;
                }
                Stmt::For(b) => {
                    // Register reads everywhere except the two bodies:
                    // already-emitted statements, the markers in between
                    // and everything after b.
                    let mut elsewhere: Vec<Stmt> = out.clone();
                    elsewhere.extend(work[..index].iter().cloned());
                    elsewhere.extend(work[index + 1..].iter().cloned());
                    let reads_elsewhere =
                        |reg: RegId| util::count_reads(&elsewhere, reg);

                    if let Some((fused, bufs)) = try_fuse(&a, b, &reads_elsewhere) {
                        forwarded.extend(bufs);
                        // Allocs move before the fused nest, deallocs after.
                        let mut deallocs = Vec::new();
                        for &m in marker_indices.iter().rev() {
                            match work.remove(m) {
                                alloc @ Stmt::Alloc(_) => out.push(alloc),
                                dealloc @ Stmt::Dealloc(_) => deallocs.push(dealloc),
                                _ => unreachable!(),
                            }
                        }
                        work.remove(index - marker_indices.len());
                        for dealloc in deallocs {
                            work.insert(0, dealloc);
                        }
                        // Retry the fused nest against what follows.
                        work.insert(0, fused);
                        continue 'outer;
                    }
                    break;
                }
                _ => break,
            }
        }
        out.push(Stmt::For(a));
    }
    ir.body = out;

    forwarded.sort();
    forwarded.dedup();
    for buf in forwarded.into_iter().rev() {
        if Some(buf) == ir.output {
            continue;
        }
        if !matches!(ir.buffer(buf).init, crate::loop_ir::BufferInit::Temp) {
            continue;
        }
        if util::count_loads_from(&ir.body, buf) == 0 {
            strip_buffer_stmts(&mut ir.body, buf);
            util::remove_buffer(&mut ir, buf);
        }
    }
    ir
}
