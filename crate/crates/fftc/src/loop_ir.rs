//! Loop-nest IR: counted loops over complex buffers with affine indexing.
//!
//! This is the lowering target of the FFT-algebra IR. Programs are a list
//! of statements — allocation markers, counted `for` loops, register
//! assignments and buffer stores — operating on mutable scalar registers
//! and rank-2 complex buffers. Index expressions are affine: integer
//! linear combinations of enclosing induction variables plus a constant,
//! which is what makes the passes' legality checks decidable.

use std::fmt::Write as _;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BufId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopVarId(pub u32);

/// Integer-linear expression over induction variables: sum of
/// `coeff * var` terms plus a constant. Kept in canonical form (terms
/// sorted by variable, no zero coefficients) so structural equality is
/// meaningful.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineExpr {
    pub terms: Vec<(i64, LoopVarId)>,
    pub constant: i64,
}

impl AffineExpr {
    pub fn constant(value: i64) -> Self {
        AffineExpr {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn var(var: LoopVarId) -> Self {
        AffineExpr {
            terms: vec![(1, var)],
            constant: 0,
        }
    }

    /// `coeff * var + rest`, normalized.
    pub fn from_terms(terms: Vec<(i64, LoopVarId)>, constant: i64) -> Self {
        let mut expr = AffineExpr { terms, constant };
        expr.normalize();
        expr
    }

    fn normalize(&mut self) {
        self.terms.sort_by_key(|&(_, v)| v);
        let mut merged: Vec<(i64, LoopVarId)> = Vec::with_capacity(self.terms.len());
        for &(c, v) in &self.terms {
            match merged.last_mut() {
                Some((mc, mv)) if *mv == v => *mc += c,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|&(c, _)| c != 0);
        self.terms = merged;
    }

    pub fn uses_var(&self, var: LoopVarId) -> bool {
        self.terms.iter().any(|&(_, v)| v == var)
    }

    pub fn eval(&self, vars: &[i64]) -> i64 {
        let mut acc = self.constant;
        for &(c, v) in &self.terms {
            acc += c * vars[v.0 as usize];
        }
        acc
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return self.constant.to_string();
        }
        let mut out = String::new();
        for (index, &(c, v)) in self.terms.iter().enumerate() {
            if index > 0 {
                out.push_str(" + ");
            }
            if c == 1 {
                let _ = write!(out, "%i{}", v.0);
            } else {
                let _ = write!(out, "%i{} * {}", v.0, c);
            }
        }
        if self.constant != 0 {
            let _ = write!(out, " + {}", self.constant);
        }
        out
    }
}

/// How a buffer obtains its contents.
#[derive(Debug, Clone, PartialEq)]
pub enum BufferInit {
    /// Scratch storage written by stores.
    Temp,
    /// Compile-time materialized constant data (read-only).
    Const(Vec<Complex64>),
    /// Runtime input, replaceable by name; falls back to the baked
    /// default when no value is supplied.
    Input { name: String, default: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    /// Printable label, stable across passes (e.g. `%buf3`).
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub init: BufferInit,
}

impl Buffer {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueExpr {
    Const(Complex64),
    Load {
        buf: BufId,
        row: AffineExpr,
        col: AffineExpr,
    },
    Add(RegId, RegId),
    Mul(RegId, RegId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Alloc(BufId),
    Dealloc(BufId),
    For(Loop),
    Assign { dst: RegId, value: ValueExpr },
    Store {
        buf: BufId,
        row: AffineExpr,
        col: AffineExpr,
        value: RegId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub var: LoopVarId,
    pub lower: i64,
    pub upper: i64,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopIr {
    pub buffers: Vec<Buffer>,
    pub body: Vec<Stmt>,
    pub output: Option<BufId>,
    pub reg_count: u32,
    pub var_count: u32,
}

impl LoopIr {
    pub fn empty() -> Self {
        LoopIr {
            buffers: Vec::new(),
            body: Vec::new(),
            output: None,
            reg_count: 0,
            var_count: 0,
        }
    }

    pub fn buffer(&self, id: BufId) -> &Buffer {
        &self.buffers[id.0 as usize]
    }

    /// Names and shapes of the runtime inputs, in buffer order.
    pub fn input_descriptors(&self) -> Vec<(String, usize, usize)> {
        self.buffers
            .iter()
            .filter_map(|b| match &b.init {
                BufferInit::Input { name, .. } => Some((name.clone(), b.rows, b.cols)),
                _ => None,
            })
            .collect()
    }
}

// --- Verifier ---

struct VerifyCtx<'a> {
    ir: &'a LoopIr,
    diags: Vec<String>,
    in_scope: Vec<LoopVarId>,
    assigned: Vec<bool>,
    stored: Vec<bool>,
    allocated: Vec<bool>,
    deallocated: Vec<bool>,
}

impl VerifyCtx<'_> {
    fn check_affine(&mut self, expr: &AffineExpr, what: &str) {
        for &(_, v) in &expr.terms {
            if !self.in_scope.contains(&v) {
                self.diags
                    .push(format!("{what} references %i{} outside its loop", v.0));
            }
        }
    }

    fn check_buf_access(&mut self, buf: BufId, is_store: bool) {
        let Some(buffer) = self.ir.buffers.get(buf.0 as usize) else {
            self.diags.push(format!("access to unknown buffer {}", buf.0));
            return;
        };
        match &buffer.init {
            BufferInit::Const(_) => {
                if is_store {
                    self.diags
                        .push(format!("store to constant buffer {}", buffer.name));
                }
            }
            BufferInit::Input { .. } => {
                if is_store {
                    self.diags
                        .push(format!("store to input buffer {}", buffer.name));
                }
            }
            BufferInit::Temp => {
                let idx = buf.0 as usize;
                if !self.allocated[idx] {
                    self.diags
                        .push(format!("access to {} before alloc", buffer.name));
                }
                if self.deallocated[idx] {
                    self.diags
                        .push(format!("access to {} after dealloc", buffer.name));
                }
                if !is_store && !self.stored[idx] {
                    self.diags.push(format!(
                        "load from {} before any store",
                        buffer.name
                    ));
                }
            }
        }
    }

    fn check_reg_read(&mut self, reg: RegId) {
        if reg.0 >= self.ir.reg_count {
            self.diags.push(format!("register %r{} out of range", reg.0));
        } else if !self.assigned[reg.0 as usize] {
            self.diags
                .push(format!("register %r{} read before assignment", reg.0));
        }
    }

    fn walk(&mut self, stmts: &[Stmt]) {
        for stmt in stmts {
            match stmt {
                Stmt::Alloc(buf) => {
                    let idx = buf.0 as usize;
                    if idx >= self.ir.buffers.len() {
                        self.diags.push(format!("alloc of unknown buffer {}", buf.0));
                        continue;
                    }
                    if !matches!(self.ir.buffers[idx].init, BufferInit::Temp) {
                        self.diags.push(format!(
                            "alloc marker on non-temp buffer {}",
                            self.ir.buffers[idx].name
                        ));
                    }
                    if self.allocated[idx] {
                        self.diags.push(format!(
                            "duplicate alloc of {}",
                            self.ir.buffers[idx].name
                        ));
                    }
                    self.allocated[idx] = true;
                }
                Stmt::Dealloc(buf) => {
                    let idx = buf.0 as usize;
                    if idx >= self.ir.buffers.len() {
                        self.diags
                            .push(format!("dealloc of unknown buffer {}", buf.0));
                        continue;
                    }
                    if !self.allocated[idx] {
                        self.diags.push(format!(
                            "dealloc of never-allocated {}",
                            self.ir.buffers[idx].name
                        ));
                    }
                    self.deallocated[idx] = true;
                }
                Stmt::For(l) => {
                    if self.in_scope.contains(&l.var) {
                        self.diags
                            .push(format!("induction variable %i{} shadows itself", l.var.0));
                    }
                    if l.var.0 >= self.ir.var_count {
                        self.diags
                            .push(format!("induction variable %i{} out of range", l.var.0));
                    }
                    self.in_scope.push(l.var);
                    self.walk(&l.body);
                    self.in_scope.pop();
                }
                Stmt::Assign { dst, value } => {
                    match value {
                        ValueExpr::Const(_) => {}
                        ValueExpr::Load { buf, row, col } => {
                            self.check_affine(row, "load row index");
                            self.check_affine(col, "load col index");
                            self.check_buf_access(*buf, false);
                        }
                        ValueExpr::Add(a, b) | ValueExpr::Mul(a, b) => {
                            self.check_reg_read(*a);
                            self.check_reg_read(*b);
                        }
                    }
                    if dst.0 >= self.ir.reg_count {
                        self.diags.push(format!("register %r{} out of range", dst.0));
                    } else {
                        self.assigned[dst.0 as usize] = true;
                    }
                }
                Stmt::Store {
                    buf,
                    row,
                    col,
                    value,
                } => {
                    self.check_affine(row, "store row index");
                    self.check_affine(col, "store col index");
                    self.check_reg_read(*value);
                    self.check_buf_access(*buf, true);
                    if (buf.0 as usize) < self.ir.buffers.len() {
                        self.stored[buf.0 as usize] = true;
                    }
                }
            }
        }
    }
}

/// Structural well-formedness: affine indices only reference enclosing
/// induction variables, registers are assigned before they are read,
/// temp buffers are used inside their alloc/dealloc window, loads read
/// initialized storage and constant/input buffers are never stored to.
pub fn verify_loop_ir(ir: &LoopIr) -> Vec<String> {
    let mut ctx = VerifyCtx {
        ir,
        diags: Vec::new(),
        in_scope: Vec::new(),
        assigned: vec![false; ir.reg_count as usize],
        stored: vec![false; ir.buffers.len()],
        allocated: vec![false; ir.buffers.len()],
        deallocated: vec![false; ir.buffers.len()],
    };
    ctx.walk(&ir.body);
    if let Some(out) = ir.output {
        if out.0 as usize >= ir.buffers.len() {
            ctx.diags.push(format!("output buffer {} undefined", out.0));
        } else if ctx.deallocated[out.0 as usize] {
            ctx.diags.push("output buffer is deallocated".to_string());
        }
    }
    ctx.diags
}

// --- Dump ---

fn render_value(ir: &LoopIr, value: &ValueExpr) -> String {
    match value {
        ValueExpr::Const(z) => format!("complex.const {}", crate::tensor::format_complex(*z)),
        ValueExpr::Load { buf, row, col } => format!(
            "affine.load {}[{}, {}]",
            ir.buffer(*buf).name,
            row.render(),
            col.render()
        ),
        ValueExpr::Add(a, b) => format!("complex.add %r{}, %r{}", a.0, b.0),
        ValueExpr::Mul(a, b) => format!("complex.mul %r{}, %r{}", a.0, b.0),
    }
}

fn dump_stmts(out: &mut String, ir: &LoopIr, stmts: &[Stmt], depth: usize) {
    let indent = "  ".repeat(depth);
    for stmt in stmts {
        match stmt {
            Stmt::Alloc(buf) => {
                let b = ir.buffer(*buf);
                let _ = writeln!(
                    out,
                    "{indent}memref.alloc {} : {}x{}xcomplex",
                    b.name, b.rows, b.cols
                );
            }
            Stmt::Dealloc(buf) => {
                let _ = writeln!(out, "{indent}memref.dealloc {}", ir.buffer(*buf).name);
            }
            Stmt::For(l) => {
                let _ = writeln!(
                    out,
                    "{indent}affine.for %i{} = {} to {} {{",
                    l.var.0, l.lower, l.upper
                );
                dump_stmts(out, ir, &l.body, depth + 1);
                let _ = writeln!(out, "{indent}}}");
            }
            Stmt::Assign { dst, value } => {
                let _ = writeln!(out, "{indent}%r{} = {}", dst.0, render_value(ir, value));
            }
            Stmt::Store {
                buf,
                row,
                col,
                value,
            } => {
                let _ = writeln!(
                    out,
                    "{indent}affine.store %r{}, {}[{}, {}]",
                    value.0,
                    ir.buffer(*buf).name,
                    row.render(),
                    col.render()
                );
            }
        }
    }
}

/// Deterministic textual rendering: buffer declarations, the statement
/// tree, then the output designation.
pub fn dump_loop_ir(ir: &LoopIr) -> String {
    let mut out = String::new();
    for buffer in &ir.buffers {
        match &buffer.init {
            BufferInit::Temp => {
                let _ = writeln!(
                    out,
                    "{} = memref.temp : {}x{}xcomplex",
                    buffer.name, buffer.rows, buffer.cols
                );
            }
            BufferInit::Const(_) => {
                let _ = writeln!(
                    out,
                    "{} = memref.constant : {}x{}xcomplex",
                    buffer.name, buffer.rows, buffer.cols
                );
            }
            BufferInit::Input { name, .. } => {
                let _ = writeln!(
                    out,
                    "{} = memref.input \"{}\" : {}x{}xcomplex",
                    buffer.name, name, buffer.rows, buffer.cols
                );
            }
        }
    }
    dump_stmts(&mut out, ir, &ir.body, 0);
    if let Some(output) = ir.output {
        let _ = writeln!(out, "return {}", ir.buffer(output).name);
    }
    out
}
