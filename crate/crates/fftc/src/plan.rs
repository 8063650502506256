//! Serialized execution plans: the ahead-of-time compilation artifact.
//!
//! A plan is a compiled loop-IR program persisted to a versioned binary
//! stream, little-endian throughout, with length-prefixed sections in
//! fixed order: header, buffers, statements, metadata. Deserializing a
//! serialized plan reproduces the IR structurally; running it produces
//! bitwise the same results as interpreting the original IR.
//!
//! Layout:
//!
//! ```text
//! magic  "FFTCPLAN"            8 bytes
//! version u32
//! section: header              u64 length + payload
//!   output (u8 flag, u32 id), reg_count u32, var_count u32,
//!   input descriptors: u32 count, (string, rows u32, cols u32)*
//! section: buffers             u64 length + payload
//!   u32 count, (string name, rows u32, cols u32, init)*
//!   init: 0 temp | 1 const + data | 2 input + string + data
//!   data: u64 count, (f64 re, f64 im)*
//! section: statements          u64 length + payload
//!   u32 count, statement*     (tagged, loops carry nested counts)
//! section: metadata            u64 length + payload
//!   source hash string (hex), opt level u8
//! ```
//!
//! Strings are u32 length + UTF-8 bytes. Floats travel as raw IEEE bits,
//! so values round-trip exactly, signed zeros included.

use num_complex::Complex64;
use thiserror::Error;

use crate::loop_ir::{
    AffineExpr, BufId, Buffer, BufferInit, Loop, LoopIr, LoopVarId, RegId, Stmt, ValueExpr,
};
use crate::passes::PassLevel;

pub const PLAN_MAGIC: &[u8; 8] = b"FFTCPLAN";
pub const PLAN_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanMeta {
    /// Hex sha-256 of the source text the plan was compiled from.
    pub source_hash: String,
    pub opt_level: PassLevel,
}

/// A deserialized, runnable plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub version: u32,
    pub ir: LoopIr,
    /// Expected input buffer names and shapes.
    pub inputs: Vec<(String, usize, usize)>,
    pub meta: PlanMeta,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("plan version {found} is not supported (expected {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("corrupt plan stream at offset {offset}: {detail}")]
    CorruptStream { offset: usize, detail: String },
}

// --- Writing ---

struct Writer {
    bytes: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.bytes.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes.extend_from_slice(s.as_bytes());
    }
    fn complex_data(&mut self, data: &[Complex64]) {
        self.u64(data.len() as u64);
        for z in data {
            self.f64(z.re);
            self.f64(z.im);
        }
    }
    fn affine(&mut self, e: &AffineExpr) {
        self.u32(e.terms.len() as u32);
        for &(coeff, var) in &e.terms {
            self.i64(coeff);
            self.u32(var.0);
        }
        self.i64(e.constant);
    }
    fn value(&mut self, v: &ValueExpr) {
        match v {
            ValueExpr::Const(z) => {
                self.u8(0);
                self.f64(z.re);
                self.f64(z.im);
            }
            ValueExpr::Load { buf, row, col } => {
                self.u8(1);
                self.u32(buf.0);
                self.affine(row);
                self.affine(col);
            }
            ValueExpr::Add(a, b) => {
                self.u8(2);
                self.u32(a.0);
                self.u32(b.0);
            }
            ValueExpr::Mul(a, b) => {
                self.u8(3);
                self.u32(a.0);
                self.u32(b.0);
            }
        }
    }
    fn stmts(&mut self, stmts: &[Stmt]) {
        self.u32(stmts.len() as u32);
        for stmt in stmts {
            match stmt {
                Stmt::Alloc(b) => {
                    self.u8(0);
                    self.u32(b.0);
                }
                Stmt::Dealloc(b) => {
                    self.u8(1);
                    self.u32(b.0);
                }
                Stmt::For(l) => {
                    self.u8(2);
                    self.u32(l.var.0);
                    self.i64(l.lower);
                    self.i64(l.upper);
                    self.stmts(&l.body);
                }
                Stmt::Assign { dst, value } => {
                    self.u8(3);
                    self.u32(dst.0);
                    self.value(value);
                }
                Stmt::Store {
                    buf,
                    row,
                    col,
                    value,
                } => {
                    self.u8(4);
                    self.u32(buf.0);
                    self.affine(row);
                    self.affine(col);
                    self.u32(value.0);
                }
            }
        }
    }
}

fn section(out: &mut Vec<u8>, payload: Vec<u8>) {
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
}

/// Serializes a compiled program into the plan byte format.
pub fn serialize_plan(ir: &LoopIr, meta: &PlanMeta) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PLAN_MAGIC);
    out.extend_from_slice(&PLAN_VERSION.to_le_bytes());

    // Header.
    let mut w = Writer { bytes: Vec::new() };
    match ir.output {
        Some(out_buf) => {
            w.u8(1);
            w.u32(out_buf.0);
        }
        None => {
            w.u8(0);
            w.u32(0);
        }
    }
    w.u32(ir.reg_count);
    w.u32(ir.var_count);
    let inputs = ir.input_descriptors();
    w.u32(inputs.len() as u32);
    for (name, rows, cols) in &inputs {
        w.string(name);
        w.u32(*rows as u32);
        w.u32(*cols as u32);
    }
    section(&mut out, w.bytes);

    // Buffers.
    let mut w = Writer { bytes: Vec::new() };
    w.u32(ir.buffers.len() as u32);
    for buffer in &ir.buffers {
        w.string(&buffer.name);
        w.u32(buffer.rows as u32);
        w.u32(buffer.cols as u32);
        match &buffer.init {
            BufferInit::Temp => w.u8(0),
            BufferInit::Const(data) => {
                w.u8(1);
                w.complex_data(data);
            }
            BufferInit::Input { name, default } => {
                w.u8(2);
                w.string(name);
                w.complex_data(default);
            }
        }
    }
    section(&mut out, w.bytes);

    // Statements.
    let mut w = Writer { bytes: Vec::new() };
    w.stmts(&ir.body);
    section(&mut out, w.bytes);

    // Metadata.
    let mut w = Writer { bytes: Vec::new() };
    w.string(&meta.source_hash);
    w.u8(match meta.opt_level {
        PassLevel::O0 => 0,
        PassLevel::O2 => 2,
        PassLevel::O3 => 3,
    });
    section(&mut out, w.bytes);

    out
}

// --- Reading ---

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
    /// Offset of this reader's window in the whole stream, for messages.
    base: usize,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, detail: impl Into<String>) -> PlanError {
        PlanError::CorruptStream {
            offset: self.base + self.offset,
            detail: detail.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], PlanError> {
        if self.offset + n > self.bytes.len() {
            return Err(self.corrupt(format!(
                "need {n} bytes, {} available",
                self.bytes.len() - self.offset
            )));
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, PlanError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, PlanError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, PlanError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i64(&mut self) -> Result<i64, PlanError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, PlanError> {
        Ok(f64::from_bits(u64::from_le_bytes(
            self.take(8)?.try_into().unwrap(),
        )))
    }
    fn string(&mut self) -> Result<String, PlanError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.corrupt("invalid UTF-8 string"))
    }
    fn complex_data(&mut self) -> Result<Vec<Complex64>, PlanError> {
        let count = self.u64()? as usize;
        if count > self.bytes.len() / 16 + 1 {
            return Err(self.corrupt(format!("implausible data count {count}")));
        }
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let re = self.f64()?;
            let im = self.f64()?;
            data.push(Complex64::new(re, im));
        }
        Ok(data)
    }
    fn affine(&mut self) -> Result<AffineExpr, PlanError> {
        let n = self.u32()? as usize;
        if n > self.bytes.len() / 12 + 1 {
            return Err(self.corrupt(format!("implausible term count {n}")));
        }
        let mut terms = Vec::with_capacity(n);
        for _ in 0..n {
            let coeff = self.i64()?;
            let var = LoopVarId(self.u32()?);
            terms.push((coeff, var));
        }
        let constant = self.i64()?;
        Ok(AffineExpr::from_terms(terms, constant))
    }
    fn value(&mut self) -> Result<ValueExpr, PlanError> {
        match self.u8()? {
            0 => {
                let re = self.f64()?;
                let im = self.f64()?;
                Ok(ValueExpr::Const(Complex64::new(re, im)))
            }
            1 => {
                let buf = BufId(self.u32()?);
                let row = self.affine()?;
                let col = self.affine()?;
                Ok(ValueExpr::Load { buf, row, col })
            }
            2 => Ok(ValueExpr::Add(RegId(self.u32()?), RegId(self.u32()?))),
            3 => Ok(ValueExpr::Mul(RegId(self.u32()?), RegId(self.u32()?))),
            tag => Err(self.corrupt(format!("unknown value tag {tag}"))),
        }
    }
    fn stmts(&mut self, depth: usize) -> Result<Vec<Stmt>, PlanError> {
        if depth > 64 {
            return Err(self.corrupt("loop nesting too deep"));
        }
        let count = self.u32()? as usize;
        if count > self.bytes.len() + 1 {
            return Err(self.corrupt(format!("implausible statement count {count}")));
        }
        let mut stmts = Vec::with_capacity(count);
        for _ in 0..count {
            let stmt = match self.u8()? {
                0 => Stmt::Alloc(BufId(self.u32()?)),
                1 => Stmt::Dealloc(BufId(self.u32()?)),
                2 => {
                    let var = LoopVarId(self.u32()?);
                    let lower = self.i64()?;
                    let upper = self.i64()?;
                    let body = self.stmts(depth + 1)?;
                    Stmt::For(Loop {
                        var,
                        lower,
                        upper,
                        body,
                    })
                }
                3 => {
                    let dst = RegId(self.u32()?);
                    let value = self.value()?;
                    Stmt::Assign { dst, value }
                }
                4 => {
                    let buf = BufId(self.u32()?);
                    let row = self.affine()?;
                    let col = self.affine()?;
                    let value = RegId(self.u32()?);
                    Stmt::Store {
                        buf,
                        row,
                        col,
                        value,
                    }
                }
                tag => return Err(self.corrupt(format!("unknown statement tag {tag}"))),
            };
            stmts.push(stmt);
        }
        Ok(stmts)
    }

    fn done(&self) -> bool {
        self.offset == self.bytes.len()
    }
}

fn read_section<'a>(
    bytes: &'a [u8],
    offset: &mut usize,
    what: &str,
) -> Result<(&'a [u8], usize), PlanError> {
    let corrupt = |offset: usize, detail: String| PlanError::CorruptStream { offset, detail };
    if *offset + 8 > bytes.len() {
        return Err(corrupt(*offset, format!("missing {what} section length")));
    }
    let len = u64::from_le_bytes(bytes[*offset..*offset + 8].try_into().unwrap()) as usize;
    *offset += 8;
    if *offset + len > bytes.len() {
        return Err(corrupt(
            *offset,
            format!("{what} section claims {len} bytes, stream has {}", bytes.len() - *offset),
        ));
    }
    let payload = &bytes[*offset..*offset + len];
    let base = *offset;
    *offset += len;
    Ok((payload, base))
}

/// Parses and validates a plan byte stream.
pub fn deserialize_plan(bytes: &[u8]) -> Result<Plan, PlanError> {
    let corrupt = |offset: usize, detail: &str| PlanError::CorruptStream {
        offset,
        detail: detail.to_string(),
    };
    if bytes.len() < 12 {
        return Err(corrupt(0, "stream shorter than magic and version"));
    }
    if &bytes[..8] != PLAN_MAGIC {
        return Err(corrupt(0, "bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != PLAN_VERSION {
        return Err(PlanError::VersionMismatch {
            found: version,
            supported: PLAN_VERSION,
        });
    }

    let mut offset = 12;
    let (header, base) = read_section(bytes, &mut offset, "header")?;
    let mut r = Reader {
        bytes: header,
        offset: 0,
        base,
    };
    let has_output = r.u8()? != 0;
    let output_id = r.u32()?;
    let reg_count = r.u32()?;
    let var_count = r.u32()?;
    let input_count = r.u32()? as usize;
    let mut inputs = Vec::with_capacity(input_count.min(1024));
    for _ in 0..input_count {
        let name = r.string()?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        inputs.push((name, rows, cols));
    }
    if !r.done() {
        return Err(r.corrupt("trailing bytes in header section"));
    }

    let (buffers_bytes, base) = read_section(bytes, &mut offset, "buffers")?;
    let mut r = Reader {
        bytes: buffers_bytes,
        offset: 0,
        base,
    };
    let buffer_count = r.u32()? as usize;
    if buffer_count > buffers_bytes.len() + 1 {
        return Err(r.corrupt(format!("implausible buffer count {buffer_count}")));
    }
    let mut buffers = Vec::with_capacity(buffer_count);
    for _ in 0..buffer_count {
        let name = r.string()?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let init = match r.u8()? {
            0 => BufferInit::Temp,
            1 => BufferInit::Const(r.complex_data()?),
            2 => {
                let input_name = r.string()?;
                let default = r.complex_data()?;
                BufferInit::Input {
                    name: input_name,
                    default,
                }
            }
            tag => return Err(r.corrupt(format!("unknown buffer init tag {tag}"))),
        };
        match &init {
            BufferInit::Const(data) | BufferInit::Input { default: data, .. } => {
                if data.len() != rows * cols {
                    return Err(r.corrupt(format!(
                        "buffer data length {} does not match {rows}x{cols}",
                        data.len()
                    )));
                }
            }
            BufferInit::Temp => {}
        }
        buffers.push(Buffer {
            name,
            rows,
            cols,
            init,
        });
    }
    if !r.done() {
        return Err(r.corrupt("trailing bytes in buffers section"));
    }

    let (stmt_bytes, base) = read_section(bytes, &mut offset, "statements")?;
    let mut r = Reader {
        bytes: stmt_bytes,
        offset: 0,
        base,
    };
    let body = r.stmts(0)?;
    if !r.done() {
        return Err(r.corrupt("trailing bytes in statements section"));
    }

    let (meta_bytes, base) = read_section(bytes, &mut offset, "metadata")?;
    let mut r = Reader {
        bytes: meta_bytes,
        offset: 0,
        base,
    };
    let source_hash = r.string()?;
    let opt_level = match r.u8()? {
        0 => PassLevel::O0,
        2 => PassLevel::O2,
        3 => PassLevel::O3,
        tag => return Err(r.corrupt(format!("unknown optimization level tag {tag}"))),
    };
    if !r.done() {
        return Err(r.corrupt("trailing bytes in metadata section"));
    }

    if offset != bytes.len() {
        return Err(corrupt(offset, "trailing bytes after final section"));
    }

    let output = if has_output {
        if output_id as usize >= buffers.len() {
            return Err(corrupt(12, "output buffer id out of range"));
        }
        Some(BufId(output_id))
    } else {
        None
    };

    let ir = LoopIr {
        buffers,
        body,
        output,
        reg_count,
        var_count,
    };
    let declared = ir.input_descriptors();
    if declared != inputs {
        return Err(corrupt(
            12,
            "header input descriptors disagree with buffer section",
        ));
    }

    Ok(Plan {
        version,
        ir,
        inputs,
        meta: PlanMeta {
            source_hash,
            opt_level,
        },
    })
}

/// Executes a plan. Results are identical to interpreting the embedded IR.
pub fn run_plan(
    plan: &Plan,
    inputs: &std::collections::HashMap<String, crate::tensor::ComplexTensor>,
) -> Result<(crate::tensor::ComplexTensor, crate::interp::ExecStats), crate::interp::ExecError> {
    crate::interp::interpret(&plan.ir, inputs)
}

/// Hex sha-256 of source text, recorded in plan metadata.
pub fn source_hash(source: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(source.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
