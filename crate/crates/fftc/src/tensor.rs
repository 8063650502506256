//! Dense row-major rank-2 tensors of complex double-precision values.
//!
//! `ComplexTensor` is the universal runtime value of the compiler: DSL
//! literals, generator matrices, intermediate products and transform
//! results are all instances of it.

use std::fmt;

use num_complex::Complex64;

/// Whether a tensor holds purely real data or general complex data.
///
/// The distinction only matters for type checking; storage is always
/// complex, with real tensors carrying zero imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Real,
    Complex,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::Real => write!(f, "f64"),
            ElementKind::Complex => write!(f, "complex"),
        }
    }
}

/// Dense row-major matrix of `Complex64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    /// All-zero tensor of the given dimensions. Panics on zero dimensions;
    /// shapes are validated before tensors are built.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "tensor dimensions must be >= 1");
        ComplexTensor {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Builds a tensor from row-major data. Panics if the data length does
    /// not match `rows * cols`.
    pub fn from_data(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "tensor dimensions must be >= 1");
        assert_eq!(data.len(), rows * cols, "data length must be rows*cols");
        ComplexTensor { rows, cols, data }
    }

    /// Builds a real-valued tensor from nested rows of f64.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "rows must have equal lengths");
            data.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        ComplexTensor::from_data(r, c, data)
    }

    /// Column vector from a slice of complex values.
    pub fn column(values: &[Complex64]) -> Self {
        ComplexTensor::from_data(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    /// True when every component is finite (no NaN or infinity).
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Maximum elementwise modulus of the difference against `other`.
    /// Panics if shapes differ; callers compare like-shaped tensors.
    pub fn max_abs_diff(&self, other: &ComplexTensor) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Bitwise equality of the underlying f64 components, including shape.
    /// Distinguishes -0.0 from +0.0; used by determinism tests.
    pub fn bitwise_eq(&self, other: &ComplexTensor) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
    }
}

impl fmt::Display for ComplexTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{}", format_complex(self.get(r, c)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Renders `a+bi` with shortest-roundtrip float formatting.
pub fn format_complex(z: Complex64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}
