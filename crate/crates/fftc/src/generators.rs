//! Dense-matrix semantics for the FFT factorization algebra.
//!
//! Every operator of the language has its exact matrix meaning defined
//! here: the DFT matrix, identity, the diagonal twiddle matrix, the stride
//! permutation, Kronecker product and matrix multiplication. These
//! routines serve three roles at once: the compile-time constant folder,
//! the reference semantics the interpreter must agree with, and the oracle
//! the test suite checks transforms against.
//!
//! Roots of unity are evaluated as cos/sin of an angle whose integer
//! exponent is reduced mod n first, so phase error stays at the ulp level
//! regardless of the transform size.

use num_complex::Complex64;
use thiserror::Error;

use crate::tensor::ComplexTensor;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("{context}: shape mismatch {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        context: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{divisor} does not divide {n}")]
    Divisibility { n: usize, divisor: usize },
}

/// w_n^e = exp(-2*pi*i*e/n), with e reduced mod n before evaluation.
fn root_of_unity(n: usize, exponent: usize) -> Complex64 {
    let e = exponent % n;
    let theta = -std::f64::consts::TAU * (e as f64) / (n as f64);
    Complex64::new(theta.cos(), theta.sin())
}

/// n x n DFT matrix: entry (r, c) = w_n^(r*c).
pub fn dft_matrix(n: usize) -> ComplexTensor {
    let mut out = ComplexTensor::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out.set(r, c, root_of_unity(n, r * c));
        }
    }
    out
}

/// n x n identity matrix.
pub fn identity_matrix(n: usize) -> ComplexTensor {
    let mut out = ComplexTensor::zeros(n, n);
    for i in 0..n {
        out.set(i, i, Complex64::new(1.0, 0.0));
    }
    out
}

/// n x n diagonal twiddle matrix for the split n = k*m.
///
/// The diagonal is laid out in k blocks of length m; within block b the
/// j-th entry is w_n^(b*j). For m = 1 every exponent is zero and the
/// result is the identity.
pub fn twiddle_matrix(n: usize, m: usize) -> Result<ComplexTensor, AlgebraError> {
    if m == 0 || n % m != 0 {
        return Err(AlgebraError::Divisibility { n, divisor: m });
    }
    let k = n / m;
    let mut out = ComplexTensor::zeros(n, n);
    for b in 0..k {
        for j in 0..m {
            out.set(b * m + j, b * m + j, root_of_unity(n, b * j));
        }
    }
    Ok(out)
}

/// n x n stride permutation for the split n = k*m: the matrix P with
/// (P*x)[r*m + q] = x[q*k + r] for q in [0, m), r in [0, k), i.e. a gather
/// of the input at stride k.
pub fn stride_permutation_matrix(n: usize, k: usize) -> Result<ComplexTensor, AlgebraError> {
    if k == 0 || n % k != 0 {
        return Err(AlgebraError::Divisibility { n, divisor: k });
    }
    let m = n / k;
    let mut out = ComplexTensor::zeros(n, n);
    for r in 0..k {
        for q in 0..m {
            out.set(r * m + q, q * k + r, Complex64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

/// Kronecker product: entry ((i*r + u), (j*s + v)) = a[i,j] * b[u,v]
/// where a is p x q and b is r x s.
pub fn kronecker(a: &ComplexTensor, b: &ComplexTensor) -> ComplexTensor {
    let (p, q) = (a.rows(), a.cols());
    let (r, s) = (b.rows(), b.cols());
    let mut out = ComplexTensor::zeros(p * r, q * s);
    for i in 0..p {
        for j in 0..q {
            let aij = a.get(i, j);
            for u in 0..r {
                for v in 0..s {
                    out.set(i * r + u, j * s + v, aij * b.get(u, v));
                }
            }
        }
    }
    out
}

/// Complex matrix product with double-precision accumulation.
///
/// Each output cell accumulates over the inner index in ascending order,
/// cells are produced in (row, col) order; results are bit-reproducible.
/// The right operand is transposed into scratch first so both operands
/// stream contiguously, which does not change any accumulation order.
pub fn matmul(a: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor, AlgebraError> {
    if a.cols() != b.rows() {
        return Err(AlgebraError::ShapeMismatch {
            context: "matmul",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    let (p, q, r) = (a.rows(), a.cols(), b.cols());
    let mut b_t = vec![Complex64::new(0.0, 0.0); q * r];
    for k in 0..q {
        for j in 0..r {
            b_t[j * q + k] = b.get(k, j);
        }
    }
    let a_data = a.data();
    let mut out = ComplexTensor::zeros(p, r);
    for i in 0..p {
        let a_row = &a_data[i * q..(i + 1) * q];
        for j in 0..r {
            let b_col = &b_t[j * q..(j + 1) * q];
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..q {
                acc += a_row[k] * b_col[k];
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Pairs two real tensors of equal shape into one complex tensor.
pub fn create_complex(
    re: &ComplexTensor,
    im: &ComplexTensor,
) -> Result<ComplexTensor, AlgebraError> {
    if re.rows() != im.rows() || re.cols() != im.cols() {
        return Err(AlgebraError::ShapeMismatch {
            context: "createComplex",
            left_rows: re.rows(),
            left_cols: re.cols(),
            right_rows: im.rows(),
            right_cols: im.cols(),
        });
    }
    let data = re
        .data()
        .iter()
        .zip(im.data())
        .map(|(r, i)| Complex64::new(r.re, i.re))
        .collect();
    Ok(ComplexTensor::from_data(re.rows(), re.cols(), data))
}

/// Direct O(n^2) DFT of a column vector: y[m] = sum_c x[c] * w_n^(m*c).
///
/// This is the verification oracle. It deliberately shares no code with
/// `dft_matrix` or `matmul`: the summation and the per-term phase are
/// computed in their own loop here.
pub fn reference_dft(x: &ComplexTensor) -> ComplexTensor {
    assert_eq!(x.cols(), 1, "reference_dft expects a column vector");
    let n = x.rows();
    let mut out = ComplexTensor::zeros(n, 1);
    for m in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..n {
            let e = (m * c) % n;
            let theta = -std::f64::consts::TAU * (e as f64) / (n as f64);
            let w = Complex64::new(theta.cos(), theta.sin());
            acc += x.get(c, 0) * w;
        }
        out.set(m, 0, acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(t: &ComplexTensor, expect: &[(f64, f64)], tol: f64) {
        assert_eq!(t.data().len(), expect.len());
        for (z, &(re, im)) in t.data().iter().zip(expect) {
            assert!(
                (z.re - re).abs() <= tol && (z.im - im).abs() <= tol,
                "got {z}, expected {re}+{im}i"
            );
        }
    }

    #[test]
    fn dft2_entries() {
        let d = dft_matrix(2);
        assert_close(&d, &[(1.0, 0.0), (1.0, 0.0), (1.0, 0.0), (-1.0, 0.0)], 1e-15);
    }

    #[test]
    fn dft1_is_one() {
        assert_close(&dft_matrix(1), &[(1.0, 0.0)], 0.0);
    }

    #[test]
    fn dft4_second_row() {
        // Row 1 of the size-4 matrix: w_4^c for c = 0..3, i.e. 1, -i, -1, i.
        let d = dft_matrix(4);
        let row: Vec<_> = (0..4).map(|c| d.get(1, c)).collect();
        let expect = [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)];
        for (z, (re, im)) in row.iter().zip(expect) {
            assert!((z.re - re).abs() <= 1e-15 && (z.im - im).abs() <= 1e-15);
        }
    }

    #[test]
    fn identity_basics() {
        assert_close(&identity_matrix(1), &[(1.0, 0.0)], 0.0);
        let i2 = identity_matrix(2);
        assert_close(&i2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)], 0.0);
    }

    #[test]
    fn twiddle_4_2_is_diag_1_1_1_minus_i() {
        let t = twiddle_matrix(4, 2).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let z = t.get(r, c);
                if r != c {
                    assert_eq!(z, Complex64::new(0.0, 0.0));
                }
            }
        }
        assert!((t.get(0, 0) - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!((t.get(1, 1) - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!((t.get(2, 2) - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!((t.get(3, 3) - Complex64::new(0.0, -1.0)).norm() <= 1e-15);
    }

    #[test]
    fn twiddle_with_m_1_is_identity() {
        let t = twiddle_matrix(5, 1).unwrap();
        assert!(t.max_abs_diff(&identity_matrix(5)) <= 1e-15);
    }

    #[test]
    fn twiddle_8_4_block_structure() {
        // Two blocks of four: 1,1,1,1 then w_8^0, w_8^1, w_8^2, w_8^3.
        let t = twiddle_matrix(8, 4).unwrap();
        for j in 0..4 {
            assert!((t.get(j, j) - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
            let theta = -std::f64::consts::TAU * (j as f64) / 8.0;
            let w = Complex64::new(theta.cos(), theta.sin());
            assert!((t.get(4 + j, 4 + j) - w).norm() <= 1e-15);
        }
    }

    #[test]
    fn twiddle_rejects_non_divisor() {
        assert_eq!(
            twiddle_matrix(4, 3),
            Err(AlgebraError::Divisibility { n: 4, divisor: 3 })
        );
    }

    #[test]
    fn stride_permutation_4_2() {
        // Rows e0, e2, e1, e3.
        let p = stride_permutation_matrix(4, 2).unwrap();
        let expect = ComplexTensor::from_real_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(p, expect);
    }

    #[test]
    fn stride_permutation_k_1_is_identity() {
        let p = stride_permutation_matrix(6, 1).unwrap();
        assert_eq!(p, identity_matrix(6));
    }

    #[test]
    fn stride_permutation_6_3_gathers() {
        let p = stride_permutation_matrix(6, 3).unwrap();
        let x = ComplexTensor::column(
            &(0..6).map(|i| Complex64::new(i as f64, 0.0)).collect::<Vec<_>>(),
        );
        let y = matmul(&p, &x).unwrap();
        let order: Vec<f64> = y.data().iter().map(|z| z.re).collect();
        assert_eq!(order, vec![0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
    }

    #[test]
    fn permutation_has_one_entry_per_row_and_column() {
        for (n, k) in [(4, 2), (6, 2), (6, 3), (8, 4), (12, 3)] {
            let p = stride_permutation_matrix(n, k).unwrap();
            for r in 0..n {
                let row_ones = (0..n).filter(|&c| p.get(r, c).re == 1.0).count();
                let col_ones = (0..n).filter(|&c| p.get(c, r).re == 1.0).count();
                assert_eq!(row_ones, 1);
                assert_eq!(col_ones, 1);
            }
        }
    }

    #[test]
    fn kronecker_dft2_identity2_matches_first_factor() {
        let k = kronecker(&dft_matrix(2), &identity_matrix(2));
        let expect = ComplexTensor::from_real_rows(&[
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
            vec![1.0, 0.0, -1.0, 0.0],
            vec![0.0, 1.0, 0.0, -1.0],
        ]);
        assert!(k.max_abs_diff(&expect) <= 1e-15);
    }

    #[test]
    fn kronecker_identity2_dft2_matches_third_factor() {
        let k = kronecker(&identity_matrix(2), &dft_matrix(2));
        let expect = ComplexTensor::from_real_rows(&[
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, -1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0, -1.0],
        ]);
        assert!(k.max_abs_diff(&expect) <= 1e-15);
    }

    #[test]
    fn kronecker_left_identity_one() {
        let b = dft_matrix(3);
        assert_eq!(kronecker(&identity_matrix(1), &b), b);
    }

    #[test]
    fn matmul_identity_is_noop() {
        let b = dft_matrix(3);
        assert_eq!(matmul(&identity_matrix(3), &b).unwrap(), b);
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let a = ComplexTensor::zeros(4, 4);
        let b = ComplexTensor::zeros(2, 1);
        assert!(matches!(
            matmul(&a, &b),
            Err(AlgebraError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn four_factor_product_equals_dft4() {
        let f1 = kronecker(&dft_matrix(2), &identity_matrix(2));
        let d = twiddle_matrix(4, 2).unwrap();
        let f2 = kronecker(&identity_matrix(2), &dft_matrix(2));
        let p = stride_permutation_matrix(4, 2).unwrap();
        let prod = matmul(&matmul(&matmul(&f1, &d).unwrap(), &f2).unwrap(), &p).unwrap();
        assert!(prod.max_abs_diff(&dft_matrix(4)) < 1e-12);
    }

    #[test]
    fn dft4_matvec_known_value() {
        // x = [1+i, 2+2i, 3+3i, 4+4i]; cross-checked against the oracle.
        let x = ComplexTensor::column(&[
            Complex64::new(1.0, 1.0),
            Complex64::new(2.0, 2.0),
            Complex64::new(3.0, 3.0),
            Complex64::new(4.0, 4.0),
        ]);
        let y = matmul(&dft_matrix(4), &x).unwrap();
        let expect = [(10.0, 10.0), (-4.0, 0.0), (-2.0, -2.0), (0.0, -4.0)];
        for (z, (re, im)) in y.data().iter().zip(expect) {
            assert!((z.re - re).abs() <= 1e-12 && (z.im - im).abs() <= 1e-12);
        }
        assert!(y.max_abs_diff(&reference_dft(&x)) <= 1e-12);
    }

    #[test]
    fn create_complex_pairs_components() {
        let re = ComplexTensor::from_real_rows(&[vec![1.0]]);
        let im = ComplexTensor::from_real_rows(&[vec![2.0]]);
        let z = create_complex(&re, &im).unwrap();
        assert_eq!(z.get(0, 0), Complex64::new(1.0, 2.0));
    }

    #[test]
    fn create_complex_rejects_shape_mismatch() {
        let re = ComplexTensor::zeros(2, 1);
        let im = ComplexTensor::zeros(3, 1);
        assert!(matches!(
            create_complex(&re, &im),
            Err(AlgebraError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn reference_dft_of_impulse_is_all_ones() {
        let mut x = ComplexTensor::zeros(8, 1);
        x.set(0, 0, Complex64::new(1.0, 0.0));
        let y = reference_dft(&x);
        for z in y.data() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        }
    }

    #[test]
    fn reference_dft_of_constant_is_impulse() {
        let x = ComplexTensor::column(&[Complex64::new(1.0, 0.0); 4]);
        let y = reference_dft(&x);
        assert!((y.get(0, 0) - Complex64::new(4.0, 0.0)).norm() <= 1e-14);
        for m in 1..4 {
            assert!(y.get(m, 0).norm() <= 1e-14);
        }
    }

    #[test]
    fn generator_outputs_are_finite() {
        for n in [1, 2, 3, 7, 16, 64] {
            assert!(dft_matrix(n).is_finite());
            assert!(identity_matrix(n).is_finite());
        }
        assert!(twiddle_matrix(64, 8).unwrap().is_finite());
        assert!(stride_permutation_matrix(64, 8).unwrap().is_finite());
    }
}
