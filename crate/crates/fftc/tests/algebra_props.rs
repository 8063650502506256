//! Properties of the matrix algebra: the factorization identity, matrix
//! structure invariants and shape soundness of the inference rules.

use std::collections::HashMap;

use fftc::fft_ir::{build_ir, fold, shapes::infer_shapes};
use fftc::frontend::parse_source;
use fftc::generators::*;
use fftc::tensor::ComplexTensor;
use num_complex::Complex64;
use proptest::prelude::*;

/// DFT_N = (DFT_K ⊗ I_M) D(N,M) (I_K ⊗ DFT_M) P(N,K) for every split.
#[test]
fn factorization_identity_all_splits_up_to_64() {
    for n in 1..=64usize {
        for k in 1..=n {
            if n % k != 0 {
                continue;
            }
            let m = n / k;
            let f1 = kronecker(&dft_matrix(k), &identity_matrix(m));
            let d = twiddle_matrix(n, m).unwrap();
            let f2 = kronecker(&identity_matrix(k), &dft_matrix(m));
            let p = stride_permutation_matrix(n, k).unwrap();
            let chain = matmul(&matmul(&matmul(&f1, &d).unwrap(), &f2).unwrap(), &p).unwrap();
            let err = chain.max_abs_diff(&dft_matrix(n));
            assert!(err < 1e-10, "split {n} = {k} * {m}: error {err}");
        }
    }
}

#[test]
fn scaled_unitarity_up_to_64() {
    for n in 1..=64usize {
        let d = dft_matrix(n);
        // Conjugate transpose.
        let mut adj = ComplexTensor::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                adj.set(r, c, d.get(c, r).conj());
            }
        }
        let product = matmul(&d, &adj).unwrap();
        let mut scaled_identity = ComplexTensor::zeros(n, n);
        for i in 0..n {
            scaled_identity.set(i, i, Complex64::new(n as f64, 0.0));
        }
        let err = product.max_abs_diff(&scaled_identity);
        assert!(err < 1e-10, "n={n}: error {err}");
    }
}

#[test]
fn stride_permutations_are_permutation_matrices() {
    for n in 1..=32usize {
        for k in 1..=n {
            if n % k != 0 {
                continue;
            }
            let p = stride_permutation_matrix(n, k).unwrap();
            for r in 0..n {
                let row_ones = (0..n)
                    .filter(|&c| p.get(r, c) == Complex64::new(1.0, 0.0))
                    .count();
                let row_zeros = (0..n)
                    .filter(|&c| p.get(r, c) == Complex64::new(0.0, 0.0))
                    .count();
                assert_eq!((row_ones, row_zeros), (1, n - 1), "row {r} of P({n},{k})");
                let col_ones = (0..n)
                    .filter(|&c| p.get(c, r) == Complex64::new(1.0, 0.0))
                    .count();
                assert_eq!(col_ones, 1, "col {r} of P({n},{k})");
            }
        }
    }
}

#[test]
fn twiddle_diagonal_has_unit_modulus() {
    for n in 1..=32usize {
        for m in 1..=n {
            if n % m != 0 {
                continue;
            }
            let t = twiddle_matrix(n, m).unwrap();
            for r in 0..n {
                for c in 0..n {
                    let z = t.get(r, c);
                    if r == c {
                        assert!((z.norm() - 1.0).abs() < 1e-15);
                    } else {
                        assert_eq!(z, Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }
}

fn random_matrix_strategy(
    rows: usize,
    cols: usize,
) -> impl Strategy<Value = ComplexTensor> {
    proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), rows * cols).prop_map(
        move |cells| {
            ComplexTensor::from_data(
                rows,
                cols,
                cells.into_iter().map(|(re, im)| Complex64::new(re, im)).collect(),
            )
        },
    )
}

proptest! {
    /// (A ⊗ B)(C ⊗ D) = (AC) ⊗ (BD) on small random matrices.
    #[test]
    fn kronecker_mixed_product(
        a in random_matrix_strategy(2, 2),
        b in random_matrix_strategy(2, 2),
        c in random_matrix_strategy(2, 2),
        d in random_matrix_strategy(2, 2),
    ) {
        let lhs = matmul(&kronecker(&a, &b), &kronecker(&c, &d)).unwrap();
        let rhs = kronecker(&matmul(&a, &c).unwrap(), &matmul(&b, &d).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    /// Kronecker output dimensions are elementwise products.
    #[test]
    fn kronecker_shape_law(
        p in 1usize..4, q in 1usize..4, r in 1usize..4, s in 1usize..4,
    ) {
        let a = ComplexTensor::zeros(p, q);
        let b = ComplexTensor::zeros(r, s);
        let k = kronecker(&a, &b);
        prop_assert_eq!((k.rows(), k.cols()), (p * r, q * s));
    }
}

/// Inferred shapes match the dimensions of actually evaluated values, on
/// a family of generated programs mixing every operator.
#[test]
fn shape_annotations_match_evaluation() {
    let sources = [
        "var x <4, 1> = [[1], [2], [3], [4]]; var y = DFT(4) · x;",
        "var a = DFT(2) ⊗ I(3); var b = a · Permute(6, 2);",
        "var re <2, 1> = [[1], [2]]; var im <2, 1> = [[3], [4]];\
         var z = createComplex(re, im); var w = (I(2) ⊗ DFT(2)) · (z ⊗ z);",
        "var t = twiddle(8, 4) · (DFT(4) ⊗ I(2));",
        "var x <1, 3> = [[1, 2, 3]]; var k = x ⊗ x;",
    ];
    for source in sources {
        let mut program = build_ir(&parse_source(source).unwrap()).unwrap();
        infer_shapes(&mut program).unwrap();
        for (index, op) in program.ops.iter().enumerate() {
            // Evaluate the sub-program ending at this op.
            let mut sub = program.clone();
            sub.output = Some(fftc::fft_ir::OpId(index));
            let value = fold::evaluate(&sub, &HashMap::new()).unwrap();
            let shape = op.shape.unwrap();
            assert_eq!(
                (value.rows(), value.cols()),
                (shape.rows, shape.cols),
                "{source}: op %{index}"
            );
            assert!(value.is_finite());
        }
    }
}
