//! Source-program generator.
//!
//! Emits DSL programs that compute a size-n transform either directly
//! (`DFT(n) · x`) or as the recursive factorization
//! `(DFT(K) ⊗ I(M)) · twiddle(N, M) · (I(K) ⊗ DFT(M)) · Permute(N, K)`
//! with `N = K * M`, expanding each `DFT(M)` above the base size into its
//! own parenthesized factorization. Products associate to the right, so
//! the compiled program applies the whole chain as matrix-vector products
//! against the input.

use std::fmt::Write as _;

use thiserror::Error;

/// How to choose the split N = K * M at each recursion step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadixPolicy {
    /// Always split off K = radix.
    Fixed(usize),
    /// Split at the divisor closest to sqrt(N) from below.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub size: usize,
    pub radix: RadixPolicy,
    /// Transforms of this size or smaller stay as `DFT(m)` leaves.
    pub base: usize,
}

impl GenSpec {
    pub fn radix2(size: usize) -> Self {
        GenSpec {
            size,
            radix: RadixPolicy::Fixed(2),
            base: 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("size {size} cannot be factorized under the chosen radix policy: {detail}")]
    BadFactorization { size: usize, detail: String },
}

fn split(n: usize, policy: RadixPolicy) -> Result<(usize, usize), GenError> {
    match policy {
        RadixPolicy::Fixed(k) => {
            if k < 2 {
                return Err(GenError::BadFactorization {
                    size: n,
                    detail: format!("radix {k} is smaller than 2"),
                });
            }
            if n % k != 0 || n / k < 1 {
                return Err(GenError::BadFactorization {
                    size: n,
                    detail: format!("{k} does not divide {n}"),
                });
            }
            Ok((k, n / k))
        }
        RadixPolicy::Balanced => {
            let mut k = (n as f64).sqrt() as usize;
            while k >= 2 {
                if n % k == 0 {
                    return Ok((k, n / k));
                }
                k -= 1;
            }
            Err(GenError::BadFactorization {
                size: n,
                detail: "no divisor >= 2 at or below sqrt".to_string(),
            })
        }
    }
}

fn expand(n: usize, spec: &GenSpec, out: &mut String) -> Result<(), GenError> {
    if n <= spec.base {
        let _ = write!(out, "DFT({n})");
        return Ok(());
    }
    let (k, m) = split(n, spec.radix)?;
    let _ = write!(out, "(DFT({k}) ⊗ I({m})) · twiddle({n}, {m}) · (I({k}) ⊗ ");
    if m <= spec.base {
        let _ = write!(out, "DFT({m})");
    } else {
        out.push('(');
        expand(m, spec, out)?;
        out.push(')');
    }
    let _ = write!(out, ") · Permute({n}, {k})");
    Ok(())
}

fn input_declarations(n: usize) -> String {
    let placeholder: Vec<String> = (1..=n).map(|v| format!("[{v}]")).collect();
    let literal = format!("[{}]", placeholder.join(", "));
    format!(
        "var InputReal <{n}, 1> = {literal};\n\
         var InputImg <{n}, 1> = {literal};\n\
         var InputComplex = createComplex(InputReal, InputImg);\n"
    )
}

/// Recursive factorized program for the given spec.
pub fn gen_cooley_tukey(spec: &GenSpec) -> Result<String, GenError> {
    if spec.size < 1 {
        return Err(GenError::BadFactorization {
            size: spec.size,
            detail: "size must be at least 1".to_string(),
        });
    }
    let mut expr = String::new();
    expand(spec.size, spec, &mut expr)?;
    Ok(format!(
        "{}var result = {expr} · InputComplex;\n",
        input_declarations(spec.size)
    ))
}

/// Direct program: one dense DFT matrix applied to the input.
pub fn gen_direct(size: usize) -> String {
    format!(
        "{}var result = DFT({size}) · InputComplex;\n",
        input_declarations(size)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normalize_ws(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    #[test]
    fn size4_radix2_matches_reference_program() {
        let generated = gen_cooley_tukey(&GenSpec::radix2(4)).unwrap();
        let reference = "\
            var InputReal <4, 1> = [[1], [2], [3], [4]];\n\
            var InputImg <4, 1> = [[1], [2], [3], [4]];\n\
            var InputComplex = createComplex(InputReal, InputImg);\n\
            var result = (DFT(2) ⊗ I(2)) · twiddle(4,2) · (I(2) ⊗ DFT(2)) · Permute(4,2) · InputComplex;\n";
        assert_eq!(normalize_ws(&generated), normalize_ws(reference));
    }

    #[test]
    fn base_case_is_a_single_dft() {
        let generated = gen_cooley_tukey(&GenSpec::radix2(2)).unwrap();
        assert!(generated.contains("var result = DFT(2) · InputComplex;"));
    }

    #[test]
    fn size8_expands_recursively() {
        let generated = gen_cooley_tukey(&GenSpec::radix2(8)).unwrap();
        assert!(generated.contains("twiddle(8, 4)"));
        assert!(generated.contains("Permute(8, 2)"));
        // The size-4 subproblem appears parenthesized inside I(2) ⊗ (...).
        assert!(generated.contains("(I(2) ⊗ ((DFT(2) ⊗ I(2)) · twiddle(4, 2)"));
    }

    #[test]
    fn balanced_split_picks_near_sqrt() {
        assert_eq!(split(12, RadixPolicy::Balanced).unwrap(), (3, 4));
        assert_eq!(split(16, RadixPolicy::Balanced).unwrap(), (4, 4));
        assert_eq!(split(6, RadixPolicy::Balanced).unwrap(), (2, 3));
    }

    #[test]
    fn non_divisible_fixed_radix_is_rejected() {
        let err = gen_cooley_tukey(&GenSpec {
            size: 6,
            radix: RadixPolicy::Fixed(4),
            base: 2,
        })
        .unwrap_err();
        assert!(matches!(err, GenError::BadFactorization { size: 6, .. }));
    }

    #[test]
    fn generated_source_parses(){
        for n in [2usize, 4, 8, 16, 32] {
            let src = gen_cooley_tukey(&GenSpec::radix2(n)).unwrap();
            let decls = crate::frontend::parse_source(&src).unwrap();
            assert_eq!(decls.len(), 4);
        }
        let direct = gen_direct(16);
        assert_eq!(crate::frontend::parse_source(&direct).unwrap().len(), 4);
    }
}
