//! Limiting covariances `lim cov(Tr Y_N, Tr Z_N)` expressed through
//! normalized traces of the centered matrices.

use num_complex::Complex64;

use super::FluctuationError;
use crate::ensembles::ConjugatorCase;
use crate::linalg::CMatrix;

const TRACE_ZERO_TOLERANCE: f64 = 1e-10;

/// Reduces `i` into `1..=m`, with residue 0 mapping to `m`.
pub fn cyclic_index(i: i64, m: usize) -> usize {
    (i - 1).rem_euclid(m as i64) as usize + 1
}

fn normalized(x: Complex64, n: usize) -> Complex64 {
    x / n as f64
}

/// `tr(X Y)`.
pub fn tr_product(x: &CMatrix, y: &CMatrix) -> Complex64 {
    let n = x.nrows();
    normalized(x.iter().zip(y.t().iter()).map(|(a, b)| a * b).sum(), n)
}

/// `tr(X Y^T)`.
pub fn tr_product_transpose(x: &CMatrix, y: &CMatrix) -> Complex64 {
    let n = x.nrows();
    normalized(x.iter().zip(y.iter()).map(|(a, b)| a * b).sum(), n)
}

/// `tr(X ∘ Y)`.
pub fn tr_hadamard(x: &CMatrix, y: &CMatrix) -> Complex64 {
    let n = x.nrows();
    normalized(x.diag().iter().zip(y.diag().iter()).map(|(a, b)| a * b).sum(), n)
}

fn validate(a: &[CMatrix], b: &[CMatrix]) -> Result<usize, FluctuationError> {
    for (name, list) in [("A", a), ("B", b)] {
        if list.len() < 2 || list.len() % 2 != 0 {
            return Err(FluctuationError::SpecInvalid(format!(
                "need an even number (at least 2) of {name} matrices"
            )));
        }
    }
    let n = a[0].nrows();
    for (index, m) in a.iter().chain(b).enumerate() {
        if m.nrows() != n || m.ncols() != n {
            return Err(FluctuationError::DimensionMismatch { index: index + 1, n });
        }
        let t = m.diag().sum().norm() / n as f64;
        if t > TRACE_ZERO_TOLERANCE {
            return Err(FluctuationError::TraceNotZero {
                index: index + 1,
                trace: t,
            });
        }
    }
    Ok(n)
}

/// `prod_{k=1}^{2 m1} f(A_k, B_{g(k)})` with `B` indices reduced cyclically.
fn paired_product(
    a: &[CMatrix],
    b: &[CMatrix],
    index: impl Fn(i64) -> i64,
    f: impl Fn(&CMatrix, &CMatrix) -> Complex64,
) -> Complex64 {
    (1..=a.len() as i64)
        .map(|k| f(&a[k as usize - 1], &b[cyclic_index(index(k), b.len()) - 1]))
        .product()
}

/// `sum_{l=1}^{m1} prod_k tr(A_k B_{2l-k})`, the term shared by cases 1, 2 and the Haar-like case.
fn reversed_term(a: &[CMatrix], b: &[CMatrix]) -> Complex64 {
    (1..=(a.len() / 2) as i64)
        .map(|l| paired_product(a, b, |k| 2 * l - k, tr_product))
        .sum()
}

/// `prod_{k=1}^{m} tr(A_{l+k-1} A_{l-k})`.
fn self_product(a: &[CMatrix], l: i64) -> Complex64 {
    let m = a.len();
    (1..=(m / 2) as i64)
        .map(|k| tr_product(&a[cyclic_index(l + k - 1, m) - 1], &a[cyclic_index(l - k, m) - 1]))
        .product()
}

/// Double sum of the third case: `2 sum_{l1=1}^{m1} sum_{l2=1}^{m2} P_A(l1) P_B(l2)`.
fn case3_double_sum(a: &[CMatrix], b: &[CMatrix]) -> Complex64 {
    let sa: Complex64 = (1..=(a.len() / 2) as i64).map(|l| self_product(a, l)).sum();
    let sb: Complex64 = (1..=(b.len() / 2) as i64).map(|l| self_product(b, l)).sum();
    2.0 * sa * sb
}

/// The same double sum with `l1, l2` over full periods `[2 m1] x [2 m2]` and unit weight.
pub fn case3_full_period_double_sum(a: &[CMatrix], b: &[CMatrix]) -> Complex64 {
    let sa: Complex64 = (1..=a.len() as i64).map(|l| self_product(a, l)).sum();
    let sb: Complex64 = (1..=b.len() as i64).map(|l| self_product(b, l)).sum();
    sa * sb
}

/// Limiting `cov(Tr Y, Tr Z)` for the given ensemble, where `a = (A_1..A_{2 m1})`
/// and `b = (B_1..B_{2 m2})` are trace-zero and all traces on the right are normalized.
pub fn analytic_rhs(case: ConjugatorCase, a: &[CMatrix], b: &[CMatrix]) -> Result<Complex64, FluctuationError> {
    validate(a, b)?;
    let same_length = a.len() == b.len();
    let zero = Complex64::new(0.0, 0.0);
    let value = match case {
        ConjugatorCase::Case1 if same_length => {
            reversed_term(a, b)
                + (1..=(a.len() / 2) as i64)
                    .map(|l| paired_product(a, b, |k| 2 * l + k - 1, tr_product_transpose))
                    .sum::<Complex64>()
        }
        ConjugatorCase::Case2 if same_length => {
            reversed_term(a, b)
                + (1..=(a.len() / 2) as i64)
                    .map(|l| paired_product(a, b, |k| 2 * l + k - 1, tr_hadamard))
                    .sum::<Complex64>()
        }
        ConjugatorCase::Case3 => {
            let cross = if same_length {
                (1..=a.len() as i64)
                    .map(|l| paired_product(a, b, |k| l - k, tr_product))
                    .sum()
            } else {
                zero
            };
            case3_double_sum(a, b) + cross
        }
        ConjugatorCase::HaarLike if same_length => reversed_term(a, b),
        _ => zero,
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_complex_matrix;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn centered(m: CMatrix) -> CMatrix {
        let n = m.nrows();
        let t = m.diag().sum() / n as f64;
        let mut m = m;
        m.diag_mut().mapv_inplace(|z| z - t);
        m
    }

    fn random_inputs(seed: u64, count: usize, n: usize) -> Vec<CMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| centered(random_complex_matrix(&mut rng, n)))
            .collect()
    }

    fn diag(values: &[f64]) -> CMatrix {
        Array2::from_diag(&ndarray::Array1::from(values.to_vec())).mapv(|x| Complex64::new(x, 0.0))
    }

    #[test]
    fn cyclic_indices() {
        assert_eq!(cyclic_index(0, 4), 4);
        assert_eq!(cyclic_index(5, 4), 1);
        assert_eq!(cyclic_index(-1, 4), 3);
        assert_eq!(cyclic_index(4, 4), 4);
    }

    #[test]
    fn hand_evaluated_example() {
        let d = diag(&[1.0, -1.0]);
        let a = vec![d.clone(), d.clone()];
        let v = analytic_rhs(ConjugatorCase::Case1, &a, &a).unwrap();
        assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        let v = analytic_rhs(ConjugatorCase::HaarLike, &a, &a).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn vanishing_cases() {
        let a = random_inputs(1, 2, 3);
        let b = random_inputs(2, 4, 3);
        for case in [ConjugatorCase::Case1, ConjugatorCase::Case2, ConjugatorCase::HaarLike] {
            assert_eq!(analytic_rhs(case, &a, &b).unwrap(), Complex64::new(0.0, 0.0));
        }
        let mut z = a.clone();
        z[0] = CMatrix::zeros((3, 3));
        for case in ConjugatorCase::ALL {
            assert_eq!(analytic_rhs(case, &z, &a).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn input_validation() {
        let a = random_inputs(3, 2, 3);
        let bad = vec![CMatrix::eye(3), a[1].clone()];
        assert!(matches!(
            analytic_rhs(ConjugatorCase::Case1, &bad, &a),
            Err(FluctuationError::TraceNotZero { index: 1, .. })
        ));
        let small = random_inputs(4, 2, 2);
        assert!(matches!(
            analytic_rhs(ConjugatorCase::Case1, &a, &small),
            Err(FluctuationError::DimensionMismatch { .. })
        ));
        assert!(analytic_rhs(ConjugatorCase::Case1, &a[..1], &a).is_err());
    }

    #[test]
    fn multilinear_in_each_input() {
        let a = random_inputs(5, 2, 4);
        let b = random_inputs(6, 2, 4);
        let lambda = Complex64::new(1.5, -0.25);
        for case in ConjugatorCase::ALL {
            let base = analytic_rhs(case, &a, &b).unwrap();
            for k in 0..4 {
                let (mut a2, mut b2) = (a.clone(), b.clone());
                if k < 2 {
                    a2[k] = a2[k].mapv(|z| z * lambda);
                } else {
                    b2[k - 2] = b2[k - 2].mapv(|z| z * lambda);
                }
                let scaled = analytic_rhs(case, &a2, &b2).unwrap();
                assert!((scaled - base * lambda).norm() < 1e-10, "{case} {k}");
            }
        }
    }

    #[test]
    fn haar_like_is_case1_without_transpose_term() {
        for (m, seed) in [(1, 7), (2, 8), (3, 9)] {
            let a = random_inputs(seed, 2 * m, 3);
            let b = random_inputs(seed + 100, 2 * m, 3);
            let c1 = analytic_rhs(ConjugatorCase::Case1, &a, &b).unwrap();
            let h = analytic_rhs(ConjugatorCase::HaarLike, &a, &b).unwrap();
            let transpose: Complex64 = (1..=m as i64)
                .map(|l| paired_product(&a, &b, |k| 2 * l + k - 1, tr_product_transpose))
                .sum();
            assert!((c1 - h - transpose).norm() < 1e-12);
        }
    }

    #[test]
    fn case3_full_period_sum_is_twice_the_half_period_form() {
        for (m1, m2) in [(1, 1), (1, 2), (2, 3), (3, 3)] {
            let a = random_inputs(11 + m1 as u64, 2 * m1, 3);
            let b = random_inputs(17 + m2 as u64, 2 * m2, 3);
            let half = case3_double_sum(&a, &b);
            let full = case3_full_period_double_sum(&a, &b);
            assert!((full - 2.0 * half).norm() < 1e-10 * (1.0 + full.norm()), "({m1},{m2})");
        }
    }
}
