//! Exact small-`N` check of the covariance decomposition
//!
//! `cov(Tr Y, Tr Z) = sum_{theta in P_chi} [sum_{pi even <= theta} c2[pi] mu(pi, theta)] G_theta(A, B)`,
//!
//! where `P_chi` holds the even partitions of `[±2m]` without blocks `{k, -k}`,
//! `G_theta` is the graph sum on `(A_1, ..., A_{2 m1}, B_1, ..., B_{2 m2})`, and
//! `c2[pi]` is the covariance of the two products of entries of `V = U_1^* U_2`
//! (alternating with `V^*`) read along `sigma`, at any index tuple with kernel `pi`.

use num_complex::Complex64;

use super::FluctuationError;
use crate::dft_gauss::TwoBlockShape;
use crate::ensembles::{for_each_conjugator_pair, CompensatedSum, ConjugatorCase};
use crate::graph_sum::{evaluate_graph_sum, KernelConstraint, DEFAULT_BUDGET};
use crate::linalg::{adjoint, trace, CMatrix};
use crate::partition::{enumerate, mobius, GroundSet, PartitionFilter, SetPartition};

/// Both sides of the decomposition and their distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

fn is_chi(pi: &SetPartition) -> bool {
    !pi.blocks().iter().any(|b| b.len() == 2 && b[0] == -b[1])
}

/// Runs the check for `m1 = m2 = 1` with trace-zero inputs `a = (A_1, A_2)`, `b = (B_1, B_2)`.
pub fn exact_cov_decomposition_check(
    case: ConjugatorCase,
    a: &[CMatrix],
    b: &[CMatrix],
) -> Result<ExactCheck, FluctuationError> {
    if a.len() != 2 || b.len() != 2 {
        return Err(FluctuationError::SpecInvalid(
            "the exact decomposition check needs m1 = m2 = 1".into(),
        ));
    }
    let n = a[0].nrows();
    for (index, m) in a.iter().chain(b).enumerate() {
        if m.nrows() != n || m.ncols() != n {
            return Err(FluctuationError::DimensionMismatch { index: index + 1, n });
        }
    }
    let shape = TwoBlockShape::new(1, 1)?;
    let sigma = shape.sigma();
    let ground = GroundSet::signed(4);
    let evens: Vec<SetPartition> = enumerate(&ground, PartitionFilter::Even)?.collect();
    // entry coordinates (row, column) of each factor for every even partition
    let coordinates: Vec<Option<[(usize, usize); 4]>> = evens
        .iter()
        .map(|pi| {
            (pi.block_count() <= n).then(|| {
                let j = |x: i32| pi.block_of(x).expect("ground");
                std::array::from_fn(|k| {
                    let k = k as i32 + 1;
                    (j(sigma.apply(-k).expect("ground")), j(sigma.apply(k).expect("ground")))
                })
            })
        })
        .collect();

    let mut e_yz = CompensatedSum::default();
    let mut e_y = CompensatedSum::default();
    let mut e_z = CompensatedSum::default();
    let mut e_pq = vec![CompensatedSum::default(); evens.len()];
    let mut e_p = vec![CompensatedSum::default(); evens.len()];
    let mut e_q = vec![CompensatedSum::default(); evens.len()];
    let count = for_each_conjugator_pair(case, n, |u| {
        let u1 = u[0].to_dense();
        let u2 = u[1].to_dense();
        let (u1s, u2s) = (adjoint(&u1), adjoint(&u2));
        let c = |m: &CMatrix, u: &CMatrix, us: &CMatrix| u.dot(m).dot(us);
        let y = trace(&c(&a[0], &u1, &u1s).dot(&c(&a[1], &u2, &u2s)));
        let z = trace(&c(&b[0], &u1, &u1s).dot(&c(&b[1], &u2, &u2s)));
        e_yz.add(y * z);
        e_y.add(y);
        e_z.add(z);
        let v = u1s.dot(&u2);
        let vs = adjoint(&v);
        for (i, coords) in coordinates.iter().enumerate() {
            let Some(c) = coords else { continue };
            let p = v[c[0]] * vs[c[1]];
            let q = v[c[2]] * vs[c[3]];
            e_pq[i].add(p * q);
            e_p[i].add(p);
            e_q[i].add(q);
        }
    })?;
    let mean = |s: &CompensatedSum| s.value() / count as f64;
    let lhs = mean(&e_yz) - mean(&e_y) * mean(&e_z);
    let c2: Vec<Complex64> = (0..evens.len())
        .map(|i| mean(&e_pq[i]) - mean(&e_p[i]) * mean(&e_q[i]))
        .collect();

    let matrices: Vec<CMatrix> = a.iter().chain(b).cloned().collect();
    let mut rhs = Complex64::new(0.0, 0.0);
    for theta in evens.iter().filter(|t| is_chi(t)) {
        let mut weight = Complex64::new(0.0, 0.0);
        for (pi, c) in evens.iter().zip(&c2) {
            let mu = mobius(pi, theta)?;
            if mu != 0 {
                weight += *c * mu as f64;
            }
        }
        if weight != Complex64::new(0.0, 0.0) {
            rhs += weight * evaluate_graph_sum(theta, &matrices, KernelConstraint::AtLeast, DEFAULT_BUDGET)?;
        }
    }
    Ok(ExactCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).norm(),
    })
}
