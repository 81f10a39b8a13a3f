//! The DFT matrix, exponential sums attached to partitions, generalized
//! Gauss sums, and symmetric pairings whose partition polynomial vanishes.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::graph_sum::{coarsenings, edge_count, GraphSumError, KernelConstraint};
use crate::linalg::CMatrix;
use crate::partition::{
    enumerate, mobius, GroundSet, PartitionError, PartitionFilter, SetPartition, SignedPermutationMap,
};

/// Default ceiling on `N^{#blocks}` for exponential sums.
pub const DEFAULT_H_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DftGaussError {
    #[error("the partition must live on [±m]")]
    WrongGroundSet,
    #[error("exponential sum needs {needed} terms, over the budget of {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },
    #[error("Gauss sum parameters need ac + b even (a={a}, b={b}, c={c})")]
    ParityViolation { a: i64, b: i64, c: i64 },
    #[error("Gauss sum parameters need a and c nonzero")]
    ZeroModulus,
    #[error("two-block shape ({m1},{m2}) is outside the supported range")]
    ShapeTooLarge { m1: usize, m2: usize },
    #[error("ground set of size {0} is too large for an exhaustive refinement search")]
    GroundTooLarge(usize),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

impl From<GraphSumError> for DftGaussError {
    fn from(e: GraphSumError) -> Self {
        match e {
            GraphSumError::Partition(p) => DftGaussError::Partition(p),
            _ => DftGaussError::WrongGroundSet,
        }
    }
}

fn root_of_unity(numerator: i64, n: usize) -> Complex64 {
    let r = numerator.rem_euclid(n as i64);
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64)
}

/// `H(j1, j2) = w^{(j1-1)(j2-1)}` with `w = exp(-2 pi i / N)`, zero-based here.
pub fn dft_matrix(n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |(a, b)| root_of_unity(-((a * b) as i64), n))
}

/// The partition polynomial: an integer quadratic form with no linear part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    r: usize,
    /// Row-major `r x r`, only `t <= s` entries are used.
    coefficients: Vec<i64>,
}

impl QuadraticForm {
    pub fn zero(r: usize) -> Self {
        Self {
            r,
            coefficients: vec![0; r * r],
        }
    }

    pub fn variables(&self) -> usize {
        self.r
    }

    /// Coefficient of `x_t x_s` (zero-based, order-insensitive).
    pub fn coefficient(&self, t: usize, s: usize) -> i64 {
        let (t, s) = (t.min(s), t.max(s));
        self.coefficients[t * self.r + s]
    }

    pub fn add_term(&mut self, t: usize, s: usize, c: i64) {
        let (t, s) = (t.min(s), t.max(s));
        self.coefficients[t * self.r + s] += c;
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0)
    }

    pub fn evaluate(&self, x: &[i64]) -> i64 {
        let mut total = 0;
        for t in 0..self.r {
            for s in t..self.r {
                total += self.coefficient(t, s) * x[t] * x[s];
            }
        }
        total
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for t in 0..self.r {
            for s in t..self.r {
                let c = self.coefficient(t, s);
                if c == 0 {
                    continue;
                }
                let sign = if c < 0 {
                    "-"
                } else if first {
                    ""
                } else {
                    "+"
                };
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{sign}")?;
                if !first {
                    write!(f, " ")?;
                }
                if c.abs() != 1 {
                    write!(f, "{}", c.abs())?;
                }
                if t == s {
                    write!(f, "x{}^2", t + 1)?;
                } else {
                    write!(f, "x{}x{}", t + 1, s + 1)?;
                }
                first = false;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `sum_k (-1)^k x_{B(-k)} x_{B(k)}` with one variable per block of `pi`.
pub fn partition_polynomial(pi: &SetPartition) -> Result<QuadraticForm, DftGaussError> {
    let m = edge_count(pi).map_err(|_| DftGaussError::WrongGroundSet)?;
    let mut q = QuadraticForm::zero(pi.block_count());
    for k in 1..=m as i32 {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        q.add_term(pi.block_of(-k).expect("ground"), pi.block_of(k).expect("ground"), sign);
    }
    Ok(q)
}

/// `sum_{x in (Z/N)^r} exp(2 pi i q(x) / N)`, computed by summing the last
/// variable in closed form over a precomputed table.
pub fn quadratic_exponential_sum(q: &QuadraticForm, n: usize) -> Complex64 {
    let r = q.variables();
    if q.is_zero() {
        return Complex64::new((n as f64).powi(r as i32), 0.0);
    }
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let nn = n as i64;
    let roots: Vec<Complex64> = (0..nn).map(|t| root_of_unity(t, n)).collect();
    let last = r - 1;
    let a_last = q.coefficient(last, last).rem_euclid(nn);
    // inner[c] = sum_y exp(2 pi i (a_last y^2 + c y) / N)
    let inner: Vec<Complex64> = (0..nn)
        .map(|c| {
            (0..nn)
                .map(|y| roots[((a_last * y % nn * y + c * y) % nn) as usize])
                .sum()
        })
        .collect();
    // linear[t][u] = coefficient coupling outer variable u to the partial sums of level t
    let coef: Vec<Vec<i64>> = (0..r)
        .map(|t| (0..r).map(|s| q.coefficient(t, s).rem_euclid(nn)).collect())
        .collect();
    let mut state = vec![0i64; r];
    let mut total = Complex64::new(0.0, 0.0);
    recurse(0, last, 0, &mut state, &coef, nn, &roots, &inner, &mut total);
    total
}

/// `lin[s]` accumulates `sum_{t assigned} a_{t,s} x_t` for unassigned `s`.
#[allow(clippy::too_many_arguments)]
fn recurse(
    depth: usize,
    last: usize,
    phase: i64,
    lin: &mut Vec<i64>,
    coef: &[Vec<i64>],
    n: i64,
    roots: &[Complex64],
    inner: &[Complex64],
    total: &mut Complex64,
) {
    if depth == last {
        *total += roots[phase as usize] * inner[lin[last] as usize];
        return;
    }
    let saved = lin.clone();
    let diag = coef[depth][depth];
    for x in 0..n {
        let p = (phase + (diag * x % n) * x + lin[depth] * x) % n;
        for s in depth + 1..=last {
            lin[s] = (saved[s] + coef[depth][s] * x) % n;
        }
        recurse(depth + 1, last, p, lin, coef, n, roots, inner, total);
    }
    *lin = saved;
}

fn check_h_budget(n: usize, blocks: usize, budget: u64) -> Result<(), DftGaussError> {
    let needed = (n as f64).powi(blocks as i32);
    if needed > budget as f64 {
        return Err(DftGaussError::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// The graph sum of `pi` on `(H, H^*, H, H^*, ...)`, i.e. the exponential sum
/// of the partition polynomial. With `Exactly`, only index tuples whose kernel
/// equals `pi` are kept (Möbius inversion over coarser partitions).
pub fn h_graph_sum(
    pi: &SetPartition,
    n: usize,
    constraint: KernelConstraint,
    budget: u64,
) -> Result<Complex64, DftGaussError> {
    check_h_budget(n, pi.block_count(), budget)?;
    match constraint {
        KernelConstraint::AtLeast => Ok(quadratic_exponential_sum(&partition_polynomial(pi)?, n)),
        KernelConstraint::Exactly => {
            let mut total = Complex64::new(0.0, 0.0);
            for theta in coarsenings(pi)? {
                let mu = mobius(pi, &theta)?;
                total += mu as f64 * quadratic_exponential_sum(&partition_polynomial(&theta)?, n);
            }
            Ok(total)
        }
    }
}

/// Parameters of `S(a, b, c) = sum_{j=0}^{|c|-1} exp(pi i (a j^2 + b j) / c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussSumParams {
    a: i64,
    b: i64,
    c: i64,
}

impl GaussSumParams {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self, DftGaussError> {
        if a == 0 || c == 0 {
            return Err(DftGaussError::ZeroModulus);
        }
        if (a * c + b).rem_euclid(2) != 0 {
            return Err(DftGaussError::ParityViolation { a, b, c });
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn c(&self) -> i64 {
        self.c
    }
}

/// `exp(pi i num / den)` with the numerator reduced modulo `2 |den|`.
fn half_turn(num: i128, den: i128) -> Complex64 {
    let r = num.rem_euclid(2 * den.abs());
    Complex64::from_polar(1.0, PI * r as f64 / den as f64)
}

fn raw_gauss_sum(a: i64, b: i64, c: i64) -> Complex64 {
    let (a, b, c) = (a as i128, b as i128, c as i128);
    (0..c.abs()).map(|j| half_turn(a * j * j + b * j, c)).sum()
}

pub fn gauss_sum(p: &GaussSumParams) -> Complex64 {
    raw_gauss_sum(p.a, p.b, p.c)
}

/// Right-hand side of the reciprocity law:
/// `|c/a|^{1/2} exp(pi i (|ac| - b^2) / (4ac)) S(-c, -b, a)`.
pub fn reciprocity_rhs(p: &GaussSumParams) -> Complex64 {
    let (a, b, c) = (p.a as i128, p.b as i128, p.c as i128);
    let scale = ((p.c as f64) / (p.a as f64)).abs().sqrt();
    scale * half_turn((a * c).abs() - b * b, 4 * a * c) * raw_gauss_sum(-p.c, -p.b, p.a)
}

pub fn reciprocity_residual(p: &GaussSumParams) -> f64 {
    (gauss_sum(p) - reciprocity_rhs(p)).norm()
}

/// The two-cycle permutation `(-1,1,-2,2,...,-2m1,2m1)(-2m1-1,2m1+1,...,-2m,2m)` of `[±2m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoBlockShape {
    m1: usize,
    m2: usize,
    sigma: SignedPermutationMap,
}

impl TwoBlockShape {
    pub fn new(m1: usize, m2: usize) -> Result<Self, DftGaussError> {
        if m1 == 0 || m2 == 0 {
            return Err(DftGaussError::ShapeTooLarge { m1, m2 });
        }
        let (e1, e2) = (2 * m1 as i32, 2 * (m1 + m2) as i32);
        let sigma = SignedPermutationMap::from_fn(GroundSet::signed(e2 as usize), |k| {
            if k < 0 {
                -k
            } else if k == e1 {
                -1
            } else if k == e2 {
                -(e1 + 1)
            } else {
                -(k + 1)
            }
        })?;
        Ok(Self { m1, m2, sigma })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn sigma(&self) -> &SignedPermutationMap {
        &self.sigma
    }

    /// `sigma^t(x)`.
    pub fn orbit(&self, x: i32, t: i64) -> i32 {
        let cycle = if x.unsigned_abs() as usize <= 2 * self.m1 {
            self.m1
        } else {
            self.m2
        };
        let steps = t.rem_euclid(4 * cycle as i64);
        let mut y = x;
        for _ in 0..steps {
            y = self.sigma.apply(y).expect("in ground");
        }
        y
    }
}

/// Which of the classifying conditions produced a pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifiedPairing {
    pub partition: SetPartition,
    /// Condition numbers 1 to 6 that generate this pairing.
    pub conditions: Vec<u8>,
}

/// Generates every symmetric pairing `pi` of `[±2m]` whose twisted polynomial
/// `p_{sigma^{-1} pi}` vanishes, by the six orbit constructions.
pub fn classify_zero_pairings(shape: &TwoBlockShape) -> Result<Vec<ClassifiedPairing>, DftGaussError> {
    let (m1, m2) = (shape.m1, shape.m2);
    if m1 + m2 > 4 {
        return Err(DftGaussError::ShapeTooLarge { m1, m2 });
    }
    let m = 2 * (m1 + m2) as i32;
    let e1 = 2 * m1 as i32;
    let p = |x: i32, t: i64| shape.orbit(x, t);
    let p3 = |k: i32, len: usize| -> Vec<Vec<i32>> { (1..=2 * len as i64).map(|t| vec![p(-k, t), p(k, -t)]).collect() };
    let p4 = |base: i32, len: usize| -> Vec<Vec<i32>> {
        (1..=2 * len as i64)
            .map(|t| vec![p(-base - 1, t), p(-base - len as i32 - 1, t)])
            .collect()
    };
    let mut candidates: Vec<(u8, Vec<Vec<i32>>)> = Vec::new();
    if m1 == m2 {
        for k in 1..=2 * m2 as i32 {
            for l in e1 + 1..=m {
                let blocks = if (k + l) % 2 == 0 {
                    (1, (1..=4 * m1 as i64).map(|t| vec![p(-k, t), p(l, -t)]).collect())
                } else {
                    (2, (1..=4 * m1 as i64).map(|t| vec![p(-k, t), p(-l, t)]).collect())
                };
                candidates.push(blocks);
            }
        }
    }
    for k in 1..=e1 {
        for l in e1 + 1..=m {
            candidates.push((3, [p3(k, m1), p3(l, m2)].concat()));
        }
    }
    if m1 % 2 == 1 && m2 % 2 == 1 {
        candidates.push((4, [p4(0, m1), p4(e1, m2)].concat()));
    }
    if m2 % 2 == 1 {
        for k in 1..=e1 {
            candidates.push((5, [p3(k, m1), p4(e1, m2)].concat()));
        }
    }
    if m1 % 2 == 1 {
        for l in e1 + 1..=m {
            candidates.push((6, [p4(0, m1), p3(l, m2)].concat()));
        }
    }
    let ground = GroundSet::signed(m as usize);
    let mut out: Vec<ClassifiedPairing> = Vec::new();
    for (cond, mut blocks) in candidates {
        blocks.iter_mut().for_each(|b| b.sort_unstable());
        blocks.sort_unstable();
        blocks.dedup();
        let Ok(pi) = SetPartition::from_blocks(ground.clone(), &blocks) else {
            continue;
        };
        if !pi.is_pairing() || !pi.is_symmetric()? {
            continue;
        }
        match out.iter_mut().find(|c| c.partition == pi) {
            Some(c) => {
                if !c.conditions.contains(&cond) {
                    c.conditions.push(cond);
                }
            }
            None => out.push(ClassifiedPairing {
                partition: pi,
                conditions: vec![cond],
            }),
        }
    }
    out.sort_by(|a, b| a.partition.cmp(&b.partition));
    Ok(out)
}

/// Exhaustive scan: symmetric pairings `pi` of `[±2m]` with `p_{sigma^{-1} pi} = 0`.
pub fn zero_pairings_by_scan(shape: &TwoBlockShape) -> Result<BTreeSet<SetPartition>, DftGaussError> {
    let ground = GroundSet::signed(2 * (shape.m1 + shape.m2));
    let inverse = shape.sigma.inverse();
    let mut out = BTreeSet::new();
    for pi in enumerate(&ground, PartitionFilter::SymmetricPairings)? {
        if partition_polynomial(&inverse.act(&pi)?)?.is_zero() {
            out.insert(pi);
        }
    }
    Ok(out)
}

/// Checks the orbit relations on a pairing: `-k ~ l` forces
/// `sigma^{-t}(-k) ~ sigma^t(l)`, and `-k ~ -l` forces `sigma^t(-k) ~ sigma^t(-l)`,
/// for `t` in `0..=4m`. Returns the first violation `(k, l, t)`.
pub fn orbit_violation(shape: &TwoBlockShape, pi: &SetPartition) -> Option<(i32, i32, i64)> {
    let m = 2 * (shape.m1 + shape.m2) as i32;
    let same = |x: i32, y: i32| pi.block_of(x) == pi.block_of(y);
    for k in 1..=m {
        for l in 1..=m {
            if same(-k, l) {
                for t in 0..=2 * m as i64 {
                    if !same(shape.orbit(-k, -t), shape.orbit(l, t)) {
                        return Some((-k, l, t));
                    }
                }
            }
            if k != l && same(-k, -l) {
                for t in 0..=2 * m as i64 {
                    if !same(shape.orbit(-k, t), shape.orbit(-l, t)) {
                        return Some((-k, -l, t));
                    }
                }
            }
        }
    }
    None
}

/// A symmetric pairing `theta <= pi` with vanishing polynomial, if `p_pi = 0`.
pub fn minimal_zero_witness(pi: &SetPartition) -> Result<Option<SetPartition>, DftGaussError> {
    if pi.ground().len() > 16 {
        return Err(DftGaussError::GroundTooLarge(pi.ground().len()));
    }
    if !partition_polynomial(pi)?.is_zero() {
        return Ok(None);
    }
    // pairings refining pi: pair up elements inside each block
    let mut found = None;
    search_refining_pairings(pi.blocks(), &mut Vec::new(), &mut |blocks| {
        let theta = SetPartition::from_blocks(pi.ground().clone(), blocks).expect("covers ground");
        if theta.is_symmetric().unwrap_or(false) && partition_polynomial(&theta).map(|q| q.is_zero()).unwrap_or(false) {
            found = Some(theta);
            true
        } else {
            false
        }
    });
    Ok(found)
}

fn search_refining_pairings(
    blocks: &[Vec<i32>],
    acc: &mut Vec<Vec<i32>>,
    visit: &mut impl FnMut(&[Vec<i32>]) -> bool,
) -> bool {
    let Some((first, rest)) = blocks.split_first() else {
        return visit(acc);
    };
    if first.is_empty() {
        return search_refining_pairings(rest, acc, visit);
    }
    if first.len() % 2 == 1 {
        return false;
    }
    let a = first[0];
    for i in 1..first.len() {
        let remaining: Vec<i32> = first[1..].iter().copied().filter(|&x| x != first[i]).collect();
        acc.push(vec![a, first[i]]);
        let mut next = vec![remaining];
        next.extend_from_slice(rest);
        if search_refining_pairings(&next, acc, visit) {
            return true;
        }
        acc.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_sum::{evaluate_graph_sum, DEFAULT_BUDGET};
    use crate::linalg::adjoint;

    fn p(s: &str) -> SetPartition {
        s.parse().unwrap()
    }

    #[test]
    fn dft_matrix_basics() {
        assert_eq!(dft_matrix(1)[(0, 0)], Complex64::new(1.0, 0.0));
        let h2 = dft_matrix(2);
        assert!((h2[(1, 1)] + 1.0).norm() < 1e-15);
        let h4 = dft_matrix(4);
        assert!((h4[(1, 1)] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        let h = dft_matrix(7);
        let hh = h.dot(&adjoint(&h));
        for ((i, j), v) in hh.indexed_iter() {
            let want = if i == j { 7.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-12);
            assert_eq!(h[(i, j)], h[(j, i)]);
        }
    }

    #[test]
    fn polynomial_of_worked_example() {
        let q = partition_polynomial(&p("{{-1,3},{-3,1},{-2,2},{-4,4}}")).unwrap();
        assert_eq!(q.coefficient(0, 1), -2);
        assert_eq!(q.coefficient(2, 2), 1);
        assert_eq!(q.coefficient(3, 3), 1);
        assert_eq!(q.to_string(), "-2x1x2 + x3^2 + x4^2");
        assert!(partition_polynomial(&p("{{-1,-2},{1,2}}")).unwrap().is_zero());
        let diag = partition_polynomial(&p("{{-1,1},{-2,2},{-3,3},{-4,4}}")).unwrap();
        assert_eq!(diag.to_string(), "-x1^2 + x2^2 - x3^2 + x4^2");
    }

    #[test]
    fn h_sum_matches_graph_sum_on_dft_matrices() {
        for n in [3, 4, 5] {
            let h = dft_matrix(n);
            let hs = adjoint(&h);
            let mats = vec![h.clone(), hs.clone(), h, hs];
            for pi in enumerate(&GroundSet::signed(4), PartitionFilter::All)
                .unwrap()
                .step_by(37)
            {
                let direct = evaluate_graph_sum(&pi, &mats, KernelConstraint::AtLeast, DEFAULT_BUDGET).unwrap();
                let fast = h_graph_sum(&pi, n, KernelConstraint::AtLeast, DEFAULT_H_BUDGET).unwrap();
                assert!((direct - fast).norm() < 1e-8, "{pi} N={n}");
                let direct = evaluate_graph_sum(&pi, &mats, KernelConstraint::Exactly, DEFAULT_BUDGET).unwrap();
                let fast = h_graph_sum(&pi, n, KernelConstraint::Exactly, DEFAULT_H_BUDGET).unwrap();
                assert!((direct - fast).norm() < 1e-8, "{pi} N={n}");
            }
        }
    }

    #[test]
    fn h_sum_evaluates_polynomial_brute_force() {
        let pi = p("{{-1,3},{-3,1},{-2,2},{-4,4}}");
        let q = partition_polynomial(&pi).unwrap();
        let n = 6usize;
        let mut brute = Complex64::new(0.0, 0.0);
        for idx in 0..n.pow(4) {
            let x: Vec<i64> = (0..4).map(|d| ((idx / n.pow(d)) % n) as i64).collect();
            brute += Complex64::from_polar(1.0, 2.0 * PI * q.evaluate(&x) as f64 / n as f64);
        }
        let fast = h_graph_sum(&pi, n, KernelConstraint::AtLeast, DEFAULT_H_BUDGET).unwrap();
        assert!((brute - fast).norm() < 1e-9);
    }

    #[test]
    fn diagonal_pairing_is_strictly_below_bound() {
        let pi = p("{{-1,1},{-2,2}}");
        let v = h_graph_sum(&pi, 5, KernelConstraint::AtLeast, DEFAULT_H_BUDGET).unwrap();
        assert!(v.norm() < 25.0 - 1e-6);
        let zero = p("{{-1,-2},{1,2}}");
        let v = h_graph_sum(&zero, 5, KernelConstraint::AtLeast, DEFAULT_H_BUDGET).unwrap();
        assert_eq!(v, Complex64::new(25.0, 0.0));
    }

    #[test]
    fn exact_sums_reconstitute_at_least_sum() {
        let n = 6;
        for pi in enumerate(&GroundSet::signed(2), PartitionFilter::All).unwrap() {
            let total: Complex64 = coarsenings(&pi)
                .unwrap()
                .iter()
                .map(|theta| h_graph_sum(theta, n, KernelConstraint::Exactly, DEFAULT_H_BUDGET).unwrap())
                .sum();
            let at_least = h_graph_sum(&pi, n, KernelConstraint::AtLeast, DEFAULT_H_BUDGET).unwrap();
            assert!((total - at_least).norm() < 1e-9, "{pi}");
        }
    }

    #[test]
    fn h_budget_is_enforced() {
        let pi = SetPartition::zero(GroundSet::signed(4));
        assert!(matches!(
            h_graph_sum(&pi, 20, KernelConstraint::AtLeast, 1_000_000),
            Err(DftGaussError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn gauss_sum_values_and_errors() {
        let s = gauss_sum(&GaussSumParams::new(2, 0, 1).unwrap());
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // classical quadratic Gauss sum: sum_j exp(2 pi i j^2 / 5) = sqrt(5)
        let s = gauss_sum(&GaussSumParams::new(2, 0, 5).unwrap());
        assert!((s - Complex64::new(5f64.sqrt(), 0.0)).norm() < 1e-12);
        assert_eq!(GaussSumParams::new(0, 0, 1), Err(DftGaussError::ZeroModulus));
        assert!(matches!(
            GaussSumParams::new(1, 0, 1),
            Err(DftGaussError::ParityViolation { .. })
        ));
    }

    #[test]
    fn gauss_sum_bound_spot_checks() {
        for alpha in [-3i64, -1, 1, 2, 5] {
            for beta in [-4i64, 0, 2, 6] {
                for n in [3i64, 8, 11, 16] {
                    let s = gauss_sum(&GaussSumParams::new(-2 * alpha, beta, n).unwrap());
                    assert!(s.norm() <= ((2 * alpha * n).abs() as f64).sqrt() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn reciprocity_spot_checks() {
        for (a, b, c) in [(1, 1, 1), (2, 0, 5), (-3, 1, 7), (4, 2, -9), (-5, -3, -11)] {
            let g = GaussSumParams::new(a, b, c).unwrap();
            assert!(reciprocity_residual(&g) < 1e-10, "{a} {b} {c}");
        }
    }

    #[test]
    fn two_block_sigma_has_expected_cycles() {
        let s = TwoBlockShape::new(2, 1).unwrap();
        assert_eq!(s.sigma().cycle_lengths(), vec![8, 4]);
        assert_eq!(s.orbit(-1, 1), 1);
        assert_eq!(s.orbit(1, 1), -2);
        assert_eq!(s.orbit(4, 1), -1);
        assert_eq!(s.orbit(6, 1), -5);
        assert_eq!(s.orbit(-1, -1), 4);
    }

    #[test]
    fn pairing_characterization() {
        for m in 1..=2 {
            for pi in enumerate(&GroundSet::signed(2 * m), PartitionFilter::Pairings).unwrap() {
                let zero = partition_polynomial(&pi).unwrap().is_zero();
                let odd_sums = pi.blocks().iter().all(|b| (b[0] + b[1]).rem_euclid(2) == 1);
                assert_eq!(zero, pi.is_symmetric().unwrap() && odd_sums, "{pi}");
            }
        }
    }

    #[test]
    fn refinement_preserves_vanishing() {
        for m in [1usize, 3] {
            let all: Vec<_> = enumerate(&GroundSet::signed(m), PartitionFilter::All)
                .unwrap()
                .collect();
            let zeros: Vec<_> = all
                .iter()
                .filter(|t| partition_polynomial(t).unwrap().is_zero())
                .collect();
            for theta in &zeros {
                for pi in coarsenings(theta).unwrap() {
                    assert!(partition_polynomial(&pi).unwrap().is_zero(), "{theta} <= {pi}");
                }
            }
        }
    }

    #[test]
    fn witnesses() {
        let one = SetPartition::one(GroundSet::signed(2));
        let w = minimal_zero_witness(&one).unwrap().unwrap();
        assert!(w == p("{{-1,-2},{1,2}}") || w == p("{{-1,2},{1,-2}}"));
        assert_eq!(minimal_zero_witness(&p("{{-1,1},{-2,2}}")).unwrap(), None);
        let sym = p("{{-1,-2},{1,2},{-3,-4},{3,4}}");
        assert_eq!(minimal_zero_witness(&sym).unwrap(), Some(sym.clone()));
        for pi in enumerate(&GroundSet::signed(4), PartitionFilter::All)
            .unwrap()
            .step_by(11)
        {
            if let Some(theta) = minimal_zero_witness(&pi).unwrap() {
                assert!(theta.refines(&pi).unwrap());
                assert!(theta.is_pairing());
            }
        }
    }

    #[test]
    fn classification_on_larger_shapes_matches_scan() {
        for (m1, m2) in [(1, 3), (3, 1)] {
            let shape = TwoBlockShape::new(m1, m2).unwrap();
            let classified: BTreeSet<_> = classify_zero_pairings(&shape)
                .unwrap()
                .into_iter()
                .map(|c| c.partition)
                .collect();
            assert_eq!(classified, zero_pairings_by_scan(&shape).unwrap());
        }
        assert!(classify_zero_pairings(&TwoBlockShape::new(3, 2).unwrap()).is_err());
    }
}
