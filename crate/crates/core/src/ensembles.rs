//! Signature and signed permutation matrices, the conjugating unitaries of
//! the four ensembles, exact group averages for small `N`, and the centered
//! deterministic matrices `A_k = p_k(D) - tr(p_k(D)) I`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use itertools::Itertools;
use ndarray::Array2;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{random_orthogonal, to_complex, CMatrix, Factor, FftPair, RMatrix};
use crate::partition::IndexTuple;

/// Largest `N` for exact enumeration over signed permutations alone (`N! 2^N = 3840`).
pub const EXACT_MAX_N: usize = 5;
/// Largest `N` for exact enumeration over two independent finite groups.
pub const EXACT_MAX_N_PRODUCT: usize = 4;

const SELF_ADJOINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("index tuples live on different domains")]
    DomainMismatch,
    #[error("exact enumeration at N={n} exceeds the limit of {limit}")]
    TooLargeForExactEnumeration { n: usize, limit: usize },
    #[error("invalid ensemble: {0}")]
    SpecInvalid(String),
    #[error("matrix is not symmetric: entries ({i},{j}) differ by {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("could not read matrix file {path}: {reason}")]
    MatrixFile { path: String, reason: String },
}

/// `W(i, j) = signs[i] [i = perm[j]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<i8>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self, EnsembleError> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(EnsembleError::SpecInvalid("perm is not a bijection".into()));
            }
        }
        if signs.len() != n || signs.iter().any(|s| s.abs() != 1) {
            return Err(EnsembleError::SpecInvalid("signs must be ±1 of length N".into()));
        }
        Ok(Self { perm, signs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            signs: vec![1; n],
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        if self.perm[j] == i {
            self.signs[i]
        } else {
            0
        }
    }

    pub fn to_dense(&self) -> RMatrix {
        let n = self.n();
        Array2::from_shape_fn((n, n), |(i, j)| f64::from(self.entry(i, j)))
    }

    /// `W M W^*`, i.e. `(i, j) -> s_i s_j M(perm^{-1}(i), perm^{-1}(j))`.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        let n = self.n();
        let mut out = CMatrix::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                let (i, j) = (self.perm[a], self.perm[b]);
                out[(i, j)] = m[(a, b)] * f64::from(self.signs[i] * self.signs[j]);
            }
        }
        out
    }

    /// Diagonal of `W diag(d) W^*`.
    pub fn conjugate_diagonal(&self, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; d.len()];
        for (a, &x) in d.iter().enumerate() {
            out[self.perm[a]] = x;
        }
        out
    }
}

/// Uniform signed permutation: Fisher-Yates shuffle plus independent fair signs.
pub fn sample_signed_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SignedPermutation {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let signs = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    SignedPermutation { perm, signs }
}

/// Diagonal of a uniform signature matrix.
pub fn sample_signature<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Per-sample generator derived from the master seed and the sample index only.
pub fn sample_rng(master_seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(sample_index);
    rng
}

/// Every signed permutation of size `n`, in a fixed order.
pub fn all_signed_permutations(n: usize) -> impl Iterator<Item = SignedPermutation> {
    (0..n).permutations(n).flat_map(move |perm| {
        (0u32..1 << n).map(move |mask| SignedPermutation {
            perm: perm.clone(),
            signs: (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect(),
        })
    })
}

/// Every signature diagonal of size `n`.
pub fn all_signatures(n: usize) -> impl Iterator<Item = Vec<f64>> {
    (0u32..1 << n).map(move |mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
}

fn check_same_domain(i: &IndexTuple, j: &IndexTuple) -> Result<(), EnsembleError> {
    if i.domain() != j.domain() {
        return Err(EnsembleError::DomainMismatch);
    }
    Ok(())
}

/// `E[prod_s X(i_s, j_s)]` for a uniform signature matrix `X`.
pub fn expected_entry_product_signature(i: &IndexTuple, j: &IndexTuple) -> Result<Ratio<i64>, EnsembleError> {
    check_same_domain(i, j)?;
    let hit = i.values() == j.values() && i.kernel().is_even();
    Ok(Ratio::from_integer(i64::from(hit)))
}

/// `E[prod_s W(i_s, j_s)]` for a uniform signed permutation matrix of size `n`:
/// `(N - #pi)! / N!` when `ker i = ker j = pi` is even, zero otherwise
/// (including `#pi > N`, where no permutation realizes the pattern).
pub fn expected_entry_product_signed_perm(
    i: &IndexTuple,
    j: &IndexTuple,
    n: usize,
) -> Result<Ratio<i64>, EnsembleError> {
    check_same_domain(i, j)?;
    let pi = i.kernel();
    if pi != j.kernel() || !pi.is_even() || pi.block_count() > n {
        return Ok(Ratio::from_integer(0));
    }
    let falling: i64 = (n - pi.block_count() + 1..=n).map(|x| x as i64).product();
    Ok(Ratio::new(1, falling))
}

/// Compensated (Neumaier) running sum of complex numbers.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: Complex64) {
        self.sum = Complex64::new(
            neumaier(self.sum.re, x.re, &mut self.carry.re),
            neumaier(self.sum.im, x.im, &mut self.carry.im),
        );
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

fn neumaier(sum: f64, x: f64, carry: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *carry += (sum - t) + x;
    } else {
        *carry += (x - t) + sum;
    }
    t
}

fn check_exact_size(n: usize, include_signature: bool) -> Result<(), EnsembleError> {
    let limit = if include_signature {
        EXACT_MAX_N_PRODUCT
    } else {
        EXACT_MAX_N
    };
    if n > limit {
        return Err(EnsembleError::TooLargeForExactEnumeration { n, limit });
    }
    Ok(())
}

/// Exact average of `f(W, X)` over all signed permutations `W` (and all
/// signatures `X` when requested), with compensated summation.
pub fn exact_expectation_small_n(
    n: usize,
    include_signature: bool,
    mut f: impl FnMut(&SignedPermutation, Option<&[f64]>) -> Complex64,
) -> Result<Complex64, EnsembleError> {
    check_exact_size(n, include_signature)?;
    let mut acc = CompensatedSum::default();
    let mut count = 0u64;
    for w in all_signed_permutations(n) {
        if include_signature {
            for x in all_signatures(n) {
                acc.add(f(&w, Some(&x)));
                count += 1;
            }
        } else {
            acc.add(f(&w, None));
            count += 1;
        }
    }
    Ok(acc.value() / count as f64)
}

/// Exact rational average of `f(W, X)`, for functionals polynomial in the entries.
pub fn exact_expectation_rational(
    n: usize,
    include_signature: bool,
    mut f: impl FnMut(&SignedPermutation, Option<&[f64]>) -> Ratio<i64>,
) -> Result<Ratio<i64>, EnsembleError> {
    check_exact_size(n, include_signature)?;
    let mut acc = Ratio::from_integer(0);
    let mut count = 0i64;
    for w in all_signed_permutations(n) {
        if include_signature {
            for x in all_signatures(n) {
                acc += f(&w, Some(&x));
                count += 1;
            }
        } else {
            acc += f(&w, None);
            count += 1;
        }
    }
    Ok(acc / count)
}

/// Which pair of conjugating unitaries `(U_1, U_2)` is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConjugatorCase {
    /// `(W, H W / sqrt N)`.
    Case1,
    /// `(W, X H W / sqrt N)`.
    Case2,
    /// `(H W / sqrt N, X H W / sqrt N)`.
    Case3,
    /// `(W_1, H W_2 / sqrt N)` with independent `W_1, W_2`.
    HaarLike,
}

impl ConjugatorCase {
    pub const ALL: [ConjugatorCase; 4] = [Self::Case1, Self::Case2, Self::Case3, Self::HaarLike];

    fn uses_signature(self) -> bool {
        matches!(self, Self::Case2 | Self::Case3)
    }
}

impl fmt::Display for ConjugatorCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Case1 => "1",
            Self::Case2 => "2",
            Self::Case3 => "3",
            Self::HaarLike => "haar",
        })
    }
}

impl FromStr for ConjugatorCase {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" | "case1" => Ok(Self::Case1),
            "2" | "case2" => Ok(Self::Case2),
            "3" | "case3" => Ok(Self::Case3),
            "haar" | "haar_like" | "haar-like" => Ok(Self::HaarLike),
            other => Err(EnsembleError::SpecInvalid(format!("unknown case '{other}'"))),
        }
    }
}

/// `U = X^? H^? W / sqrt(N)^?`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjugator {
    pub w: SignedPermutation,
    pub dft: bool,
    pub signature: Option<Vec<f64>>,
}

impl Conjugator {
    pub fn identity(n: usize) -> Self {
        Self {
            w: SignedPermutation::identity(n),
            dft: false,
            signature: None,
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.w.n();
        let mut u = to_complex(&self.w.to_dense());
        if self.dft {
            u = crate::dft_gauss::dft_matrix(n).dot(&u) / (n as f64).sqrt();
        }
        if let Some(x) = &self.signature {
            for (i, mut row) in u.rows_mut().into_iter().enumerate() {
                row.mapv_inplace(|z| z * x[i]);
            }
        }
        u
    }

    /// `U M U^*` in structured form.
    pub fn conjugate(&self, m: &DeterministicMatrix, fft: &FftPair) -> Factor {
        match m {
            DeterministicMatrix::Diagonal(d) => {
                let d = self.w.conjugate_diagonal(d);
                let d: Vec<Complex64> = d.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
                if self.dft {
                    let mut column = d;
                    fft.forward(&mut column);
                    let scale = 1.0 / column.len() as f64;
                    column.iter_mut().for_each(|z| *z *= scale);
                    Factor::circulant(column, self.signature.clone(), fft)
                } else {
                    Factor::Diagonal(d)
                }
            }
            DeterministicMatrix::Dense(a) => {
                let mut c = self.w.conjugate(&to_complex(a));
                if self.dft {
                    c = fft.dft_conjugate(&c);
                }
                if let Some(x) = &self.signature {
                    for ((i, j), z) in c.indexed_iter_mut() {
                        *z *= x[i] * x[j];
                    }
                }
                Factor::Dense(c)
            }
        }
    }
}

/// Samples `(U_1, U_2)` for one Monte Carlo draw.
pub fn sample_conjugators<R: Rng + ?Sized>(case: ConjugatorCase, n: usize, rng: &mut R) -> [Conjugator; 2] {
    let w = sample_signed_permutation(n, rng);
    match case {
        ConjugatorCase::Case1 => conjugator_pair(case, w, None, None),
        ConjugatorCase::Case2 | ConjugatorCase::Case3 => {
            let x = sample_signature(n, rng);
            conjugator_pair(case, w, None, Some(x))
        }
        ConjugatorCase::HaarLike => {
            let w2 = sample_signed_permutation(n, rng);
            conjugator_pair(case, w, Some(w2), None)
        }
    }
}

fn conjugator_pair(
    case: ConjugatorCase,
    w: SignedPermutation,
    w2: Option<SignedPermutation>,
    x: Option<Vec<f64>>,
) -> [Conjugator; 2] {
    let make = |w: SignedPermutation, dft: bool, signature: Option<Vec<f64>>| Conjugator { w, dft, signature };
    match case {
        ConjugatorCase::Case1 => [make(w.clone(), false, None), make(w, true, None)],
        ConjugatorCase::Case2 => [make(w.clone(), false, None), make(w, true, x)],
        ConjugatorCase::Case3 => [make(w.clone(), true, None), make(w, true, x)],
        ConjugatorCase::HaarLike => [make(w, false, None), make(w2.expect("second permutation"), true, None)],
    }
}

/// Calls `f` on every element of the finite group behind `case` (uniform
/// weights) and returns the group order.
pub fn for_each_conjugator_pair(
    case: ConjugatorCase,
    n: usize,
    mut f: impl FnMut(&[Conjugator; 2]),
) -> Result<u64, EnsembleError> {
    let product = case.uses_signature() || case == ConjugatorCase::HaarLike;
    check_exact_size(n, product)?;
    let mut count = 0u64;
    for w in all_signed_permutations(n) {
        match case {
            ConjugatorCase::Case1 => {
                f(&conjugator_pair(case, w, None, None));
                count += 1;
            }
            ConjugatorCase::Case2 | ConjugatorCase::Case3 => {
                for x in all_signatures(n) {
                    f(&conjugator_pair(case, w.clone(), None, Some(x)));
                    count += 1;
                }
            }
            ConjugatorCase::HaarLike => {
                for w2 in all_signed_permutations(n) {
                    f(&conjugator_pair(case, w.clone(), Some(w2), None));
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Exact average of `f(U_1, U_2)` over the full finite group behind `case`.
pub fn exact_conjugator_average(
    case: ConjugatorCase,
    n: usize,
    mut f: impl FnMut(&[Conjugator; 2]) -> Complex64,
) -> Result<Complex64, EnsembleError> {
    let mut acc = CompensatedSum::default();
    let count = for_each_conjugator_pair(case, n, |u| acc.add(f(u)))?;
    Ok(acc.value() / count as f64)
}

/// Real polynomial with coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Result<Self, EnsembleError> {
        let degree = coefficients.iter().rposition(|&c| c != 0.0);
        if degree.is_none_or(|d| d == 0) {
            return Err(EnsembleError::SpecInvalid("polynomials need degree at least 1".into()));
        }
        Ok(Self { coefficients })
    }

    /// `p(x) = x`.
    pub fn identity() -> Self {
        Self {
            coefficients: vec![0.0, 1.0],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_matrix(&self, d: &RMatrix) -> RMatrix {
        let n = d.nrows();
        let mut acc = RMatrix::zeros((n, n));
        for &c in self.coefficients.iter().rev() {
            acc = acc.dot(d);
            acc.diag_mut().mapv_inplace(|x| x + c);
        }
        acc
    }
}

impl FromStr for Polynomial {
    type Err = EnsembleError;

    /// Comma or whitespace separated coefficients, constant term first.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let coefficients = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| EnsembleError::SpecInvalid(format!("bad coefficient '{t}': {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Polynomial::new(coefficients)
    }
}

/// A real self-adjoint matrix, diagonal when possible.
#[derive(Debug, Clone, PartialEq)]
pub enum DeterministicMatrix {
    Diagonal(Vec<f64>),
    Dense(RMatrix),
}

impl DeterministicMatrix {
    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(d) => d.len(),
            Self::Dense(a) => a.nrows(),
        }
    }

    pub fn to_dense(&self) -> RMatrix {
        match self {
            Self::Diagonal(d) => RMatrix::from_diag(&ndarray::Array1::from(d.clone())),
            Self::Dense(a) => a.clone(),
        }
    }

    pub fn to_complex(&self) -> CMatrix {
        to_complex(&self.to_dense())
    }

    /// Normalized trace.
    pub fn normalized_trace(&self) -> f64 {
        let n = self.dim() as f64;
        match self {
            Self::Diagonal(d) => d.iter().sum::<f64>() / n,
            Self::Dense(a) => a.diag().sum() / n,
        }
    }

    /// Largest singular value (exact for diagonal matrices, power iteration otherwise).
    pub fn operator_norm(&self) -> f64 {
        match self {
            Self::Diagonal(d) => d.iter().fold(0.0, |m, x| m.max(x.abs())),
            Self::Dense(_) => crate::linalg::operator_norm(&self.to_complex()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Diagonal(d) => d.iter().all(|&x| x.abs() <= SELF_ADJOINT_TOLERANCE),
            Self::Dense(a) => a.iter().all(|&x| x.abs() <= SELF_ADJOINT_TOLERANCE),
        }
    }

    /// `p(D) - tr(p(D)) I`.
    pub fn centered_polynomial(&self, p: &Polynomial) -> DeterministicMatrix {
        let raw = match self {
            Self::Diagonal(d) => Self::Diagonal(d.iter().map(|&x| p.eval(x)).collect()),
            Self::Dense(a) => Self::Dense(p.eval_matrix(a)),
        };
        let t = raw.normalized_trace();
        match raw {
            Self::Diagonal(d) => Self::Diagonal(d.into_iter().map(|x| x - t).collect()),
            Self::Dense(mut a) => {
                a.diag_mut().mapv_inplace(|x| x - t);
                Self::Dense(a)
            }
        }
    }
}

/// Rule producing the self-adjoint matrix `D_N` for each dimension `N`.
#[derive(Debug, Clone, PartialEq)]
pub enum DeterministicFamily {
    /// `diag(pattern[i mod len])`.
    DiagonalRepeated(Vec<f64>),
    /// `diag(f(i / (N - 1)))` with `f` the piecewise linear interpolation of `pattern` on `[0, 1]`.
    DiagonalInterpolated(Vec<f64>),
    /// `Q diag(pattern[i mod len]) Q^T` with `Q` a fixed pseudo-random orthogonal matrix per `(seed, N)`.
    Rotated { pattern: Vec<f64>, seed: u64 },
    /// A single matrix; only its own dimension is valid.
    Explicit(RMatrix),
}

impl DeterministicFamily {
    /// `diag(1, -1, 1, -1, ...)`.
    pub fn alternating() -> Self {
        Self::DiagonalRepeated(vec![1.0, -1.0])
    }

    pub fn build(&self, n: usize) -> Result<DeterministicMatrix, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::SpecInvalid("dimension must be positive".into()));
        }
        let check_pattern = |p: &[f64]| {
            if p.is_empty() {
                Err(EnsembleError::SpecInvalid("empty spectrum pattern".into()))
            } else {
                Ok(())
            }
        };
        match self {
            Self::DiagonalRepeated(p) => {
                check_pattern(p)?;
                Ok(DeterministicMatrix::Diagonal((0..n).map(|i| p[i % p.len()]).collect()))
            }
            Self::DiagonalInterpolated(p) => {
                check_pattern(p)?;
                let d = (0..n)
                    .map(|i| {
                        if p.len() == 1 || n == 1 {
                            return p[0];
                        }
                        let s = i as f64 / (n - 1) as f64 * (p.len() - 1) as f64;
                        let k = (s.floor() as usize).min(p.len() - 2);
                        let f = s - k as f64;
                        p[k] * (1.0 - f) + p[k + 1] * f
                    })
                    .collect();
                Ok(DeterministicMatrix::Diagonal(d))
            }
            Self::Rotated { pattern, seed } => {
                check_pattern(pattern)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(n as u64);
                let q = random_orthogonal(&mut rng, n);
                let d: Vec<f64> = (0..n).map(|i| pattern[i % pattern.len()]).collect();
                let qd = &q * &ndarray::Array1::from(d);
                let mut a = qd.dot(&q.t());
                // exact symmetry
                let at = a.t().to_owned();
                a = (&a + &at) / 2.0;
                Ok(DeterministicMatrix::Dense(a))
            }
            Self::Explicit(a) => {
                if a.nrows() != n {
                    return Err(EnsembleError::SpecInvalid(format!(
                        "explicit matrix has dimension {}, requested {n}",
                        a.nrows()
                    )));
                }
                check_symmetric(a)?;
                Ok(DeterministicMatrix::Dense(a.clone()))
            }
        }
    }
}

fn check_symmetric(a: &RMatrix) -> Result<(), EnsembleError> {
    if a.nrows() != a.ncols() {
        return Err(EnsembleError::SpecInvalid("matrix is not square".into()));
    }
    for ((i, j), &x) in a.indexed_iter() {
        let diff = (x - a[(j, i)]).abs();
        if diff > SELF_ADJOINT_TOLERANCE * (1.0 + x.abs()) {
            return Err(EnsembleError::NotSymmetric { i, j, diff });
        }
    }
    Ok(())
}

/// Parses the matrix file format: a line with `N`, then `N` rows of `N` reals.
pub fn parse_matrix(text: &str) -> Result<RMatrix, String> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let n: usize = lines
        .next()
        .ok_or("empty file")?
        .parse()
        .map_err(|e| format!("bad dimension line: {e}"))?;
    if n == 0 {
        return Err("dimension must be positive".into());
    }
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        let line = lines.next().ok_or_else(|| format!("missing row {}", r + 1))?;
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| format!("row {}: '{t}': {e}", r + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != n {
            return Err(format!("row {} has {} entries, expected {n}", r + 1, row.len()));
        }
        data.extend(row);
    }
    if lines.next().is_some() {
        return Err("trailing data after the last row".into());
    }
    Ok(RMatrix::from_shape_vec((n, n), data).expect("n*n entries"))
}

/// Loads and validates an explicit symmetric matrix.
pub fn load_matrix_file(path: &Path) -> Result<RMatrix, EnsembleError> {
    let text = std::fs::read_to_string(path).map_err(|e| EnsembleError::MatrixFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let a = parse_matrix(&text).map_err(|reason| EnsembleError::MatrixFile {
        path: path.display().to_string(),
        reason,
    })?;
    check_symmetric(&a)?;
    Ok(a)
}

/// Ensemble definition: conjugator case, the two families `D_1, D_2`, and the
/// polynomials `p_1..p_{2 m1}` (for `Y`) and `q_1..q_{2 m2}` (for `Z`).
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub case: ConjugatorCase,
    pub families: [DeterministicFamily; 2],
    pub p: Vec<Polynomial>,
    pub q: Vec<Polynomial>,
}

impl EnsembleSpec {
    /// Both families equal to `family`, every polynomial `x`.
    pub fn linear(case: ConjugatorCase, m1: usize, m2: usize, family: DeterministicFamily) -> Self {
        Self {
            case,
            families: [family.clone(), family],
            p: vec![Polynomial::identity(); 2 * m1],
            q: vec![Polynomial::identity(); 2 * m2],
        }
    }

    pub fn m1(&self) -> usize {
        self.p.len() / 2
    }

    pub fn m2(&self) -> usize {
        self.q.len() / 2
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        for (name, list) in [("p", &self.p), ("q", &self.q)] {
            if list.len() < 2 || list.len() % 2 != 0 {
                return Err(EnsembleError::SpecInvalid(format!(
                    "need an even number (at least 2) of {name} polynomials, got {}",
                    list.len()
                )));
            }
        }
        Ok(())
    }
}

/// Which of `D_1, D_2` the `k`-th factor uses (0-based): odd `k` (1-based) use `D_1`.
pub fn family_index(k: usize) -> usize {
    k % 2
}

/// The centered matrices at one dimension.
#[derive(Debug, Clone)]
pub struct CenteredFactors {
    pub a: Vec<DeterministicMatrix>,
    pub b: Vec<DeterministicMatrix>,
    pub warnings: Vec<String>,
}

impl CenteredFactors {
    /// `(Tr Y, Tr Z)` for one draw of the conjugators.
    pub fn traces(&self, u: &[Conjugator; 2], fft: &FftPair) -> (Complex64, Complex64) {
        let y: Vec<Factor> = self
            .a
            .iter()
            .enumerate()
            .map(|(k, a)| u[family_index(k)].conjugate(a, fft))
            .collect();
        let z: Vec<Factor> = self
            .b
            .iter()
            .enumerate()
            .map(|(k, b)| u[family_index(k)].conjugate(b, fft))
            .collect();
        (
            crate::linalg::trace_of_product(&y, fft),
            crate::linalg::trace_of_product(&z, fft),
        )
    }

    pub fn a_complex(&self) -> Vec<CMatrix> {
        self.a.iter().map(DeterministicMatrix::to_complex).collect()
    }

    pub fn b_complex(&self) -> Vec<CMatrix> {
        self.b.iter().map(DeterministicMatrix::to_complex).collect()
    }
}

/// Builds `A_k = p_k(D_{i_k}) - tr(p_k(D_{i_k})) I` and likewise `B_l`.
pub fn build_centered_factors(spec: &EnsembleSpec, n: usize) -> Result<CenteredFactors, EnsembleError> {
    spec.validate()?;
    let d = [spec.families[0].build(n)?, spec.families[1].build(n)?];
    let mut warnings = Vec::new();
    let mut make = |polys: &[Polynomial], name: &str| -> Vec<DeterministicMatrix> {
        polys
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let c = d[family_index(k)].centered_polynomial(p);
                if c.is_zero() {
                    warnings.push(format!("{name}_{} vanishes at N={n}; both sides are zero", k + 1));
                }
                c
            })
            .collect()
    };
    let a = make(&spec.p, "A");
    let b = make(&spec.q, "B");
    Ok(CenteredFactors { a, b, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{adjoint, random_complex_matrix, trace};
    use crate::partition::GroundSet;

    #[test]
    fn signed_permutation_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let w = sample_signed_permutation(6, &mut rng).to_dense();
            let wtw = w.t().dot(&w);
            assert_eq!(wtw, RMatrix::eye(6));
        }
        assert!(SignedPermutation::new(vec![0, 0], vec![1, 1]).is_err());
        assert!(SignedPermutation::new(vec![1, 0], vec![1, 2]).is_err());
    }

    #[test]
    fn signature_of_size_one_is_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 10_000;
        let plus = (0..draws).filter(|_| sample_signature(1, &mut rng)[0] > 0.0).count() as f64;
        let chi2 = 2.0 * (plus - draws as f64 / 2.0).powi(2) / (draws as f64 / 2.0);
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }

    #[test]
    fn entry_square_mean_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws = 100_000;
        let hits: f64 = (0..draws)
            .map(|_| f64::from(sample_signed_permutation(3, &mut rng).entry(0, 0)).powi(2))
            .sum();
        let mean = hits / draws as f64;
        let se = (mean * (1.0 - mean) / draws as f64).sqrt();
        assert!((mean - 1.0 / 3.0).abs() <= 3.0 * se);
    }

    #[test]
    fn sampler_is_uniform_over_small_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 3;
        let group: Vec<_> = all_signed_permutations(n).collect();
        assert_eq!(group.len(), 48);
        let draws = 480_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_signed_permutation(n, &mut rng)).or_insert(0usize) += 1;
        }
        let expect = draws as f64 / 48.0;
        let chi2: f64 = group
            .iter()
            .map(|g| (counts.get(g).copied().unwrap_or(0) as f64 - expect).powi(2) / expect)
            .sum();
        // 47 degrees of freedom, p = 1e-4 critical value is about 93
        assert!(chi2 < 93.0, "chi2 = {chi2}");
    }

    #[test]
    fn entry_formula_examples() {
        let g = GroundSet::plain(2);
        let t = |v: Vec<usize>| IndexTuple::new(g.clone(), v, 3).unwrap();
        assert_eq!(
            expected_entry_product_signature(&t(vec![1, 1]), &t(vec![1, 1])).unwrap(),
            Ratio::from_integer(1)
        );
        assert_eq!(
            expected_entry_product_signature(&t(vec![1, 2]), &t(vec![1, 2])).unwrap(),
            Ratio::from_integer(0)
        );
        assert_eq!(
            expected_entry_product_signature(&t(vec![1, 1]), &t(vec![2, 2])).unwrap(),
            Ratio::from_integer(0)
        );
        assert_eq!(
            expected_entry_product_signed_perm(&t(vec![1, 1]), &t(vec![1, 1]), 3).unwrap(),
            Ratio::new(1, 3)
        );
        assert_eq!(
            expected_entry_product_signed_perm(&t(vec![1, 1]), &t(vec![1, 2]), 3).unwrap(),
            Ratio::from_integer(0)
        );
        let other = IndexTuple::new(GroundSet::plain(3), vec![1, 1, 1], 3).unwrap();
        assert!(matches!(
            expected_entry_product_signed_perm(&t(vec![1, 1]), &other, 3),
            Err(EnsembleError::DomainMismatch)
        ));
    }

    #[test]
    fn exact_expectation_examples() {
        let v = exact_expectation_small_n(3, false, |w, _| Complex64::new(f64::from(w.entry(0, 0)), 0.0)).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
        let v =
            exact_expectation_rational(3, false, |w, _| Ratio::from_integer(i64::from(w.entry(0, 0)).pow(2))).unwrap();
        assert_eq!(v, Ratio::new(1, 3));
        assert!(matches!(
            exact_expectation_small_n(5, true, |_, _| Complex64::new(0.0, 0.0)),
            Err(EnsembleError::TooLargeForExactEnumeration { n: 5, limit: 4 })
        ));
    }

    #[test]
    fn exact_trace_average_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_complex_matrix(&mut rng, 3);
        let b = random_complex_matrix(&mut rng, 3);
        let f = |w: &SignedPermutation| trace(&w.conjugate(&a).dot(&b));
        let exact = exact_expectation_small_n(3, false, |w, _| f(w)).unwrap();
        let draws = 20_000;
        let values: Vec<Complex64> = (0..draws).map(|_| f(&sample_signed_permutation(3, &mut rng))).collect();
        let mean: Complex64 = values.iter().sum::<Complex64>() / draws as f64;
        let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (draws - 1) as f64;
        assert!((mean - exact).norm() <= 4.0 * (var / draws as f64).sqrt());
    }

    #[test]
    fn conjugator_dense_form_is_unitary_and_matches_structured_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 5;
        let fft = FftPair::new(n);
        let d = DeterministicFamily::DiagonalRepeated(vec![1.0, -2.0, 0.5])
            .build(n)
            .unwrap();
        let r = DeterministicFamily::Rotated {
            pattern: vec![1.0, -1.0],
            seed: 3,
        }
        .build(n)
        .unwrap();
        for case in ConjugatorCase::ALL {
            for u in sample_conjugators(case, n, &mut rng) {
                let dense = u.to_dense();
                let uu = dense.dot(&adjoint(&dense));
                assert!(uu
                    .indexed_iter()
                    .all(|((i, j), z)| (z - f64::from(u8::from(i == j))).norm() < 1e-12));
                for m in [&d, &r] {
                    let expect = dense.dot(&m.to_complex()).dot(&adjoint(&dense));
                    let got = u.conjugate(m, &fft).to_dense();
                    assert!(
                        expect.iter().zip(got.iter()).all(|(x, y)| (x - y).norm() < 1e-12),
                        "{case}"
                    );
                }
            }
        }
    }

    #[test]
    fn group_sizes() {
        let count = |case| {
            let mut c = 0;
            exact_conjugator_average(case, 3, |_| {
                c += 1;
                Complex64::new(0.0, 0.0)
            })
            .unwrap();
            c
        };
        assert_eq!(count(ConjugatorCase::Case1), 48);
        assert_eq!(count(ConjugatorCase::Case2), 384);
        assert_eq!(count(ConjugatorCase::HaarLike), 48 * 48);
    }

    #[test]
    fn centered_factors() {
        let spec = EnsembleSpec::linear(ConjugatorCase::Case1, 1, 1, DeterministicFamily::alternating());
        let f = build_centered_factors(&spec, 4).unwrap();
        assert_eq!(f.a[0], DeterministicMatrix::Diagonal(vec![1.0, -1.0, 1.0, -1.0]));
        assert!(f.warnings.is_empty());
        let mut sq = spec.clone();
        sq.p[0] = "0 0 1".parse().unwrap();
        let f = build_centered_factors(&sq, 4).unwrap();
        assert!(f.a[0].is_zero());
        assert_eq!(f.warnings.len(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spectrum: Vec<f64> = (0..7).map(|_| rng.gen_range(-3.0..3.0)).collect();
        for family in [
            DeterministicFamily::DiagonalRepeated(spectrum.clone()),
            DeterministicFamily::DiagonalInterpolated(spectrum.clone()),
            DeterministicFamily::Rotated {
                pattern: spectrum,
                seed: 2,
            },
        ] {
            let mut spec = EnsembleSpec::linear(ConjugatorCase::Case3, 1, 2, family);
            spec.p[1] = "1 -2 0.5 3".parse().unwrap();
            let f = build_centered_factors(&spec, 9).unwrap();
            for m in f.a.iter().chain(&f.b) {
                assert!(trace(&m.to_complex()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn polynomial_parsing_and_evaluation() {
        let p: Polynomial = "1, -2, 3".parse().unwrap();
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        let d = RMatrix::from_diag(&ndarray::arr1(&[2.0, -1.0]));
        assert_eq!(p.eval_matrix(&d), RMatrix::from_diag(&ndarray::arr1(&[9.0, 6.0])));
        assert!("5".parse::<Polynomial>().is_err());
        assert!("1,x".parse::<Polynomial>().is_err());
    }

    #[test]
    fn matrix_file_parsing() {
        let a = parse_matrix("2\n1 0.5\n0.5 -1\n").unwrap();
        assert_eq!(a[(0, 1)], 0.5);
        assert!(parse_matrix("2\n1 0\n").is_err());
        assert!(parse_matrix("2\n1 0 3\n0 1\n").is_err());
        let asym = parse_matrix("2\n1 2\n0 1\n").unwrap();
        assert!(matches!(
            check_symmetric(&asym),
            Err(EnsembleError::NotSymmetric { .. })
        ));
        assert!(DeterministicFamily::Explicit(a).build(3).is_err());
    }

    #[test]
    fn interpolated_family_hits_endpoints() {
        let d = DeterministicFamily::DiagonalInterpolated(vec![-1.0, 1.0])
            .build(5)
            .unwrap();
        assert_eq!(d, DeterministicMatrix::Diagonal(vec![-1.0, -0.5, 0.0, 0.5, 1.0]));
    }
}
