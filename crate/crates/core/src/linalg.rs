//! Dense complex matrices plus the structured factors that appear when a
//! diagonal or dense matrix is conjugated by a signed permutation, the DFT
//! matrix and a random signature.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

pub type CMatrix = Array2<Complex64>;
pub type RMatrix = Array2<f64>;

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERATIONS: usize = 10_000;

/// Matrix with independent standard complex Gaussian entries.
pub fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    Array2::from_shape_simple_fn((n, n), || {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed real orthogonal matrix (Gram-Schmidt on a Gaussian matrix).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> RMatrix {
    let mut q: RMatrix = Array2::from_shape_simple_fn((n, n), || rng.sample(StandardNormal));
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let dot = q.column(j).dot(&q.column(k));
                let ck = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-dot, &ck);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    q
}

pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.mapv(|x| Complex64::new(x, 0.0))
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diag().sum()
}

/// Largest singular value by power iteration on `A^* A`, stopping once the
/// relative eigen-residual drops below `1e-10` or after 10 000 steps.
pub fn operator_norm(a: &CMatrix) -> f64 {
    let n = a.ncols();
    if n == 0 || a.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    let ah = adjoint(a);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: ndarray::Array1<Complex64> = ndarray::Array1::from_shape_simple_fn(n, || {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.mapv_inplace(|z| z / norm);
        let w = ah.dot(&a.dot(&v));
        lambda = w.iter().zip(&v).map(|(x, y)| (y.conj() * x).re).sum::<f64>();
        let residual = w
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - y * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        v = w;
        if residual <= POWER_TOLERANCE * lambda.abs() {
            break;
        }
    }
    lambda.max(0.0).sqrt()
}

/// Forward and inverse FFT plans of one length.
#[derive(Clone)]
pub struct FftPair {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place `x_k <- sum_j x_j e^{-2 pi i jk / n}` on each length-`n` chunk.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// In-place unnormalized inverse transform on each length-`n` chunk.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }

    /// `H M H^* / n` with `H(a, b) = e^{-2 pi i ab / n}`.
    pub fn dft_conjugate(&self, m: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut cols: Vec<Complex64> = m.t().iter().copied().collect();
        self.forward(&mut cols);
        // cols holds (H M)^T row-major, i.e. H M column-major
        let mut rows: Vec<Complex64> = Array2::from_shape_vec((n, n), cols)
            .expect("square")
            .t()
            .iter()
            .copied()
            .collect();
        self.inverse(&mut rows);
        let scale = 1.0 / n as f64;
        Array2::from_shape_vec((n, n), rows.into_iter().map(|z| z * scale).collect()).expect("square")
    }
}

/// A conjugated matrix in whichever structured form is cheapest to multiply.
#[derive(Debug, Clone)]
pub enum Factor {
    Diagonal(Vec<Complex64>),
    /// `X C X` with `C(i, j) = column[(i - j) mod n]` and `X = diag(signs)`.
    Circulant {
        column: Vec<Complex64>,
        signs: Option<Vec<f64>>,
        /// Transform of `d -> column[-d mod n]`, divided by `n`, used for row products.
        row_kernel: Vec<Complex64>,
    },
    Dense(CMatrix),
}

impl Factor {
    pub fn circulant(column: Vec<Complex64>, signs: Option<Vec<f64>>, fft: &FftPair) -> Self {
        let n = column.len();
        let mut row_kernel: Vec<Complex64> = (0..n).map(|d| column[(n - d) % n]).collect();
        fft.forward(&mut row_kernel);
        let scale = 1.0 / n as f64;
        row_kernel.iter_mut().for_each(|z| *z *= scale);
        Factor::Circulant {
            column,
            signs,
            row_kernel,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factor::Diagonal(d) => d.len(),
            Factor::Circulant { column, .. } => column.len(),
            Factor::Dense(a) => a.nrows(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Factor::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Factor::Circulant { column, signs, .. } => {
                let n = column.len();
                let c = column[(i + n - j) % n];
                match signs {
                    Some(x) => c * (x[i] * x[j]),
                    None => c,
                }
            }
            Factor::Dense(a) => a[(i, j)],
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            Factor::Dense(a) => a.clone(),
            _ => {
                let n = self.dim();
                Array2::from_shape_fn((n, n), |(i, j)| self.entry(i, j))
            }
        }
    }

    /// `p * self`.
    pub fn right_multiply(&self, mut p: CMatrix, fft: &FftPair) -> CMatrix {
        match self {
            Factor::Diagonal(d) => {
                for mut row in p.axis_iter_mut(Axis(0)) {
                    row.iter_mut().zip(d).for_each(|(z, s)| *z *= s);
                }
                p
            }
            Factor::Circulant { signs, row_kernel, .. } => {
                scale_columns(&mut p, signs.as_deref());
                let buf = p.as_slice_mut().expect("standard layout");
                fft.forward(buf);
                for row in buf.chunks_mut(row_kernel.len()) {
                    row.iter_mut().zip(row_kernel).for_each(|(z, k)| *z *= k);
                }
                fft.inverse(buf);
                scale_columns(&mut p, signs.as_deref());
                p
            }
            Factor::Dense(a) => p.dot(a),
        }
    }

    pub fn trace(&self) -> Complex64 {
        match self {
            Factor::Diagonal(d) => d.iter().sum(),
            Factor::Circulant { column, .. } => column[0] * column.len() as f64,
            Factor::Dense(a) => trace(a),
        }
    }
}

fn scale_columns(p: &mut CMatrix, signs: Option<&[f64]>) {
    if let Some(x) = signs {
        for mut row in p.axis_iter_mut(Axis(0)) {
            row.iter_mut().zip(x).for_each(|(z, s)| *z *= *s);
        }
    }
}

/// `Tr(F_1 F_2 ... F_k)`.
pub fn trace_of_product(factors: &[Factor], fft: &FftPair) -> Complex64 {
    match factors {
        [] => Complex64::new(fft.len() as f64, 0.0),
        [f] => f.trace(),
        _ if factors.iter().all(|f| matches!(f, Factor::Diagonal(_))) => {
            let n = factors[0].dim();
            (0..n)
                .map(|i| factors.iter().map(|f| f.entry(i, i)).product::<Complex64>())
                .sum()
        }
        [first, middle @ .., last] => {
            let mut p = first.to_dense();
            for f in middle {
                p = f.right_multiply(p, fft);
            }
            let n = p.nrows();
            let mut total = Complex64::new(0.0, 0.0);
            match last {
                Factor::Diagonal(d) => {
                    for i in 0..n {
                        total += p[(i, i)] * d[i];
                    }
                }
                _ => {
                    let dense;
                    let l = match last {
                        Factor::Dense(a) => a,
                        _ => {
                            dense = last.to_dense();
                            &dense
                        }
                    };
                    for i in 0..n {
                        for j in 0..n {
                            total += p[(i, j)] * l[(j, i)];
                        }
                    }
                }
            }
            total
        }
    }
}
