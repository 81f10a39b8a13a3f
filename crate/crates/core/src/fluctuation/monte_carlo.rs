//! Monte Carlo sampling of `(Tr Y_N, Tr Z_N)`.
//!
//! Sample `i` draws its conjugators from a generator seeded by
//! `(master_seed, i)` alone, and results are gathered in sample order before
//! any reduction, so the output does not depend on the number of workers.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::FluctuationError;
use crate::cumulants::{estimate_mixed_cumulant, CumulantEstimate};
use crate::ensembles::{
    build_centered_factors, sample_conjugators, sample_rng, CenteredFactors, Conjugator, EnsembleSpec,
};
use crate::linalg::FftPair;

/// Runs `work` on a pool of `workers` threads (0 means all available cores).
pub fn with_workers<T: Send>(workers: usize, work: impl FnOnce() -> T + Send) -> Result<T, FluctuationError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| FluctuationError::SpecInvalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(work))
}

/// `(Tr Y, Tr Z)` for samples `0..samples`, with conjugators produced by `draw`.
pub fn sample_traces_with<F>(
    factors: &CenteredFactors,
    n: usize,
    samples: usize,
    master_seed: u64,
    workers: usize,
    draw: F,
) -> Result<Vec<(Complex64, Complex64)>, FluctuationError>
where
    F: Fn(&mut ChaCha8Rng) -> [Conjugator; 2] + Sync,
{
    let fft = FftPair::new(n);
    let one = |i: u64| {
        let mut rng = sample_rng(master_seed, i);
        factors.traces(&draw(&mut rng), &fft)
    };
    // a single worker runs on the calling thread, which also covers targets without threads
    if workers == 1 {
        return Ok((0..samples as u64).map(one).collect());
    }
    with_workers(workers, || (0..samples as u64).into_par_iter().map(one).collect())
}

/// `(Tr Y, Tr Z)` samples for the ensemble of `spec` at dimension `n`.
pub fn sample_traces(
    spec: &EnsembleSpec,
    n: usize,
    samples: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<(Complex64, Complex64)>, FluctuationError> {
    let factors = build_centered_factors(spec, n)?;
    let case = spec.case;
    sample_traces_with(&factors, n, samples, master_seed, workers, |rng| {
        sample_conjugators(case, n, rng)
    })
}

/// Plug-in `cov(Tr Y, Tr Z)` with jackknife standard error.
pub fn covariance_of(traces: &[(Complex64, Complex64)]) -> Result<CumulantEstimate, FluctuationError> {
    let rows: Vec<Vec<Complex64>> = traces.iter().map(|&(y, z)| vec![y, z]).collect();
    Ok(estimate_mixed_cumulant(&rows, 2)?)
}

/// Monte Carlo estimate of `cov(Tr Y_N, Tr Z_N)` (unnormalized traces).
pub fn monte_carlo_cov(
    spec: &EnsembleSpec,
    n: usize,
    samples: usize,
    master_seed: u64,
    workers: usize,
) -> Result<CumulantEstimate, FluctuationError> {
    covariance_of(&sample_traces(spec, n, samples, master_seed, workers)?)
}
