//! Growth scan of `c_n[Tr Y_N, ..., Tr Y_N]` across dimensions.

use num_complex::Complex64;

use super::experiment::ExperimentConfig;
use super::monte_carlo::sample_traces;
use super::FluctuationError;
use crate::cumulants::{estimate_mixed_cumulant, CumulantEstimate};

/// Largest slope of `log |c_n|` against `log N` that still counts as bounded.
pub const SLOPE_LIMIT: f64 = 0.2;

/// Per-dimension cumulant estimates and the fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub order: usize,
    pub rows: Vec<(usize, CumulantEstimate)>,
    pub slope: f64,
    pub slope_se: f64,
    /// `slope <= SLOPE_LIMIT + slope_se`.
    pub pass: bool,
}

/// Least-squares slope of `log max(|c|, SE)` on `log N`, with a standard error
/// propagated from the per-point errors `SE / max(|c|, SE)`.
pub fn fit_log_slope(rows: &[(usize, CumulantEstimate)]) -> (f64, f64) {
    let x: Vec<f64> = rows.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let scale: Vec<f64> = rows
        .iter()
        .map(|(_, e)| e.value.norm().max(e.standard_error).max(f64::MIN_POSITIVE))
        .collect();
    let y: Vec<f64> = scale.iter().map(|s| s.ln()).collect();
    let sigma: Vec<f64> = rows
        .iter()
        .zip(&scale)
        .map(|((_, e), s)| e.standard_error / s)
        .collect();
    let mean_x = x.iter().sum::<f64>() / x.len() as f64;
    let sxx: f64 = x.iter().map(|xi| (xi - mean_x).powi(2)).sum();
    let weights: Vec<f64> = x.iter().map(|xi| (xi - mean_x) / sxx).collect();
    let slope = weights.iter().zip(&y).map(|(w, yi)| w * yi).sum();
    let se = weights
        .iter()
        .zip(&sigma)
        .map(|(w, s)| (w * s).powi(2))
        .sum::<f64>()
        .sqrt();
    (slope, se)
}

/// Estimates the order-`n` cumulant of `Tr Y_N` on every grid dimension.
pub fn bounded_cumulant_scan(config: &ExperimentConfig, order: usize) -> Result<ScanReport, FluctuationError> {
    if !(2..=4).contains(&order) {
        return Err(FluctuationError::OrderTooHigh(order));
    }
    config.validate()?;
    if config.n_grid.len() < 2 {
        return Err(FluctuationError::SpecInvalid(
            "a slope fit needs at least two dimensions".into(),
        ));
    }
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let traces = sample_traces(&config.spec, n, config.samples, config.master_seed, config.workers)?;
        let samples: Vec<Vec<Complex64>> = traces.iter().map(|&(y, _)| vec![y; order]).collect();
        rows.push((n, estimate_mixed_cumulant(&samples, order)?));
    }
    let (slope, slope_se) = fit_log_slope(&rows);
    Ok(ScanReport {
        order,
        rows,
        slope,
        slope_se,
        pass: slope <= SLOPE_LIMIT + slope_se,
    })
}
