//! Classical cumulants from mixed moments by Möbius inversion on the
//! partition lattice, and plug-in estimates with jackknife standard errors.

use num_complex::Complex64;
use thiserror::Error;

use crate::partition::{enumerate, mobius_chain, GroundSet, PartitionFilter};

/// Highest cumulant order supported by the estimators.
pub const MAX_ORDER: usize = 4;
/// Number of deletion groups used by the jackknife.
pub const JACKKNIFE_GROUPS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CumulantError {
    #[error("cumulant order {0} is outside 1..={MAX_ORDER}")]
    OrderTooHigh(usize),
    #[error("expected {expected} variables per sample, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("moment table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
}

/// Mixed moments `E[prod_{i in S} x_i]` for every subset `S` of `n` variables,
/// indexed by bitmask; the empty subset holds 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    n: usize,
    values: Vec<Complex64>,
}

impl MomentTable {
    pub fn new(n: usize, values: Vec<Complex64>) -> Result<Self, CumulantError> {
        if n == 0 || n > MAX_ORDER {
            return Err(CumulantError::OrderTooHigh(n));
        }
        if values.len() != 1 << n {
            return Err(CumulantError::TableSize {
                expected: 1 << n,
                got: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    /// Plug-in moments of a sample of `n`-vectors.
    pub fn from_samples(samples: &[Vec<Complex64>], n: usize) -> Result<Self, CumulantError> {
        if n == 0 || n > MAX_ORDER {
            return Err(CumulantError::OrderTooHigh(n));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); 1 << n];
        for s in samples {
            if s.len() != n {
                return Err(CumulantError::ArityMismatch {
                    expected: n,
                    got: s.len(),
                });
            }
            for (mask, v) in values.iter_mut().enumerate() {
                *v += subset_product(s, mask);
            }
        }
        let count = samples.len() as f64;
        values.iter_mut().for_each(|v| *v /= count);
        values[0] = Complex64::new(1.0, 0.0);
        Self::new(n, values)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn moment(&self, mask: usize) -> Complex64 {
        self.values[mask]
    }
}

fn subset_product(x: &[Complex64], mask: usize) -> Complex64 {
    (0..x.len()).filter(|i| mask >> i & 1 == 1).map(|i| x[i]).product()
}

/// Partitions of the set bits of `mask`, each block given as a bitmask.
fn set_partitions_of(mask: usize) -> Vec<Vec<usize>> {
    let bits: Vec<usize> = (0..usize::BITS as usize).filter(|i| mask >> i & 1 == 1).collect();
    if bits.is_empty() {
        return vec![Vec::new()];
    }
    enumerate(&GroundSet::plain(bits.len()), PartitionFilter::All)
        .expect("at most MAX_ORDER elements")
        .map(|p| {
            p.blocks()
                .iter()
                .map(|b| b.iter().map(|&k| 1 << bits[k as usize - 1]).sum())
                .collect()
        })
        .collect()
}

/// Joint cumulant of the variables in `mask`:
/// `sum_pi (-1)^{#pi - 1} (#pi - 1)! prod_{B in pi} E[x_B]`.
pub fn joint_cumulant(table: &MomentTable, mask: usize) -> Complex64 {
    set_partitions_of(mask)
        .iter()
        .map(|blocks| {
            mobius_chain(blocks.len()) as f64 * blocks.iter().map(|&b| table.moment(b)).product::<Complex64>()
        })
        .sum()
}

/// The cumulant `c_n[x_1, ..., x_n]` of all variables of the table.
pub fn cumulant_from_moments(table: &MomentTable) -> Complex64 {
    joint_cumulant(table, (1 << table.n) - 1)
}

/// Inverse direction: moments from the joint cumulants of every subset.
pub fn moments_from_cumulants(n: usize, cumulants: &[Complex64]) -> Result<MomentTable, CumulantError> {
    if cumulants.len() != 1 << n {
        return Err(CumulantError::TableSize {
            expected: 1 << n,
            got: cumulants.len(),
        });
    }
    let mut values = vec![Complex64::new(1.0, 0.0); 1 << n];
    for (mask, v) in values.iter_mut().enumerate().skip(1) {
        *v = set_partitions_of(mask)
            .iter()
            .map(|blocks| blocks.iter().map(|&b| cumulants[b]).product::<Complex64>())
            .sum();
    }
    MomentTable::new(n, values)
}

/// A point estimate with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantEstimate {
    pub value: Complex64,
    pub standard_error: f64,
    pub samples: usize,
}

/// Plug-in estimate of `c_n` from samples of `n`-vectors, with a
/// delete-one-group jackknife over `min(50, samples)` contiguous groups.
pub fn estimate_mixed_cumulant(samples: &[Vec<Complex64>], n: usize) -> Result<CumulantEstimate, CumulantError> {
    if samples.len() < 2 {
        return Err(CumulantError::TooFewSamples(samples.len()));
    }
    let value = cumulant_from_moments(&MomentTable::from_samples(samples, n)?);
    let total = samples.len();
    let groups = JACKKNIFE_GROUPS.min(total);
    let bounds: Vec<usize> = (0..=groups).map(|g| g * total / groups).collect();
    // per-group moment sums let each leave-one-out estimate reuse the totals
    let sums: Vec<Vec<Complex64>> = bounds
        .windows(2)
        .map(|w| {
            let mut s = vec![Complex64::new(0.0, 0.0); 1 << n];
            for x in &samples[w[0]..w[1]] {
                for (mask, v) in s.iter_mut().enumerate() {
                    *v += subset_product(x, mask);
                }
            }
            s
        })
        .collect();
    let grand: Vec<Complex64> = (0..1 << n).map(|mask| sums.iter().map(|s| s[mask]).sum()).collect();
    let leave_out: Vec<Complex64> = sums
        .iter()
        .zip(bounds.windows(2))
        .map(|(s, w)| {
            let count = (total - (w[1] - w[0])) as f64;
            let mut values: Vec<Complex64> = grand.iter().zip(s).map(|(g, x)| (g - x) / count).collect();
            values[0] = Complex64::new(1.0, 0.0);
            cumulant_from_moments(&MomentTable { n, values })
        })
        .collect();
    let mean: Complex64 = leave_out.iter().sum::<Complex64>() / groups as f64;
    let spread: f64 = leave_out.iter().map(|t| (t - mean).norm_sqr()).sum();
    let standard_error = ((groups as f64 - 1.0) / groups as f64 * spread).sqrt();
    Ok(CumulantEstimate {
        value,
        standard_error,
        samples: total,
    })
}
