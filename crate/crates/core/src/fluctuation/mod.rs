//! Second-order fluctuations of `Tr Y_N` and `Tr Z_N`: analytic limits,
//! Monte Carlo estimates, the exact small-`N` decomposition, the bounded
//! cumulant scan, and experiment orchestration with CSV output.

pub mod analytic;
pub mod exact;
pub mod experiment;
pub mod monte_carlo;
pub mod scan;

use thiserror::Error;

use crate::cumulants::CumulantError;
use crate::dft_gauss::DftGaussError;
use crate::ensembles::EnsembleError;
use crate::graph_sum::GraphSumError;
use crate::partition::PartitionError;

pub use analytic::analytic_rhs;
pub use exact::{exact_cov_decomposition_check, ExactCheck};
pub use experiment::{run_experiment, ExperimentConfig, FluctuationReport, ReportRow};
pub use monte_carlo::{monte_carlo_cov, sample_traces};
pub use scan::{bounded_cumulant_scan, ScanReport};

#[derive(Debug, Error)]
pub enum FluctuationError {
    #[error("invalid specification: {0}")]
    SpecInvalid(String),
    #[error("matrix {index} does not have the common dimension {n}")]
    DimensionMismatch { index: usize, n: usize },
    #[error("matrix {index} has normalized trace {trace:e}, expected zero")]
    TraceNotZero { index: usize, trace: f64 },
    #[error("cumulant order {0} is outside 2..=4")]
    OrderTooHigh(usize),
    #[error("configuration error: {0}")]
    ConfigParse(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    GraphSum(#[from] GraphSumError),
    #[error(transparent)]
    DftGauss(#[from] DftGaussError),
}

impl FluctuationError {
    /// True for problems with the requested configuration rather than with a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Self::SpecInvalid(_) | Self::ConfigParse(_) | Self::OrderTooHigh(_) | Self::Ensemble(_)
        )
    }
}
