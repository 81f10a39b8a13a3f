//! Second-order fluctuations of products of randomly conjugated deterministic
//! matrices: set partition combinatorics, graph sums, DFT exponential sums,
//! signed permutation ensembles, cumulant estimation and Monte Carlo checks.

pub mod cumulants;
pub mod dft_gauss;
pub mod ensembles;
pub mod fluctuation;
pub mod graph_sum;
pub mod linalg;
pub mod partition;

pub use num_complex::Complex64;
