//! Experiment configuration, per-dimension runs and CSV reporting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use num_complex::Complex64;

use super::analytic::analytic_rhs;
use super::monte_carlo::{covariance_of, sample_traces_with};
use super::FluctuationError;
use crate::cumulants::CumulantEstimate;
use crate::ensembles::{
    build_centered_factors, load_matrix_file, sample_conjugators, CenteredFactors, ConjugatorCase, DeterministicFamily,
    EnsembleSpec, Polynomial,
};

pub const CSV_HEADER: &str = "case,N,m1,m2,samples,seed,mc_re,mc_im,mc_se,analytic_re,analytic_im,abs_err,pass";

/// Keys accepted by [`ExperimentConfig::from_map`].
pub const CONFIG_KEYS: &[&str] = &[
    "case",
    "m1",
    "m2",
    "n-grid",
    "samples",
    "seed",
    "tolerance-sigmas",
    "drift-constant",
    "workers",
    "d-family",
    "d2-family",
    "d-matrix",
    "poly",
    "i1",
    "j1",
];

/// A full Monte Carlo experiment over a grid of dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: EnsembleSpec,
    pub n_grid: Vec<usize>,
    pub samples: usize,
    pub master_seed: u64,
    pub tolerance_sigmas: f64,
    /// `None` uses the product of the operator norms of all `A_k, B_l` at each `N`.
    pub drift_constant: Option<f64>,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(spec: EnsembleSpec, n_grid: Vec<usize>, samples: usize, master_seed: u64) -> Self {
        Self {
            spec,
            n_grid,
            samples,
            master_seed,
            tolerance_sigmas: 4.0,
            drift_constant: None,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<(), FluctuationError> {
        self.spec.validate()?;
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(FluctuationError::ConfigParse(
                "n-grid must hold positive dimensions".into(),
            ));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FluctuationError::ConfigParse(
                "n-grid must be strictly increasing".into(),
            ));
        }
        if self.samples < 100 {
            return Err(FluctuationError::ConfigParse(format!(
                "samples must be at least 100, got {}",
                self.samples
            )));
        }
        if !(self.tolerance_sigmas.is_finite() && self.tolerance_sigmas >= 0.0) {
            return Err(FluctuationError::ConfigParse(
                "tolerance-sigmas must be a non-negative number".into(),
            ));
        }
        if let Some(c) = self.drift_constant {
            if !(c.is_finite() && c >= 0.0) {
                return Err(FluctuationError::ConfigParse(
                    "drift-constant must be a non-negative number".into(),
                ));
            }
        }
        Ok(())
    }

    /// Builds a configuration from `key = value` pairs, filling unspecified keys with defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, FluctuationError> {
        if let Some(bad) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(FluctuationError::ConfigParse(format!("unknown key '{bad}'")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, FluctuationError>
        where
            T::Err: std::fmt::Display,
        {
            v.trim()
                .parse()
                .map_err(|e| FluctuationError::ConfigParse(format!("{key}: cannot parse '{v}': {e}")))
        }
        for key in ["i1", "j1"] {
            if let Some(v) = get(key) {
                if num::<usize>(key, v)? != 1 {
                    return Err(FluctuationError::ConfigParse(format!(
                        "{key} = {v} is not supported; the factor alternation must start with D_1 in both words"
                    )));
                }
            }
        }
        let case: ConjugatorCase = match get("case") {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|e| FluctuationError::ConfigParse(format!("case: {e}")))?,
            None => ConjugatorCase::Case1,
        };
        let m1 = get("m1").map_or(Ok(1), |v| num("m1", v))?;
        let m2 = get("m2").map_or(Ok(1), |v| num("m2", v))?;
        if m1 == 0 || m2 == 0 {
            return Err(FluctuationError::ConfigParse("m1 and m2 must be positive".into()));
        }
        let family = match (get("d-matrix"), get("d-family")) {
            (Some(_), Some(_)) => {
                return Err(FluctuationError::ConfigParse(
                    "d-matrix and d-family are mutually exclusive".into(),
                ))
            }
            (Some(path), None) => DeterministicFamily::Explicit(load_matrix_file(Path::new(path.trim()))?),
            (None, Some(v)) => parse_family(v)?,
            (None, None) => DeterministicFamily::alternating(),
        };
        let family2 = get("d2-family")
            .map(parse_family)
            .transpose()?
            .unwrap_or_else(|| family.clone());
        let n_grid = match get("n-grid") {
            Some(v) => parse_list("n-grid", v)?,
            None => match &family {
                DeterministicFamily::Explicit(a) => vec![a.nrows()],
                _ => vec![32, 64, 128],
            },
        };
        let mut spec = EnsembleSpec::linear(case, m1, m2, family);
        spec.families[1] = family2;
        if let Some(v) = get("poly") {
            let polys = v
                .split(';')
                .map(|s| s.parse::<Polynomial>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| FluctuationError::ConfigParse(format!("poly: {e}")))?;
            match polys.len() {
                1 => {
                    spec.p = vec![polys[0].clone(); 2 * m1];
                    spec.q = vec![polys[0].clone(); 2 * m2];
                }
                n if n == 2 * m1 + 2 * m2 => {
                    spec.q = polys[2 * m1..].to_vec();
                    spec.p = polys[..2 * m1].to_vec();
                }
                n => {
                    return Err(FluctuationError::ConfigParse(format!(
                        "poly: expected 1 or {} ';'-separated lists, got {n}",
                        2 * m1 + 2 * m2
                    )))
                }
            }
        }
        let config = Self {
            spec,
            n_grid,
            samples: get("samples").map_or(Ok(2000), |v| num("samples", v))?,
            master_seed: get("seed").map_or(Ok(0), |v| num("seed", v))?,
            tolerance_sigmas: get("tolerance-sigmas").map_or(Ok(4.0), |v| num("tolerance-sigmas", v))?,
            drift_constant: get("drift-constant").map(|v| num("drift-constant", v)).transpose()?,
            workers: get("workers").map_or(Ok(0), |v| num("workers", v))?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Parses a configuration file body.
    pub fn from_text(text: &str) -> Result<Self, FluctuationError> {
        Self::from_map(&parse_key_values(text)?)
    }
}

/// Parses flat `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, FluctuationError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| FluctuationError::ConfigParse(format!("line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(FluctuationError::ConfigParse(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, FluctuationError>
where
    T::Err: std::fmt::Display,
{
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|e| FluctuationError::ConfigParse(format!("{key}: cannot parse '{t}': {e}")))
        })
        .collect()
}

/// `alternating`, `diag:1,-1,2`, `interp:-1,1` or `rotated:SEED:1,-1`.
pub fn parse_family(v: &str) -> Result<DeterministicFamily, FluctuationError> {
    let v = v.trim();
    let bad = || FluctuationError::ConfigParse(format!("unknown d-family '{v}'"));
    if v == "alternating" {
        return Ok(DeterministicFamily::alternating());
    }
    let (kind, rest) = v.split_once(':').ok_or_else(bad)?;
    match kind {
        "diag" => Ok(DeterministicFamily::DiagonalRepeated(parse_list("d-family", rest)?)),
        "interp" => Ok(DeterministicFamily::DiagonalInterpolated(parse_list("d-family", rest)?)),
        "rotated" => {
            let (seed, pattern) = rest.split_once(':').ok_or_else(bad)?;
            let seed = seed
                .trim()
                .parse()
                .map_err(|e| FluctuationError::ConfigParse(format!("d-family seed: {e}")))?;
            Ok(DeterministicFamily::Rotated {
                pattern: parse_list("d-family", pattern)?,
                seed,
            })
        }
        _ => Err(bad()),
    }
}

/// One dimension of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub mc: CumulantEstimate,
    pub analytic: Complex64,
    pub abs_err: f64,
    /// `tolerance_sigmas * SE + drift_constant * N^{-1/2}`.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct FluctuationReport {
    pub case: ConjugatorCase,
    pub m1: usize,
    pub m2: usize,
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

impl FluctuationReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// CSV text; rows ascend in `N` and reals carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                self.case,
                r.n,
                self.m1,
                self.m2,
                self.samples,
                self.seed,
                r.mc.value.re,
                r.mc.value.im,
                r.mc.standard_error,
                r.analytic.re,
                r.analytic.im,
                r.abs_err,
                r.pass
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), FluctuationError> {
        std::fs::write(path, self.to_csv()).map_err(|source| FluctuationError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// One human-readable line per dimension plus a verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            writeln!(
                out,
                "case {} N={:<5} mc={:+.5}{:+.5}i se={:.5} analytic={:+.5}{:+.5}i err={:.5} tol={:.5} {}",
                self.case,
                r.n,
                r.mc.value.re,
                r.mc.value.im,
                r.mc.standard_error,
                r.analytic.re,
                r.analytic.im,
                r.abs_err,
                r.tolerance,
                if r.pass { "PASS" } else { "FAIL" }
            )
            .expect("writing to a String");
        }
        for w in &self.warnings {
            writeln!(out, "warning: {w}").expect("writing to a String");
        }
        writeln!(
            out,
            "{} ({:.2}s)",
            if self.all_pass() {
                "all rows pass"
            } else {
                "some rows fail"
            },
            self.wall_time.as_secs_f64()
        )
        .expect("writing to a String");
        out
    }
}

/// Runs the Monte Carlo estimate and the analytic limit at every grid dimension.
pub fn run_experiment(config: &ExperimentConfig) -> Result<FluctuationReport, FluctuationError> {
    config.validate()?;
    let start = Stopwatch::start();
    let spec = &config.spec;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    let mut warnings = Vec::new();
    for &n in &config.n_grid {
        let factors = build_centered_factors(spec, n)?;
        warnings.extend(factors.warnings.iter().cloned());
        let analytic = analytic_rhs(spec.case, &factors.a_complex(), &factors.b_complex())?;
        let drift = config.drift_constant.unwrap_or_else(|| norm_product(&factors));
        let case = spec.case;
        let traces = sample_traces_with(&factors, n, config.samples, config.master_seed, config.workers, |rng| {
            sample_conjugators(case, n, rng)
        })?;
        let mc = covariance_of(&traces)?;
        let abs_err = (mc.value - analytic).norm();
        let tolerance = config.tolerance_sigmas * mc.standard_error + drift / (n as f64).sqrt();
        rows.push(ReportRow {
            n,
            mc,
            analytic,
            abs_err,
            tolerance,
            pass: abs_err <= tolerance,
        });
    }
    Ok(FluctuationReport {
        case: spec.case,
        m1: spec.m1(),
        m2: spec.m2(),
        samples: config.samples,
        seed: config.master_seed,
        rows,
        wall_time: start.elapsed(),
        warnings,
    })
}

/// Wall-clock timer that reads zero on targets without a system clock.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Self(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed();
        #[cfg(target_arch = "wasm32")]
        Duration::ZERO
    }
}

/// Default drift constant at dimension `n`: the product of all operator norms.
pub fn default_drift_constant(spec: &EnsembleSpec, n: usize) -> Result<f64, FluctuationError> {
    Ok(norm_product(&build_centered_factors(spec, n)?))
}

fn norm_product(factors: &CenteredFactors) -> f64 {
    factors.a.iter().chain(&factors.b).map(|m| m.operator_norm()).product()
}
