use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluctlab::dft_gauss::{
    classify_zero_pairings, reciprocity_residual, zero_pairings_by_scan, GaussSumParams, TwoBlockShape,
};
use fluctlab::ensembles::{build_centered_factors, ConjugatorCase, DeterministicFamily, EnsembleSpec};
use fluctlab::fluctuation::experiment::parse_key_values;
use fluctlab::fluctuation::{
    bounded_cumulant_scan, exact_cov_decomposition_check, run_experiment, ExperimentConfig, FluctuationError,
};
use fluctlab::graph_sum::graph_sum_exponent;
use fluctlab::partition::{enumerate, mobius, GroundSet, PartitionFilter, SetPartition};

#[derive(Parser)]
#[command(
    name = "fluctlab",
    version,
    about = "Second-order fluctuation experiments for randomly rotated matrix products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo covariance against the analytic limit on an N grid; writes CSV.
    VerifyFluctuations(ExperimentArgs),
    /// Exact small-N check of the covariance decomposition (m1 = m2 = 1).
    ExactCheck {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Largest accepted residual.
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Growth of the order-n cumulant of Tr Y_N across the N grid.
    CumulantScan {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Cumulant order (2 to 4).
        #[arg(long, default_value_t = 3)]
        order: usize,
    },
    /// Lists the symmetric pairings whose permuted partition polynomial vanishes.
    ClassifyPairings {
        #[arg(long, default_value_t = 1)]
        m1: usize,
        #[arg(long, default_value_t = 1)]
        m2: usize,
    },
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Conjugator case: 1, 2, 3 or haar.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    /// Comma separated, strictly increasing dimensions.
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Explicit symmetric matrix file: a line with N, then N rows.
    #[arg(long)]
    d_matrix: Option<PathBuf>,
    /// alternating | diag:v1,v2,... | interp:v1,v2,... | rotated:SEED:v1,v2,...
    #[arg(long)]
    d_family: Option<String>,
    /// Polynomial coefficients c0,c1,... (';' separates one list per factor).
    #[arg(long)]
    poly: Option<String>,
    /// Worker threads (0 uses all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    tolerance_sigmas: Option<f64>,
    #[arg(long)]
    drift_constant: Option<f64>,
}

/// Failure classes mapped to exit codes 1 and 2.
enum Failure {
    Checks,
    Config(String),
    Run(String),
}

impl From<FluctuationError> for Failure {
    fn from(e: FluctuationError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Run(e.to_string())
        }
    }
}

impl ExperimentArgs {
    fn merged_map(&self, defaults: &[(&str, &str)]) -> Result<BTreeMap<String, String>, Failure> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
                parse_key_values(&text)?
            }
            None => BTreeMap::new(),
        };
        // the output path is not part of the experiment itself
        map.remove("out");
        let flags: [(&str, Option<String>); 12] = [
            ("case", self.case.clone()),
            ("m1", self.m1.map(|v| v.to_string())),
            ("m2", self.m2.map(|v| v.to_string())),
            ("n-grid", self.n_grid.clone()),
            ("samples", self.samples.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("d-matrix", self.d_matrix.as_ref().map(|p| p.display().to_string())),
            ("d-family", self.d_family.clone()),
            ("poly", self.poly.clone()),
            ("workers", self.workers.map(|v| v.to_string())),
            ("tolerance-sigmas", self.tolerance_sigmas.map(|v| v.to_string())),
            ("drift-constant", self.drift_constant.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                if key == "d-matrix" {
                    map.remove("d-family");
                }
                if key == "d-family" {
                    map.remove("d-matrix");
                }
                map.insert(key.to_string(), v);
            }
        }
        for (key, value) in defaults {
            map.entry(key.to_string()).or_insert_with(|| value.to_string());
        }
        Ok(map)
    }

    /// Output path from the flag, else from the configuration file.
    fn out_path(&self) -> Result<Option<PathBuf>, Failure> {
        if self.out.is_some() {
            return Ok(self.out.clone());
        }
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
                Ok(parse_key_values(&text)?.get("out").map(PathBuf::from))
            }
            None => Ok(None),
        }
    }

    fn config(&self, defaults: &[(&str, &str)]) -> Result<ExperimentConfig, Failure> {
        Ok(ExperimentConfig::from_map(&self.merged_map(defaults)?)?)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify(args: &ExperimentArgs) -> Result<bool, Failure> {
    let config = args.config(&[])?;
    let report = run_experiment(&config)?;
    match args.out_path()? {
        Some(path) => {
            report.write_csv(&path)?;
            print!("{}", report.summary());
            println!("wrote {}", path.display());
        }
        None => {
            eprint!("{}", report.summary());
            print!("{}", report.to_csv());
        }
    }
    Ok(report.all_pass())
}

fn exact(args: &ExperimentArgs, tolerance: f64) -> Result<bool, Failure> {
    let config = args.config(&[("n-grid", "3"), ("samples", "100")])?;
    let spec = &config.spec;
    if spec.m1() != 1 || spec.m2() != 1 {
        return Err(Failure::Config("exact-check supports m1 = m2 = 1 only".into()));
    }
    let mut all_pass = true;
    let mut text = String::from("case,N,lhs_re,lhs_im,rhs_re,rhs_im,residual,pass\n");
    for &n in &config.n_grid {
        let factors = build_centered_factors(spec, n).map_err(FluctuationError::from)?;
        let check = exact_cov_decomposition_check(spec.case, &factors.a_complex(), &factors.b_complex())?;
        let pass = check.residual <= tolerance;
        all_pass &= pass;
        writeln!(
            text,
            "{},{n},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{pass}",
            spec.case, check.lhs.re, check.lhs.im, check.rhs.re, check.rhs.im, check.residual
        )
        .expect("writing to a String");
    }
    emit(&text, args.out_path()?.as_deref())?;
    Ok(all_pass)
}

fn scan(args: &ExperimentArgs, order: usize) -> Result<bool, Failure> {
    let config = args.config(&[])?;
    let report = bounded_cumulant_scan(&config, order)?;
    let mut text = String::from("N,order,cumulant_re,cumulant_im,se\n");
    for (n, e) in &report.rows {
        writeln!(
            text,
            "{n},{order},{:.16e},{:.16e},{:.16e}",
            e.value.re, e.value.im, e.standard_error
        )
        .expect("writing to a String");
    }
    emit(&text, args.out_path()?.as_deref())?;
    eprintln!(
        "fitted slope {:.4} +- {:.4}: {}",
        report.slope,
        report.slope_se,
        if report.pass { "bounded" } else { "growth detected" }
    );
    Ok(report.pass)
}

fn classify(m1: usize, m2: usize) -> Result<bool, Failure> {
    let shape = TwoBlockShape::new(m1, m2).map_err(|e| Failure::Config(e.to_string()))?;
    let classified = classify_zero_pairings(&shape).map_err(|e| Failure::Config(e.to_string()))?;
    let scanned = zero_pairings_by_scan(&shape).map_err(|e| Failure::Run(e.to_string()))?;
    for c in &classified {
        let conditions: Vec<String> = c.conditions.iter().map(u8::to_string).collect();
        println!("{}  conditions {}", c.partition, conditions.join(","));
    }
    let listed: std::collections::BTreeSet<SetPartition> = classified.into_iter().map(|c| c.partition).collect();
    let agree = listed == scanned;
    println!(
        "{} pairings; exhaustive scan finds {}; {}",
        listed.len(),
        scanned.len(),
        if agree { "sets agree" } else { "sets differ" }
    );
    Ok(agree)
}

fn selftest() -> Result<bool, Failure> {
    let mut all = true;
    let mut report = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        all &= ok;
    };
    let parts: Vec<SetPartition> = enumerate(&GroundSet::plain(4), PartitionFilter::All)
        .map_err(|e| Failure::Run(e.to_string()))?
        .collect();
    let mobius_ok = parts.iter().all(|eta| {
        parts.iter().filter(|t| eta.refines(t).unwrap_or(false)).all(|theta| {
            let s: i64 = parts
                .iter()
                .filter(|s| eta.refines(s).unwrap_or(false) && s.refines(theta).unwrap_or(false))
                .map(|s| mobius(eta, s).unwrap_or(0))
                .sum();
            s == i64::from(eta == theta)
        })
    });
    report("Mobius defining identity on P(4)", mobius_ok);

    let example: Result<SetPartition, _> =
        "{{-3},{3,1,-2},{-5,-1,-7,-4},{7},{2,4},{6},{-6,5,8},{-8},{-10,12},{10,-12},{-11,11,-9},{9}}".parse();
    let tau_ok = example
        .ok()
        .and_then(|pi| graph_sum_exponent(&pi).ok())
        .is_some_and(|t| t == 4.into());
    report("graph-sum exponent of the worked example is 4", tau_ok);

    let gauss_ok = (1..=9i64).all(|a| {
        (1..=9i64).all(|c| {
            (-4..=4i64).all(|b| GaussSumParams::new(a, b, c).map_or(true, |p| reciprocity_residual(&p) < 1e-9))
        })
    });
    report("Gauss sum reciprocity", gauss_ok);

    report("zero-pairing classification for (1,1)", classify_quiet(1, 1));

    let spec = EnsembleSpec::linear(
        ConjugatorCase::Case1,
        1,
        1,
        DeterministicFamily::DiagonalRepeated(vec![1.0, -1.0, 0.0]),
    );
    let exact_ok = build_centered_factors(&spec, 3)
        .ok()
        .and_then(|f| exact_cov_decomposition_check(ConjugatorCase::Case1, &f.a_complex(), &f.b_complex()).ok())
        .is_some_and(|c| c.residual < 1e-10);
    report("exact covariance decomposition at N = 3", exact_ok);

    let spec = EnsembleSpec::linear(
        ConjugatorCase::Case2,
        1,
        1,
        DeterministicFamily::Rotated {
            pattern: vec![1.0, -1.0],
            seed: 1,
        },
    );
    let mc_ok = run_experiment(&ExperimentConfig::new(spec, vec![32], 2000, 7))
        .map(|r| r.all_pass())
        .unwrap_or(false);
    report("Monte Carlo covariance at N = 32 within tolerance", mc_ok);
    Ok(all)
}

fn classify_quiet(m1: usize, m2: usize) -> bool {
    let Ok(shape) = TwoBlockShape::new(m1, m2) else {
        return false;
    };
    match (classify_zero_pairings(&shape), zero_pairings_by_scan(&shape)) {
        (Ok(c), Ok(s)) => {
            c.into_iter()
                .map(|c| c.partition)
                .collect::<std::collections::BTreeSet<_>>()
                == s
        }
        _ => false,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::VerifyFluctuations(args) => verify(args),
        Command::ExactCheck { args, tolerance } => exact(args, *tolerance),
        Command::CumulantScan { args, order } => scan(args, *order),
        Command::ClassifyPairings { m1, m2 } => classify(*m1, *m2),
        Command::Selftest => selftest(),
    };
    match result.and_then(|ok| if ok { Ok(()) } else { Err(Failure::Checks) }) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
