//! Browser bindings: analytic limits, small Monte Carlo runs and the
//! zero-pairing classification, each taking and returning JSON strings.

use fluctlab::dft_gauss::{classify_zero_pairings, zero_pairings_by_scan, TwoBlockShape};
use fluctlab::ensembles::build_centered_factors;
use fluctlab::fluctuation::analytic::analytic_rhs;
use fluctlab::fluctuation::experiment::default_drift_constant;
use fluctlab::fluctuation::{run_experiment, ExperimentConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest dimension and sample count accepted from the page.
pub const MAX_DIMENSION: usize = 256;
pub const MAX_SAMPLES: usize = 20_000;

fn parse_config(text: &str) -> Result<ExperimentConfig, String> {
    let mut config = ExperimentConfig::from_text(text).map_err(|e| e.to_string())?;
    if config.n_grid.iter().any(|&n| n > MAX_DIMENSION) {
        return Err(format!("dimensions above {MAX_DIMENSION} are disabled in the browser"));
    }
    if config.samples > MAX_SAMPLES {
        return Err(format!("at most {MAX_SAMPLES} samples in the browser"));
    }
    config.workers = 1;
    Ok(config)
}

fn complex(z: fluctlab::Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Limiting covariance and drift constant at every grid dimension.
pub fn analytic_limit_json(config_text: &str) -> Result<String, String> {
    let config = parse_config(config_text)?;
    let rows = config
        .n_grid
        .iter()
        .map(|&n| {
            let f = build_centered_factors(&config.spec, n).map_err(|e| e.to_string())?;
            let value = analytic_rhs(config.spec.case, &f.a_complex(), &f.b_complex()).map_err(|e| e.to_string())?;
            let drift = default_drift_constant(&config.spec, n).map_err(|e| e.to_string())?;
            Ok(json!({ "n": n, "analytic": complex(value), "drift_constant": drift, "warnings": f.warnings }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!({ "case": config.spec.case.to_string(), "rows": rows }).to_string())
}

/// Monte Carlo covariance against the limit, with the CSV report.
pub fn simulate_json(config_text: &str) -> Result<String, String> {
    let config = parse_config(config_text)?;
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "mc": complex(r.mc.value),
                "se": r.mc.standard_error,
                "analytic": complex(r.analytic),
                "abs_err": r.abs_err,
                "tolerance": r.tolerance,
                "pass": r.pass,
            })
        })
        .collect();
    Ok(json!({
        "rows": rows,
        "all_pass": report.all_pass(),
        "warnings": report.warnings,
        "csv": report.to_csv(),
    })
    .to_string())
}

/// Symmetric pairings with vanishing permuted polynomial, with generating conditions.
pub fn classify_pairings_json(m1: usize, m2: usize) -> Result<String, String> {
    let shape = TwoBlockShape::new(m1, m2).map_err(|e| e.to_string())?;
    let classified = classify_zero_pairings(&shape).map_err(|e| e.to_string())?;
    let scanned = zero_pairings_by_scan(&shape).map_err(|e| e.to_string())?;
    let agrees = classified.len() == scanned.len() && classified.iter().all(|c| scanned.contains(&c.partition));
    let pairings: Vec<Value> = classified
        .iter()
        .map(|c| json!({ "partition": c.partition.to_string(), "conditions": c.conditions }))
        .collect();
    Ok(json!({ "m1": m1, "m2": m2, "pairings": pairings, "scan_count": scanned.len(), "agrees": agrees }).to_string())
}

#[wasm_bindgen(js_name = analyticLimit)]
pub fn analytic_limit(config_text: &str) -> Result<String, JsError> {
    analytic_limit_json(config_text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(config_text: &str) -> Result<String, JsError> {
    simulate_json(config_text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = classifyPairings)]
pub fn classify_pairings(m1: usize, m2: usize) -> Result<String, JsError> {
    classify_pairings_json(m1, m2).map_err(|e| JsError::new(&e))
}
