use fluctlab::cumulants::{cumulant_from_moments, estimate_mixed_cumulant, MomentTable};
use fluctlab::ensembles::{
    build_centered_factors, for_each_conjugator_pair, sample_conjugators, sample_rng, sample_signed_permutation,
    CompensatedSum, ConjugatorCase, DeterministicFamily, EnsembleSpec, Polynomial,
};
use fluctlab::fluctuation::experiment::parse_family;
use fluctlab::fluctuation::{
    bounded_cumulant_scan, exact_cov_decomposition_check, monte_carlo_cov, run_experiment, ExperimentConfig,
};
use fluctlab::linalg::{adjoint, CMatrix};
use fluctlab::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn rotated(seed: u64) -> DeterministicFamily {
    DeterministicFamily::Rotated {
        pattern: vec![1.0, -1.0],
        seed,
    }
}

fn relative_gap(u: &[fluctlab::ensembles::Conjugator; 2]) -> CMatrix {
    adjoint(&u[0].to_dense()).dot(&u[1].to_dense())
}

#[test]
fn entry_moments_are_invariant_under_signed_permutation_conjugation() {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let tuples: [([usize; 4], [usize; 4]); 3] = [
        ([0, 1, 0, 1], [1, 0, 1, 0]),
        ([0, 0, 2, 2], [1, 1, 0, 0]),
        ([0, 1, 2, 0], [0, 2, 1, 0]),
    ];
    for case in [ConjugatorCase::Case1, ConjugatorCase::Case2, ConjugatorCase::Case3] {
        let twists: Vec<_> = (0..5).map(|_| sample_signed_permutation(n, &mut rng)).collect();
        for (i, j) in &tuples {
            let mut base = CompensatedSum::default();
            let mut twisted = vec![CompensatedSum::default(); twists.len()];
            let count = for_each_conjugator_pair(case, n, |u| {
                let v = relative_gap(u);
                base.add((0..4).map(|s| v[(i[s], j[s])]).product());
                for (acc, p) in twisted.iter_mut().zip(&twists) {
                    let w = p.conjugate(&v);
                    acc.add((0..4).map(|s| w[(i[s], j[s])]).product());
                }
            })
            .unwrap();
            let base = base.value() / count as f64;
            for acc in &twisted {
                let t = acc.value() / count as f64;
                assert!((t - base).norm() < 1e-12, "case {case}: {t} vs {base}");
            }
        }
    }
}

#[test]
fn scaled_entry_moments_stay_bounded() {
    for case in [ConjugatorCase::Case1, ConjugatorCase::Case3] {
        let mut moments = Vec::new();
        for n in [8usize, 16, 32] {
            let mut acc = [0.0f64; 7];
            let draws = 400;
            for s in 0..draws {
                let mut rng = sample_rng(5, s);
                let v = relative_gap(&sample_conjugators(case, n, &mut rng));
                let x = (n as f64).sqrt() * v[(0, 1)].norm();
                for (m, a) in acc.iter_mut().enumerate().skip(1) {
                    *a += x.powi(m as i32) / draws as f64;
                }
            }
            moments.push(acc);
        }
        for (m, (first, last)) in moments[0].iter().zip(&moments[2]).enumerate().skip(1) {
            assert!(*last < 2.0 * first.max(1.0), "case {case}, m={m}: {first} -> {last}");
        }
    }
}

#[test]
fn deterministic_families_are_self_adjoint_and_centered() {
    let mut spec = EnsembleSpec::linear(
        ConjugatorCase::Case1,
        2,
        1,
        parse_family("rotated:3:0.5,-2,1.5").unwrap(),
    );
    spec.families[1] = DeterministicFamily::DiagonalInterpolated(vec![-1.0, 3.0, 0.2]);
    spec.p = vec![
        Polynomial::new(vec![1.0, 2.0, -1.0]).unwrap(),
        Polynomial::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap(),
        Polynomial::identity(),
        Polynomial::new(vec![0.0, 1.0, 1.0]).unwrap(),
    ];
    for n in [5usize, 16, 33] {
        let f = build_centered_factors(&spec, n).unwrap();
        for a in f.a.iter().chain(&f.b) {
            let dense = a.to_dense();
            assert!((&dense - &dense.t()).iter().all(|x| x.abs() < 1e-12));
            assert!(a.normalized_trace().abs() < 1e-12);
        }
    }
}

#[test]
fn exact_decomposition_for_signature_cases_at_four() {
    let spec = EnsembleSpec::linear(ConjugatorCase::Case2, 1, 1, rotated(21));
    let f = build_centered_factors(&spec, 4).unwrap();
    for case in [ConjugatorCase::Case2, ConjugatorCase::Case3] {
        let check = exact_cov_decomposition_check(case, &f.a_complex(), &f.b_complex()).unwrap();
        assert!(check.residual < 1e-10, "case {case}: {check:?}");
        assert!(check.lhs.norm() > 1e-3);
    }
}

#[test]
fn monte_carlo_error_shrinks_with_dimension() {
    let spec = EnsembleSpec::linear(ConjugatorCase::Case1, 1, 1, rotated(31));
    let config = ExperimentConfig::new(spec, vec![32, 256], 3000, 77);
    let report = run_experiment(&config).unwrap();
    let (small, large) = (&report.rows[0], &report.rows[1]);
    let noise = (small.mc.standard_error.powi(2) + large.mc.standard_error.powi(2)).sqrt();
    assert!(
        large.abs_err <= small.abs_err + 2.0 * noise,
        "{} -> {}",
        small.abs_err,
        large.abs_err
    );
}

#[test]
fn unequal_lengths_in_case_one_give_zero_covariance() {
    let spec = EnsembleSpec::linear(ConjugatorCase::Case1, 1, 2, rotated(41));
    let report = run_experiment(&ExperimentConfig::new(spec, vec![16, 32], 2000, 3)).unwrap();
    for row in &report.rows {
        assert_eq!(row.analytic, Complex64::new(0.0, 0.0));
        assert!(row.pass, "{row:?}");
    }
}

#[test]
fn second_order_scan_matches_covariance() {
    let spec = EnsembleSpec::linear(ConjugatorCase::Case2, 1, 1, rotated(51));
    let config = ExperimentConfig::new(spec.clone(), vec![8, 16], 500, 9);
    let scan = bounded_cumulant_scan(&config, 2).unwrap();
    for (n, est) in &scan.rows {
        assert_eq!(*est, monte_carlo_cov(&spec, *n, 500, 9, 0).unwrap());
    }
}

#[test]
fn deterministic_spec_has_vanishing_cumulants() {
    let spec = EnsembleSpec::linear(
        ConjugatorCase::Case3,
        1,
        1,
        DeterministicFamily::DiagonalRepeated(vec![0.0]),
    );
    let config = ExperimentConfig::new(spec, vec![8, 16], 200, 1);
    for order in [2, 3, 4] {
        let scan = bounded_cumulant_scan(&config, order).unwrap();
        assert!(scan.rows.iter().all(|(_, e)| e.value == Complex64::new(0.0, 0.0)));
        assert!(scan.pass);
    }
    assert!(bounded_cumulant_scan(&config, 5).is_err());
}

#[test]
fn gaussian_third_cumulant_vanishes_from_analytic_moments() {
    // independent N(mu_k, s_k^2); moments of products of distinct variables factor
    let mu = [0.3, -1.2, 2.0];
    let values: Vec<Complex64> = (0..8usize)
        .map(|mask| Complex64::new((0..3).filter(|k| mask >> k & 1 == 1).map(|k| mu[k]).product(), 0.0))
        .collect();
    let table = MomentTable::new(3, values).unwrap();
    assert!(cumulant_from_moments(&table).norm() < 1e-12);
}

#[test]
fn jackknife_error_matches_analytic_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 100_000;
    let samples: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            vec![Complex64::new(x, 0.0), Complex64::new(y, 0.0)]
        })
        .collect();
    let mean = estimate_mixed_cumulant(&samples.iter().map(|s| vec![s[0]]).collect::<Vec<_>>(), 1).unwrap();
    let analytic = 1.0 / (n as f64).sqrt();
    assert!(
        (mean.standard_error / analytic - 1.0).abs() < 0.2,
        "{}",
        mean.standard_error
    );
    let cov = estimate_mixed_cumulant(&samples, 2).unwrap();
    assert!(
        (cov.standard_error / analytic - 1.0).abs() < 0.2,
        "{}",
        cov.standard_error
    );
    assert!(cov.value.norm() < 4.0 * cov.standard_error);
}
