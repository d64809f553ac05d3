//! Monte-Carlo calibration runs behind the frozen seeds in the acceptance
//! suite. Ignored by default; run explicitly when revisiting a study design:
//!
//! ```text
//! cargo test -p gem-core --test calibration -- --ignored --nocapture
//! ```

use gem_core::cv::CvScheme;
use gem_core::design::parse_formula;
use gem_core::enet::{cv_enet, Family};
use gem_core::gem::fit_gem_dataset;
use gem_core::oracle::{confounder_study_spec, plant_effects};
use gem_core::pls::{cross_validate, encode_target, jackknife, majority_class_error, shave};
use gem_core::rng::Rng;
use ndarray::Array2;

/// (error on ER_disease, error on raw centered Y), LOO at one component.
fn confounder_errors(seed: u64) -> (f64, f64) {
    let synth = plant_effects(&confounder_study_spec(seed)).unwrap();
    let d = &synth.dataset;
    let model = parse_formula("y ~ disease + age").unwrap();
    let fit = fit_gem_dataset(&model, d).unwrap();
    let term = model.term("disease").unwrap();
    let er = fit.er_matrix(term).unwrap();
    let target = encode_target(d.variable("disease").unwrap()).unwrap();

    let cv_er = cross_validate(&er, &target, 1, CvScheme::Loo).unwrap();

    let mut yc = d.y.clone();
    let means = yc.sum_axis(ndarray::Axis(0)) / yc.nrows() as f64;
    for mut row in yc.rows_mut() {
        row -= &means;
    }
    let cv_raw = cross_validate(&yc, &target, 1, CvScheme::Loo).unwrap();
    (cv_er.error[0], cv_raw.error[0])
}

/// The margins the acceptance study freezes (seed 1) must be typical, not a
/// fluke: the joint pass rate over 100 seeds stays above 3 in 4. Multi-
/// component PLS would partially de-confound the rank-1 age structure by
/// itself (raw error drops to ~10%), which is why the study pins one
/// component; see the note in `oracle::confounder_study_spec`.
#[test]
#[ignore = "calibration sweep; run with --ignored when revising the study"]
fn confounder_margins_over_100_seeds() {
    let mut pass = 0;
    for seed in 0..100u64 {
        let (er, raw) = confounder_errors(seed);
        if er <= 0.05 && raw >= 0.20 {
            pass += 1;
        }
    }
    println!("joint margin pass rate: {pass}/100");
    assert!(pass >= 75, "pass rate collapsed: {pass}/100");
    let (er, raw) = confounder_errors(1);
    println!("frozen seed 1: er {er:.3} raw {raw:.3}");
    assert!(er <= 0.025 && raw >= 0.275, "frozen seed lost its slack");
}

/// Fraction of jackknife p-values below 0.05 on pure noise (n = 30, N = 200,
/// balanced two-class target), at one component.
fn jackknife_noise_fraction(seed: u64) -> f64 {
    let mut rng = Rng::seed_from_u64(seed);
    let n = 30;
    let nvar = 200;
    let x = Array2::from_shape_fn((n, nvar), |_| rng.gaussian());
    let labels: Vec<&str> = (0..n).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
    let var = gem_core::dataset::Variable::categorical("cls", &labels).unwrap();
    let coding = encode_target(&var).unwrap();
    let p = jackknife(&x, &coding, 1, CvScheme::Loo).unwrap();
    let below = (0..nvar).filter(|&j| p[[j, 0]] < 0.05).count();
    below as f64 / nvar as f64
}

#[test]
#[ignore = "calibration sweep; run with --ignored when revising the study"]
fn jackknife_noise_fraction_over_100_seeds() {
    let mut fracs: Vec<f64> = (0..100u64).map(jackknife_noise_fraction).collect();
    fracs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let in_band = fracs
        .iter()
        .filter(|&&f| (0.005..=0.15).contains(&f))
        .count();
    println!(
        "min {:.3} p25 {:.3} median {:.3} p75 {:.3} max {:.3}; in [0.005, 0.15]: {in_band}/100",
        fracs[0], fracs[25], fracs[50], fracs[75], fracs[99]
    );
    assert!(in_band >= 90);
}

/// Shaving on the canned 5-signal/45-noise study must keep every planted
/// variable for most seeds, and the step-0 trace error must equal the plain
/// cross-validation error always.
#[test]
#[ignore = "calibration sweep; run with --ignored when revising the study"]
fn shaving_subset_recovery_over_100_seeds() {
    let mut contains_all = 0;
    let mut step0_match = 0;
    for seed in 0..100u64 {
        let synth = plant_effects(&gem_core::oracle::shaving_study_spec(seed)).unwrap();
        let er = synth.dataset.y.clone();
        let coding = encode_target(synth.dataset.variable("cls").unwrap()).unwrap();
        let result = shave(&er, &coding, 2, 0.2, CvScheme::Loo).unwrap();
        if (0..5).all(|j| result.optimal_subset.contains(&j)) {
            contains_all += 1;
        }
        let cv = cross_validate(&er, &coding, 2, CvScheme::Loo).unwrap();
        if result.trace[0].error == cv.error[cv.ncomp_selected - 1] {
            step0_match += 1;
        }
    }
    println!("subset recovered {contains_all}/100, step0 equal {step0_match}/100");
    assert!(contains_all >= 85, "recovery collapsed: {contains_all}/100");
    assert_eq!(step0_match, 100);
}

#[test]
#[ignore = "calibration sweep; run with --ignored when revising the study"]
fn enet_noise_lambda_opt_over_50_seeds() {
    let mut worst_steps = 0usize;
    for seed in 0..50u64 {
        let mut rng = Rng::seed_from_u64(seed);
        let n = 30;
        let x = Array2::from_shape_fn((n, 60), |_| rng.gaussian());
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
        let path = cv_enet(&x, &y, 0.5, Family::Binomial, 50, CvScheme::Loo).unwrap();
        let opt = path.lambda_opt.unwrap();
        let idx = path.lambdas.iter().position(|&l| l == opt).unwrap();
        worst_steps = worst_steps.max(idx);
    }
    println!("max lambda_opt grid index over 50 noise seeds: {worst_steps}");
}

#[test]
#[ignore = "calibration sweep; run with --ignored when revising the study"]
fn pure_noise_loo_error_band_over_50_seeds() {
    let mut worst_gap = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = Rng::seed_from_u64(seed + 5000);
        let n = 40;
        let labels: Vec<&str> = (0..n).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
        let x = Array2::from_shape_fn((n, 30), |_| rng.gaussian());
        let var = gem_core::dataset::Variable::categorical("cls", &labels).unwrap();
        let coding = encode_target(&var).unwrap();
        let cv = cross_validate(&x, &coding, 2, CvScheme::Loo).unwrap();
        let majority = majority_class_error(&labels);
        let gap = (cv.error[cv.ncomp_selected - 1] - majority).abs();
        worst_gap = worst_gap.max(gap);
    }
    println!("max |LOO error - majority| over 50 noise seeds: {worst_gap:.3}");
}
