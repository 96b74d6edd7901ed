//! Seeded frequency checks of the estimators against their null and
//! alternative behaviour.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use tsfactor::forecast::{dm_test, fit_ar1};
use tsfactor::simgen::{cell_design_seed, rmse_factors, simulate, DgpSpec, Example, Normalization};
use tsfactor::unitroot::estimate_r1;
use tsfactor::whitenoise::{estimate_r2_large, estimate_r2_small, hd_wn_test};
use tsfactor::{decompose, PipelineConfig, R1Params, TimeSeriesPanel};

fn iid(seed: u64, n: usize, d: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut rng))
}

fn ar(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Array1<f64> {
    let mut x = Array1::zeros(n);
    let mut prev = 0.0;
    for t in 0..n {
        let e: f64 = StandardNormal.sample(rng);
        prev = phi * prev + e;
        x[t] = prev;
    }
    x
}

fn count(reps: u64, f: impl Fn(u64) -> bool + Sync) -> usize {
    (0..reps).into_par_iter().filter(|&s| f(s)).count()
}

#[test]
fn iid_panel_has_no_unit_roots() {
    let hits = count(100, |s| {
        let panel = TimeSeriesPanel::new(iid(1000 + s, 2000, 4)).unwrap();
        estimate_r1(&panel, 2, &R1Params::default()).unwrap().r1_hat == 0
    });
    assert!(hits >= 95, "{hits}");
}

#[test]
fn hd_test_size_is_conservative() {
    let rejects = count(200, |s| {
        hd_wn_test(iid(2000 + s, 1000, 20).view(), 10, 0.05)
            .unwrap()
            .reject
    });
    assert!(rejects as f64 / 200.0 <= 0.08, "{rejects}");
}

#[test]
fn small_count_null_and_alternative() {
    let null = count(100, |s| {
        estimate_r2_small(iid(3000 + s, 2000, 4).view(), 10, 0.05)
            .unwrap()
            .0
            == 0
    });
    assert!(null >= 80, "{null}");
    // both white tails must survive a level-α test: expected rate (1 − α)² ≈ 0.9025
    let alt = count(400, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + s);
        let mut xi = iid(5000 + s, 2000, 4);
        xi.column_mut(0).assign(&ar(&mut rng, 2000, 0.8));
        xi.column_mut(1).assign(&ar(&mut rng, 2000, 0.7));
        estimate_r2_small(xi.view(), 10, 0.05).unwrap() == (2, 2)
    });
    let rate = alt as f64 / 400.0;
    let sd = (0.9025_f64 * 0.0975 / 400.0).sqrt();
    assert!((rate - 0.9025).abs() <= 3.0 * sd, "{rate}");
}

#[test]
fn large_count_null() {
    let hits = count(100, |s| {
        let c = estimate_r2_large(iid(6000 + s, 500, 40).view(), 10, 0.05, true, 0.75).unwrap();
        c.v_hat == 40 && c.r2_hat == 0
    });
    assert!(hits >= 85, "{hits}");
}

#[test]
fn ar_coefficient_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = ar(&mut rng, 5000, 0.5);
    let fit = fit_ar1(x.view()).unwrap();
    assert!((0.45..=0.55).contains(&fit.phi), "{}", fit.phi);
}

#[test]
fn dm_size_under_equal_loss() {
    let rejects = count(200, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(8000 + s);
        let a: Array1<f64> = (0..144)
            .map(|_| StandardNormal.sample(&mut rng))
            .map(|z: f64| z * z)
            .collect();
        let b: Array1<f64> = (0..144)
            .map(|_| StandardNormal.sample(&mut rng))
            .map(|z: f64| z * z)
            .collect();
        dm_test(a.view(), b.view(), None).unwrap().pvalue < 0.05
    });
    let rate = rejects as f64 / 200.0;
    assert!((0.02..=0.10).contains(&rate), "{rate}");
}

#[test]
fn prominent_noise_count_on_strong_design() {
    let design = cell_design_seed(1234, Example::Two, 50);
    let hits = count(100, |s| {
        let mut spec = DgpSpec::example2(50, 2000, 0.0, 9000 + s);
        spec.design_seed = Some(design);
        let (panel, _) = simulate(&spec).unwrap();
        decompose(&panel, &PipelineConfig::default()).unwrap().k_hat == 2
    });
    assert!(hits >= 90, "{hits}");
}

#[test]
fn stationary_component_error_shrinks_with_n() {
    let design = cell_design_seed(1234, Example::One, 6);
    let dist = |n: usize, s: u64| {
        let mut spec = DgpSpec::example1(6, n, 10_000 + s);
        spec.design_seed = Some(design);
        let (panel, truth) = simulate(&spec).unwrap();
        let cfg = PipelineConfig {
            r1_override: Some(2),
            r2_override: Some(2),
            ..PipelineConfig::default()
        };
        let dec = decompose(&panel, &cfg).unwrap();
        let est = dec.z2.dot(&dec.factor_loadings().t());
        rmse_factors(&est, &truth.stationary_component(), Normalization::Small).unwrap()
    };
    let better = count(100, |s| dist(3000, s) < dist(200, s));
    assert!(better >= 95, "{better}");
}
