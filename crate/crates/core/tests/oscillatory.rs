use std::f64::consts::FRAC_PI_2;

use mb_lab::constants::{c_emp, CALIBRATION_SAMPLES, CALIBRATION_SEED};
use mb_lab::oscillatory::{bound_value, integrate_weight, ratio_scan, Lemma, WeightIntegralSpec};
use mb_lab::quadrature::composite_gl;

/// Whole-line integral of the weight after `x = x0 + l tan(theta)`.
fn brute_force(spec: &WeightIntegralSpec, x0: f64, l: f64, panels: usize) -> f64 {
    let (th, w) = composite_gl(-FRAC_PI_2, FRAC_PI_2, panels, 16);
    th.iter()
        .zip(&w)
        .map(|(&t, &w)| {
            let c = t.cos();
            w * spec.weight(x0 + l * t.tan()) * l / (c * c)
        })
        .sum()
}

#[test]
fn quad_sharp_rho2_survives_doubled_resolution() {
    let scan = ratio_scan(Lemma::QuadSharp, &[2.0], CALIBRATION_SAMPLES, CALIBRATION_SEED).unwrap();
    let spec = scan[0].refined.spec;
    let s = spec.sigma;
    let x0 = -s[1] / (2.0 * s[2]);
    let l = s[2].abs().powf(-0.5);
    let lib = integrate_weight(&spec).unwrap().value;
    let a = brute_force(&spec, x0, l, 4096);
    let b = brute_force(&spec, x0, l, 8192);
    assert!((b / a - 1.0).abs() < 0.05, "{a} {b}");
    assert!((b / lib - 1.0).abs() < 0.05, "{b} {lib}");
    let ratio = b / bound_value(&spec).unwrap();
    let frozen = c_emp(Lemma::QuadSharp, 2.0).unwrap();
    assert!((ratio / frozen - 1.0).abs() < 0.05, "{ratio} {frozen}");
}

#[test]
fn scans_are_deterministic() {
    let a = ratio_scan(Lemma::TauPair, &[1.5, 2.0], 50, 7).unwrap();
    let b = ratio_scan(Lemma::TauPair, &[1.5, 2.0], 50, 7).unwrap();
    assert_eq!(a, b);
    let c = ratio_scan(Lemma::TauPair, &[1.5, 2.0], 50, 8).unwrap();
    assert_ne!(a[0].rows, c[0].rows);
}

#[test]
fn tau_pair_refined_matches_frozen() {
    let scan = ratio_scan(Lemma::TauPair, Lemma::TauPair.default_rho_grid(), CALIBRATION_SAMPLES, CALIBRATION_SEED).unwrap();
    for r in scan {
        let c = c_emp(Lemma::TauPair, r.rho).unwrap();
        assert!((r.refined.report.ratio / c - 1.0).abs() < 1e-9, "{} {}", r.rho, r.refined.report.ratio);
        assert!(r.rows.iter().all(|x| x.report.ratio <= c));
    }
}
