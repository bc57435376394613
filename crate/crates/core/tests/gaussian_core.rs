use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use clonekit::gaussian::{
    chi2_cdf, crossing_radius_sq, tv_ball_indicator, tv_isotropic, tv_numeric, tv_quadrature, GaussianShift, TvMethod,
    QUADRATURE_TOL,
};

fn pdf(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Composite Simpson of |φ₁ − φ_r| on [−L, L] with `n` panels, split at the
/// crossing points so the kink does not cost accuracy.
fn simpson_oracle(r: f64) -> f64 {
    let c = (r * r.ln() / (r - 1.0)).sqrt();
    let span = 12.0 * r.sqrt();
    let f = |x: f64| (pdf(x, 1.0) - pdf(x, r)).abs();
    let simpson = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    2.0 * (simpson(0.0, c, 20_000) + simpson(c, span, 200_000))
}

#[test]
fn chi2_examples() {
    assert!((chi2_cdf(2, 2.0 * 2f64.ln()).unwrap() - 0.5).abs() < 1e-14);
    assert_eq!(chi2_cdf(1, 0.0).unwrap(), 0.0);
    let t: f64 = 1.386294;
    let want = libm::erf((t / 2.0).sqrt());
    assert!((chi2_cdf(1, t).unwrap() - want).abs() < 1e-13);
    assert!((chi2_cdf(1, t).unwrap() - 0.7609).abs() < 1e-4);
    assert!(chi2_cdf(0, 1.0).is_err());
    assert!(chi2_cdf(1, -1.0).is_err());
}

#[test]
fn crossing_radius_equalizes_densities() {
    for &(r, m) in &[(2.0, 1u32), (4.0, 1), (2.0, 2), (3.5, 3), (10.0, 5)] {
        let t = crossing_radius_sq(r, m).unwrap();
        let mf = m as f64;
        // log densities at ‖y‖² = t
        let a = -0.5 * t - 0.5 * mf * (2.0 * std::f64::consts::PI).ln();
        let b = -0.5 * t / r - 0.5 * mf * (2.0 * std::f64::consts::PI * r).ln();
        assert!((a - b).abs() < 1e-12, "r={r}, m={m}");
    }
    assert!((crossing_radius_sq(2.0, 1).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
    assert!(crossing_radius_sq(1.0, 1).is_err());
}

#[test]
fn closed_form_matches_simpson_oracle() {
    // the oracle has its own quadrature and no incomplete gamma
    let oracle_2 = simpson_oracle(2.0);
    assert!((oracle_2 - 0.332_128_149_967).abs() < 1e-8, "oracle {oracle_2}");
    for r in [1.25, 2.0, 4.0, 9.0] {
        let got = tv_isotropic(r, 1).unwrap();
        assert!((got.value - simpson_oracle(r)).abs() < 1e-8, "r={r}");
        assert_eq!(got.std_error, 0.0);
        assert_eq!(got.method, TvMethod::ClosedForm);
    }
}

#[test]
fn two_dimensional_half() {
    // m = 2: P(1, x) = 1 − e^{−x}, t* = 4 ln 2 → 2(3/4 − 1/2)
    assert!((tv_isotropic(2.0, 2).unwrap().value - 0.5).abs() < 1e-14);
    assert_eq!(tv_isotropic(1.0, 3).unwrap().value, 0.0);
}

#[test]
fn ball_indicator_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(r, m) in &[(2.0, 1u32), (3.0, 3)] {
        let mc = tv_ball_indicator(r, m, 400_000, &mut rng).unwrap();
        let exact = tv_isotropic(r, m).unwrap().value;
        assert!((mc.value - exact).abs() < 4.0 * mc.std_error, "r={r} m={m}: {} vs {exact}", mc.value);
    }
}

#[test]
fn quadrature_handles_general_pairs() {
    // equal covariances: 2(2Φ(d/2) − 1) with d the Mahalanobis distance
    let p = GaussianShift::new(DVector::from_vec(vec![0.0, 0.0]), DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]))
        .unwrap();
    let q = GaussianShift::new(DVector::from_vec(vec![1.0, -0.5]), p.cov().clone()).unwrap();
    let d = {
        let diff = q.mean() - p.mean();
        let inv = p.cov().clone().try_inverse().unwrap();
        (diff.transpose() * inv * &diff)[(0, 0)].sqrt()
    };
    let want = 2.0 * (2.0 * 0.5 * (1.0 + libm::erf(d / 2.0 / std::f64::consts::SQRT_2)) - 1.0);
    let got = tv_quadrature(&p, &q, QUADRATURE_TOL).unwrap();
    assert!((got.value - want).abs() < 1e-6, "{} vs {want}", got.value);
    assert_eq!(got.std_error, 0.0);
}

#[test]
fn monte_carlo_reports_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = GaussianShift::standard(3).unwrap();
    let q = GaussianShift::isotropic(DVector::zeros(3), 2.0).unwrap();
    let mc = tv_numeric(&p, &q, TvMethod::MonteCarlo, 200_000, &mut rng).unwrap();
    assert!(mc.std_error > 0.0);
    assert!((mc.value - tv_isotropic(2.0, 3).unwrap().value).abs() < 4.0 * mc.std_error);
    assert!(tv_numeric(&p, &q, TvMethod::ClosedForm, 10, &mut rng).is_err());
}

#[test]
fn covariance_must_be_spd() {
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(GaussianShift::new(DVector::zeros(2), bad).is_err());
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
    assert!(GaussianShift::new(DVector::zeros(2), asym).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_bounded_and_increasing(r in 1.0f64..50.0, dr in 0.01f64..5.0, m in 1u32..6) {
        let a = tv_isotropic(r, m).unwrap().value;
        let b = tv_isotropic(r + dr, m).unwrap().value;
        prop_assert!((0.0..=2.0).contains(&a));
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form(r in 1.05f64..20.0, m in 1u32..3) {
        let dim = m as usize;
        let p = GaussianShift::standard(dim).unwrap();
        let q = GaussianShift::isotropic(DVector::zeros(dim), r).unwrap();
        let quad = tv_quadrature(&p, &q, QUADRATURE_TOL).unwrap().value;
        let back = tv_quadrature(&q, &p, QUADRATURE_TOL).unwrap().value;
        let closed = tv_isotropic(r, m).unwrap().value;
        prop_assert!((quad - closed).abs() < 1e-6);
        prop_assert!((quad - back).abs() < 1e-6);
    }

    #[test]
    fn loss_ignores_common_affine_maps(r in 1.1f64..6.0, shift in -3.0f64..3.0, scale in 0.2f64..5.0) {
        // N(μ, s²) vs N(μ, r·s²) has the same L1 distance for every μ, s
        let p = GaussianShift::scalar(shift, scale * scale).unwrap();
        let q = GaussianShift::scalar(shift, r * scale * scale).unwrap();
        let quad = tv_quadrature(&p, &q, QUADRATURE_TOL).unwrap().value;
        prop_assert!((quad - tv_isotropic(r, 1).unwrap().value).abs() < 1e-6);
    }
}
