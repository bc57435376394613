use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use clonekit::cloner::{clone_with, estimate_from_stat, ClonerConfig, Emit, ThetaSource};
use clonekit::families::Family;
use clonekit::lan::{loglik_ratio, quantile_coupling, score_process};
use clonekit::stats::Moments;

fn family_strategy() -> impl Strategy<Value = (Family, f64)> {
    prop_oneof![
        (0.02f64..0.98).prop_map(|t| (Family::Bernoulli, t)),
        (0.1f64..20.0).prop_map(|t| (Family::Poisson, t)),
        (-5.0f64..5.0).prop_map(|t| (Family::GaussianLocation { sigma: 1.5 }, t)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn resampling_keeps_the_statistic((family, theta) in family_strategy(), n in 1usize..60, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let f = family.at(theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // targets inside the achievable range, so nothing is clipped
        let target = match family {
            Family::Bernoulli => frac * n as f64,
            Family::Poisson => frac * 3.0 * n as f64 * theta,
            Family::GaussianLocation { .. } => (frac - 0.5) * 10.0 * n as f64,
        };
        let res = f.conditional_resample(n, target, &mut rng).unwrap();
        prop_assert_eq!(res.data.len(), n);
        prop_assert!(!res.clipped);
        let sum: f64 = res.data.iter().sum();
        prop_assert!((sum - res.stat).abs() < 1e-9 * (1.0 + res.stat.abs()));
        if family.is_discrete() {
            prop_assert!(res.stat == target.floor() || res.stat == target.floor() + 1.0);
            prop_assert!(res.data.iter().all(|w| *w >= 0.0 && w.fract() == 0.0));
        } else {
            prop_assert!((res.stat - target).abs() < 1e-12);
        }
    }

    #[test]
    fn rounding_is_mean_preserving(theta in 0.05f64..0.95, n in 1usize..200, frac in 0.0f64..1.0) {
        let f = Family::Bernoulli.at(theta).unwrap();
        let s = frac * n as f64;
        let (atoms, clipped) = f.rounding_law(n, s).unwrap();
        prop_assert!(!clipped);
        let mass: f64 = atoms.iter().map(|a| a.1).sum();
        let mean: f64 = atoms.iter().map(|&(k, w)| k as f64 * w).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!((mean - s).abs() < 1e-8);
    }

    #[test]
    fn score_is_affine_in_the_statistic((family, theta) in family_strategy(), n in 1usize..500, s in -50.0f64..50.0) {
        let f = family.at(theta).unwrap();
        let back = f.stat_from_score(n, f.score_from_stat(n, s));
        prop_assert!((back - s).abs() < 1e-9 * (1.0 + s.abs()));
    }
}

#[test]
fn gaussian_lan_is_exact() {
    let f = Family::GaussianLocation { sigma: 0.7 }.at(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [1, 10, 1000] {
        let data = f.sample(n, &mut rng);
        let lr = loglik_ratio(&f, 1.3, &data).unwrap();
        assert!(lr.residual.abs() < 1e-9 * (1.0 + lr.exact_loglr.abs()), "n={n}: {}", lr.residual);
    }
}

#[test]
fn score_process_hand_example() {
    // Bernoulli(0.5): ℓ = 4(ω − ½), so ℓ^4 of (1,1,1,0) is 4·1/2 = 2
    let f = Family::Bernoulli.at(0.5).unwrap();
    let v = score_process(&f, &[1.0, 1.0, 1.0, 0.0]).unwrap();
    assert_eq!(v.n, 4);
    assert!((v.value - 2.0).abs() < 1e-12);
}

#[test]
fn estimator_is_root_n_consistent() {
    // θ̂ is the sample mean rounded to the n^{-1/2} grid, so √n(θ̂ − θ) has
    // variance θ(1 − θ) plus at most the uniform rounding term 1/12
    let theta = 0.3;
    let f = Family::Bernoulli.at(theta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n1 in [100usize, 400] {
        let mut m = Moments::default();
        for _ in 0..20_000 {
            let s = f.sample_stat(n1, &mut rng);
            let est = estimate_from_stat(Family::Bernoulli, n1, s);
            m.push((n1 as f64).sqrt() * (est.theta_hat - theta));
        }
        assert!(m.mean().abs() < 0.5 + 4.0 * m.std_error(), "n1={n1}: mean {}", m.mean());
        let v = m.variance();
        assert!(v > 0.9 * 0.21 && v < 0.21 + 1.0 / 12.0 + 0.05, "n1={n1}: variance {v}");
    }
}

#[test]
fn amplifier_gain_sign_and_size() {
    // with θ̂ frozen at θ + h/√n the amplified statistic has mean −√r·h
    let (theta, h, r, n) = (0.3, 1.0, 2.0, 400usize);
    let f = Family::Bernoulli.at(theta).unwrap();
    let cfg = ClonerConfig::new(n, r, 0.05, 0.01, 0).unwrap();
    let frozen = ThetaSource::Frozen(theta + h / (n as f64).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut m = Moments::default();
    for _ in 0..10_000 {
        let data = f.sample(n, &mut rng);
        let rec = clone_with(Family::Bernoulli, &data, &cfg, frozen, Emit::StatOnly, &mut rng).unwrap();
        assert_eq!((rec.n1, rec.n2), (0, n));
        m.push(rec.amplified);
    }
    let want = -r.sqrt() * h;
    assert!((m.mean() - want).abs() < 4.0 * m.std_error(), "{} vs {want}", m.mean());
}

#[test]
fn coupling_distance_shrinks() {
    let f = Family::Poisson.at(2.0).unwrap();
    let rep = quantile_coupling(&f, &[16, 256], 0.1, 20_000).unwrap();
    let (a, b) = (rep.rows[0], rep.rows[1]);
    assert!(b.mean_abs_deviation < a.mean_abs_deviation);
    assert!(b.deviation_prob <= a.deviation_prob);
    assert!(rep.rows.iter().all(|r| (0.0..=1.0).contains(&r.deviation_prob)));
}
