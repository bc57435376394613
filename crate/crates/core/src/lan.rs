//! Local asymptotic normality diagnostics for the one-parameter families.
//!
//! With `ℓ_θ^n = n^{−1/2} Σ ℓ_θ(ω_κ)`, the log-likelihood ratio of
//! `P_{θ+h/√n}^n` against `P_θ^n` is close to `h·ℓ_θ^n − ½h²J_θ`, and
//! `ℓ_θ^n` is close in law to `N(0, J_θ)`. The functions here measure both
//! approximations; for the Gaussian-location family they are exact.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{Family, FamilyPoint};
use crate::quadrature::adaptive_simpson;
use crate::rng::stream_rng;
use crate::special::normal_quantile;
use crate::stats::{wilson_interval, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreProcessValue {
    pub n: usize,
    pub value: f64,
}

/// `ℓ_θ^n` of a sample, via the sufficient statistic.
pub fn score_process(f: &FamilyPoint, data: &[f64]) -> Result<ScoreProcessValue> {
    let s = f.suff_stat(data)?;
    Ok(ScoreProcessValue { n: data.len(), value: f.score_from_stat(data.len(), s) })
}

/// Exact and quadratic log-likelihood ratios for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LanResidual {
    /// `ln Z_{θ,h}^n`, summed log-density differences.
    pub exact_loglr: f64,
    /// `h·ℓ_θ^n − ½h²J_θ`.
    pub quadratic: f64,
    pub residual: f64,
}

pub fn loglik_ratio(f: &FamilyPoint, h: f64, data: &[f64]) -> Result<LanResidual> {
    if data.is_empty() {
        return Err(Error::domain("log-likelihood ratio of an empty sample"));
    }
    let n = data.len();
    let shifted = f.family.at(f.theta + h / (n as f64).sqrt())?;
    let exact_loglr = if h == 0.0 {
        0.0
    } else {
        data.iter().map(|&w| shifted.log_density(w) - f.log_density(w)).sum()
    };
    let quadratic = h * score_process(f, data)?.value - 0.5 * h * h * f.fisher_info();
    Ok(LanResidual { exact_loglr, quadratic, residual: exact_loglr - quadratic })
}

/// Monte Carlo estimate of `P_θ^n{|residual| > threshold}` at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exceedance {
    pub n: usize,
    pub exceed: u64,
    pub trials: u64,
    pub prob: f64,
    /// 95% Wilson interval.
    pub ci: (f64, f64),
}

/// Exceedance probabilities of the LAN residual over an increasing `n` grid.
/// Grid points run in parallel; replicate `i` at grid index `g` uses its own
/// stream, so results do not depend on scheduling.
pub fn lan_residual_rate(
    f: &FamilyPoint,
    h: f64,
    n_grid: &[usize],
    threshold: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<Exceedance>> {
    check_grid(n_grid)?;
    if reps == 0 {
        return Err(Error::domain("reps must be positive"));
    }
    for &n in n_grid {
        f.family.at(f.theta + h / (n as f64).sqrt())?;
    }
    n_grid
        .par_iter()
        .map(|&n| {
            let key = format!("lan-residual/{n}");
            let mut exceed = 0u64;
            for i in 0..reps {
                let mut rng = stream_rng(seed, &key, i as u64);
                let data = f.sample(n, &mut rng);
                if loglik_ratio(f, h, &data)?.residual.abs() > threshold {
                    exceed += 1;
                }
            }
            let trials = reps as u64;
            Ok(Exceedance { n, exceed, trials, prob: exceed as f64 / reps as f64, ci: wilson_interval(exceed, trials, Z95) })
        })
        .collect()
}

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("n grid must be nonempty, positive and strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothedScore {
    pub epsilon: f64,
    pub value: f64,
}

/// `J_θ⁻¹ℓ_θ^n + Y_ε` with `Y_ε ~ N(0, ε)`.
pub fn smoothed_score<R: Rng + ?Sized>(f: &FamilyPoint, data: &[f64], epsilon: f64, rng: &mut R) -> Result<SmoothedScore> {
    let s = f.suff_stat(data)?;
    smoothed_from_stat(f, data.len(), s, epsilon, rng)
}

/// [`smoothed_score`] from the sufficient statistic of `n` observations.
pub fn smoothed_from_stat<R: Rng + ?Sized>(
    f: &FamilyPoint,
    n: usize,
    stat: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<SmoothedScore> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("smoothing variance must be >= 0, got {epsilon}")));
    }
    if n == 0 {
        return Err(Error::domain("smoothed score of an empty sample"));
    }
    let mut value = f.score_from_stat(n, stat) / f.fisher_info();
    if epsilon > 0.0 {
        value += epsilon.sqrt() * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(SmoothedScore { epsilon, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DqmRow {
    pub h: f64,
    /// `∫(√p_{θ+h} − √p_θ − (h/2)ℓ_θ√p_θ)² dμ`.
    pub integral: f64,
    /// `integral / h²` (zero at `h = 0`).
    pub ratio: f64,
}

/// Differentiability-in-quadratic-mean residuals for each step `h`.
pub fn dqm_residual(f: &FamilyPoint, h_grid: &[f64]) -> Result<Vec<DqmRow>> {
    h_grid
        .iter()
        .map(|&h| {
            if h == 0.0 {
                return Ok(DqmRow { h, integral: 0.0, ratio: 0.0 });
            }
            let g = f.family.at(f.theta + h)?;
            let term = |w: f64| {
                let sp = f.density(w).sqrt();
                (g.density(w).sqrt() - sp - 0.5 * h * f.score(w) * sp).powi(2)
            };
            let integral = match f.family {
                Family::Bernoulli => term(0.0) + term(1.0),
                Family::Poisson => {
                    let top = f.theta.max(g.theta);
                    let kmax = (top + 20.0 * top.sqrt() + 40.0).ceil() as u64;
                    (0..=kmax).map(|k| term(k as f64)).sum()
                }
                Family::GaussianLocation { sigma } => {
                    let lo = f.theta.min(g.theta) - 15.0 * sigma;
                    let hi = f.theta.max(g.theta) + 15.0 * sigma;
                    // tolerance scaled so that the ratio is resolved, not just the integral
                    adaptive_simpson(&term, lo, hi, 1e-10 * (h * h).min(1.0))
                }
            };
            Ok(DqmRow { h, integral, ratio: integral / (h * h) })
        })
        .collect()
}

/// The law of `ℓ_θ^n` as sorted `(value, mass)` atoms (discrete families).
pub fn score_law_atoms(f: &FamilyPoint, n: usize) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = f.stat_range(n, 1e-16)?;
    (lo..=hi)
        .map(|k| Ok((f.score_from_stat(n, k as f64), f.stat_pmf(n, k)?)))
        .filter(|a| !matches!(a, Ok((_, m)) if *m == 0.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingRow {
    pub n: usize,
    /// `ν{|η^n − η| ≥ ε_dev}` on the probe grid.
    pub deviation_prob: f64,
    pub sup_deviation: f64,
    /// `∫|η^n − η| dν`, the L1 coupling distance.
    pub mean_abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub eps_dev: f64,
    pub resolution: usize,
    pub rows: Vec<CouplingRow>,
}

/// Evaluates the quantile coupling `η^n(ϖ) = Q_n(ϖ)`, `η(ϖ) = √J·Φ⁻¹(ϖ)` on
/// the midpoint grid `ϖ_i = (i − ½)/resolution`.
pub fn quantile_coupling(f: &FamilyPoint, n_grid: &[usize], eps_dev: f64, resolution: usize) -> Result<CouplingReport> {
    check_grid(n_grid)?;
    if resolution == 0 {
        return Err(Error::domain("probe resolution must be positive"));
    }
    let sd = f.fisher_info().sqrt();
    let probes: Vec<f64> = (0..resolution).map(|i| (i as f64 + 0.5) / resolution as f64).collect();
    let limit: Vec<f64> = probes.iter().map(|&w| sd * normal_quantile(w)).collect();
    let rows = n_grid
        .par_iter()
        .map(|&n| {
            let coupled = if f.family.is_discrete() {
                discrete_quantiles(&score_law_atoms(f, n)?, &probes)
            } else {
                // the score of a Gaussian sample is exactly N(0, J)
                limit.clone()
            };
            let devs: Vec<f64> = coupled.iter().zip(&limit).map(|(a, b)| (a - b).abs()).collect();
            let count = devs.iter().filter(|d| **d >= eps_dev).count();
            Ok(CouplingRow {
                n,
                deviation_prob: count as f64 / resolution as f64,
                sup_deviation: devs.iter().copied().fold(0.0, f64::max),
                mean_abs_deviation: devs.iter().sum::<f64>() / resolution as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingReport { eps_dev, resolution, rows })
}

/// Generalized inverse CDF at increasing probe levels.
pub fn discrete_quantiles(atoms: &[(f64, f64)], probes: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(probes.len());
    let mut cdf = 0.0;
    let mut k = 0;
    for &w in probes {
        while k + 1 < atoms.len() && cdf + atoms[k].1 < w {
            cdf += atoms[k].1;
            k += 1;
        }
        out.push(atoms[k].0);
    }
    out
}
