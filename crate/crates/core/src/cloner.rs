//! The asymptotic `(n, rn)` cloner and its loss against `P_θ^{rn}`.
//!
//! Pipeline for one input sample `ω^n`:
//! 1. `θ̂` from the first `n₁ = ⌈δn⌉` observations (MLE, clipped to the
//!    interior, rounded to the `n₁^{-1/2}` grid);
//! 2. the smoothed score `L = J⁻¹ℓ^{n₂}_{θ̂} + Y_ε` of the other `n₂`;
//! 3. `X̃ = √(rn/n₂)·L`;
//! 4. the statistic `T*` with `ℓ^{rn}_{θ̂}(T*) = J_{θ̂}X̃`, randomized-rounded;
//! 5. `ω^{rn}` drawn from the conditional law given `T*`.
//!
//! Output and target share the conditional law given the count, so the
//! sequence-level L1 loss equals the count-level one and the loss estimator
//! only tracks count laws.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{Family, FamilyPoint};
use crate::lan::smoothed_from_stat;
use crate::rng::stream_rng;
use crate::stats::Z95;

/// Replicate count below which the loss estimator warns about its bias.
pub const MIN_RECOMMENDED_REPS: usize = 1000;

/// Clip rate above which a loss run raises an alarm.
pub const CLIP_ALARM: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClonerConfig {
    pub n: usize,
    pub r: f64,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ClonerConfig {
    pub fn new(n: usize, r: f64, delta: f64, epsilon: f64, seed: u64) -> Result<Self> {
        let cfg = ClonerConfig { n, r, delta, epsilon, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n must be positive"));
        }
        if !(self.r >= 1.0) || !self.r.is_finite() {
            return Err(Error::config(format!("r must be >= 1, got {}", self.r)));
        }
        let rn = self.r * self.n as f64;
        if (rn - rn.round()).abs() > 1e-9 * rn.max(1.0) {
            return Err(Error::config(format!("r·n = {rn} is not an integer")));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        let n1 = self.n1();
        if n1 < 1 || n1 >= self.n {
            return Err(Error::config(format!(
                "n1 = ceil(delta·n) = {n1} leaves no data for one of the two stages (n = {})",
                self.n
            )));
        }
        Ok(())
    }

    /// Size of the estimation split, `⌈δn⌉`.
    pub fn n1(&self) -> usize {
        // guard against 0.05·1600 = 80.00000000000001
        let x = self.delta * self.n as f64;
        let r = x.round();
        if (x - r).abs() < 1e-9 {
            r as usize
        } else {
            x.ceil() as usize
        }
    }

    pub fn n2(&self) -> usize {
        self.n - self.n1()
    }

    /// Output size `rn`.
    pub fn rn(&self) -> usize {
        (self.r * self.n as f64).round() as usize
    }
}

/// Where `θ̂` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThetaSource {
    /// Estimate from the first `n₁` observations.
    #[default]
    Estimate,
    /// Use a fixed value and feed all `n` observations to the score stage
    /// (`n₁ = 0`). A test hook: with `r = 1` and `ε = 0` the cloner then
    /// reproduces its input law exactly.
    Frozen(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub theta_hat: f64,
    pub n_used: usize,
}

/// MLE (the sample mean for every built-in family), clipped to
/// `[lo + 1/n, hi − 1/n]` and rounded to the nearest point of `n^{-1/2}ℤ`
/// inside that interval. Ties go to the lower grid point. If no grid point
/// falls inside the clipped interval the clipped MLE is kept.
pub fn estimate_theta(family: Family, data: &[f64]) -> Result<Estimate> {
    if data.is_empty() {
        return Err(Error::domain("cannot estimate from an empty sample"));
    }
    let s: f64 = data.iter().sum();
    Ok(estimate_from_stat(family, data.len(), s))
}

/// [`estimate_theta`] from the sufficient statistic of `n` observations.
pub fn estimate_from_stat(family: Family, n: usize, stat: f64) -> Estimate {
    let mle = stat / n as f64;
    let clipped = family.clip_to_interior(mle, n);
    let (lo, hi) = family.domain();
    let pad = 1.0 / n as f64;
    let (a, b) = (if lo.is_finite() { lo + pad } else { lo }, if hi.is_finite() { hi - pad } else { hi });
    let step = 1.0 / (n as f64).sqrt();
    let k = (clipped / step).floor();
    let below = k * step;
    let above = (k + 1.0) * step;
    let inside = |x: f64| x >= a - 1e-12 && x <= b + 1e-12;
    let theta_hat = match (inside(below), inside(above)) {
        (true, true) => {
            if clipped - below <= above - clipped {
                below
            } else {
                above
            }
        }
        (true, false) => below,
        (false, true) => above,
        (false, false) => clipped,
    };
    Estimate { theta_hat, n_used: n }
}

/// Whether [`clone`] materializes the output sample or only its statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Emit {
    #[default]
    Data,
    StatOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloneRunRecord {
    pub theta_hat: f64,
    pub n1: usize,
    pub n2: usize,
    /// Smoothed score `L`.
    pub score: f64,
    /// Amplified statistic `X̃`.
    pub amplified: f64,
    /// Real-valued target statistic before rounding.
    pub target_stat: f64,
    /// Statistic imposed on the output (after rounding and clipping).
    pub stat: f64,
    pub clipped: bool,
    /// The `rn` output observations (empty for [`Emit::StatOnly`]).
    pub data: Vec<f64>,
}

/// Runs the cloner on `data` (length `cfg.n`).
pub fn clone<R: Rng + ?Sized>(family: Family, data: &[f64], cfg: &ClonerConfig, rng: &mut R) -> Result<CloneRunRecord> {
    clone_with(family, data, cfg, ThetaSource::Estimate, Emit::Data, rng)
}

pub fn clone_with<R: Rng + ?Sized>(
    family: Family,
    data: &[f64],
    cfg: &ClonerConfig,
    source: ThetaSource,
    emit: Emit,
    rng: &mut R,
) -> Result<CloneRunRecord> {
    cfg.validate()?;
    if data.len() != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: data.len() });
    }
    let (theta_hat, rest) = match source {
        ThetaSource::Estimate => {
            let n1 = cfg.n1();
            (estimate_theta(family, &data[..n1])?.theta_hat, &data[n1..])
        }
        ThetaSource::Frozen(t) => (t, data),
    };
    let s2: f64 = rest.iter().sum();
    let stage = stage(family, theta_hat, cfg, rest.len(), s2, rng)?;
    let point = family.at(theta_hat)?;
    let rn = cfg.rn();
    let (stat, clipped, out) = match emit {
        Emit::Data => {
            let res = point.conditional_resample(rn, stage.target_stat, rng)?;
            (res.stat, res.clipped, res.data)
        }
        Emit::StatOnly => {
            let (stat, clipped) = point.round_target(rn, stage.target_stat, rng)?;
            (stat, clipped, Vec::new())
        }
    };
    Ok(CloneRunRecord {
        theta_hat,
        n1: data.len() - rest.len(),
        n2: rest.len(),
        score: stage.score,
        amplified: stage.amplified,
        target_stat: stage.target_stat,
        stat,
        clipped,
        data: out,
    })
}

struct Stage {
    score: f64,
    amplified: f64,
    target_stat: f64,
}

/// Steps 2 to 4 from the score-stage statistic `s2` of `n2` observations.
fn stage<R: Rng + ?Sized>(family: Family, theta_hat: f64, cfg: &ClonerConfig, n2: usize, s2: f64, rng: &mut R) -> Result<Stage> {
    let point = family.at(theta_hat)?;
    let rn = cfg.rn();
    let score = smoothed_from_stat(&point, n2, s2, cfg.epsilon, rng)?.value;
    let amplified = (rn as f64 / n2 as f64).sqrt() * score;
    let target_stat = point.stat_from_score(rn, point.fisher_info() * amplified);
    Ok(Stage { score, amplified, target_stat })
}

/// Options for [`clone_loss_discrete`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossOptions {
    pub reps: usize,
    /// Bootstrap resamples for the confidence interval.
    pub bootstrap: usize,
    pub theta_source: ThetaSource,
    /// Extra stream key, so that several runs under one seed stay independent.
    pub stream: u64,
}

impl LossOptions {
    pub fn new(reps: usize) -> Self {
        LossOptions { reps, bootstrap: 200, theta_source: ThetaSource::Estimate, stream: 0 }
    }
}

/// Estimated `‖Λ(P_θ^n) − P_θ^{rn}‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloneLoss {
    pub theta: f64,
    pub n: usize,
    pub rn: usize,
    pub reps: usize,
    /// Rao–Blackwellized estimate (average of per-replicate rounding pmfs).
    pub loss: f64,
    /// 95% basic-bootstrap interval of `loss`.
    pub ci: (f64, f64),
    /// Plug-in estimate from the raw output counts.
    pub plug_in: f64,
    /// Fraction of replicates whose target statistic was clipped.
    pub clip_rate: f64,
}

impl CloneLoss {
    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ci.1 - self.ci.0)
    }
}

/// One replicate: the rounding law of the imposed count and the count
/// actually drawn from it.
#[derive(Debug, Clone, Copy)]
struct Replicate {
    atoms: [(i64, f64); 2],
    count: i64,
    clipped: bool,
}

/// Loss of the cloner at `theta` for a discrete family.
///
/// Replicate `i` draws the two split statistics directly from their laws,
/// runs the pipeline and keeps the two-atom law of the rounded count. The
/// output count pmf is the average of those laws; the loss is its exact L1
/// distance to Binomial(rn, θ) / Poisson(rnθ).
pub fn clone_loss_discrete(family: Family, theta: f64, cfg: &ClonerConfig, opts: &LossOptions) -> Result<CloneLoss> {
    if !family.is_discrete() {
        return Err(Error::Unsupported(format!("count-law loss for continuous family {family}")));
    }
    cfg.validate()?;
    if opts.reps == 0 {
        return Err(Error::domain("reps must be positive"));
    }
    if opts.reps < MIN_RECOMMENDED_REPS {
        log::warn!("{} replicates: the loss estimate is biased upward, use at least {MIN_RECOMMENDED_REPS}", opts.reps);
    }
    let truth = family.at(theta)?;
    let rn = cfg.rn();
    let key = format!("clone-loss/{}/{theta}/{}/{}", family.id(), cfg.n, opts.stream);
    let reps: Vec<Replicate> = (0..opts.reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, &key, i as u64);
            replicate(&truth, cfg, opts.theta_source, &mut rng)
        })
        .collect::<Result<_>>()?;

    // exact target law over a support that covers every output atom
    let (_, range_hi) = truth.stat_range(rn, 1e-14)?;
    let max_atom = reps.iter().flat_map(|r| r.atoms.iter().map(|a| a.0)).max().unwrap_or(0);
    let k_max = range_hi.max(max_atom).max(0) as usize;
    let target: Vec<f64> = (0..=k_max as i64).map(|k| truth.stat_pmf(rn, k)).collect::<Result<_>>()?;
    let target_tail = (1.0 - target.iter().sum::<f64>()).max(0.0);

    let all: Vec<usize> = (0..reps.len()).collect();
    let loss = rb_loss(&reps, &all, &target, target_tail);
    let mut counts = vec![0.0; k_max + 1];
    for r in &reps {
        counts[r.count as usize] += 1.0;
    }
    let plug_in = l1_to_target(&counts, reps.len() as f64, &target, target_tail);

    let boot_key = format!("{key}/bootstrap");
    let mut boot: Vec<f64> = (0..opts.bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(cfg.seed, &boot_key, b as u64);
            let idx: Vec<usize> = (0..reps.len()).map(|_| rng.gen_range(0..reps.len())).collect();
            rb_loss(&reps, &idx, &target, target_tail)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let ci = basic_interval(&boot, loss);

    let clip_rate = reps.iter().filter(|r| r.clipped).count() as f64 / reps.len() as f64;
    if clip_rate > CLIP_ALARM {
        log::warn!("clip rate {clip_rate:.4} above {CLIP_ALARM} at theta = {theta}, n = {}", cfg.n);
    }
    Ok(CloneLoss { theta, n: cfg.n, rn, reps: reps.len(), loss, ci, plug_in, clip_rate })
}

fn replicate(truth: &FamilyPoint, cfg: &ClonerConfig, source: ThetaSource, rng: &mut ChaCha8Rng) -> Result<Replicate> {
    let family = truth.family;
    let (theta_hat, n2) = match source {
        ThetaSource::Estimate => {
            let s1 = truth.sample_stat(cfg.n1(), rng);
            (estimate_from_stat(family, cfg.n1(), s1).theta_hat, cfg.n2())
        }
        ThetaSource::Frozen(t) => (t, cfg.n),
    };
    let s2 = truth.sample_stat(n2, rng);
    let st = stage(family, theta_hat, cfg, n2, s2, rng)?;
    let (law, clipped) = family.at(theta_hat)?.rounding_law(cfg.rn(), st.target_stat)?;
    let atoms = match law.as_slice() {
        [(k, _)] => [(*k, 1.0), (*k, 0.0)],
        [a, b] => [*a, *b],
        _ => unreachable!("rounding law has one or two atoms"),
    };
    let count = if rng.gen::<f64>() < atoms[0].1 { atoms[0].0 } else { atoms[1].0 };
    Ok(Replicate { atoms, count, clipped })
}

fn rb_loss(reps: &[Replicate], idx: &[usize], target: &[f64], target_tail: f64) -> f64 {
    let mut acc = vec![0.0; target.len()];
    for &i in idx {
        for (k, w) in reps[i].atoms {
            acc[k as usize] += w;
        }
    }
    l1_to_target(&acc, idx.len() as f64, target, target_tail)
}

fn l1_to_target(acc: &[f64], total: f64, target: &[f64], target_tail: f64) -> f64 {
    acc.iter().zip(target).map(|(a, q)| (a / total - q).abs()).sum::<f64>() + target_tail
}

/// Basic bootstrap interval `(2θ̂ − q_hi, 2θ̂ − q_lo)`. The L1 estimator is
/// biased upward and resampling adds the same bias again, which the
/// reflection undoes to first order.
fn basic_interval(sorted: &[f64], point: f64) -> (f64, f64) {
    if sorted.is_empty() {
        return (point, point);
    }
    let alpha = 1.0 - crate::special::normal_cdf(Z95);
    let at = |q: f64| sorted[((q * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
    ((2.0 * point - at(1.0 - alpha)).max(0.0), (2.0 * point - at(alpha)).min(2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub h: f64,
    pub loss: CloneLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxProbe {
    pub theta: f64,
    pub rows: Vec<ProbeRow>,
    /// Largest loss over the grid and the `h` attaining it.
    pub sup: f64,
    pub argmax: f64,
}

/// Loss at each `θ + h/√n` for `h` in `h_grid` and its supremum.
pub fn local_minimax_probe(
    family: Family,
    theta: f64,
    h_grid: &[f64],
    cfg: &ClonerConfig,
    opts: &LossOptions,
) -> Result<MinimaxProbe> {
    if h_grid.is_empty() {
        return Err(Error::domain("minimax probe needs a nonempty h grid"));
    }
    let scale = (cfg.n as f64).sqrt();
    for &h in h_grid {
        family.at(theta + h / scale)?;
    }
    let rows: Vec<ProbeRow> = h_grid
        .iter()
        .enumerate()
        .map(|(j, &h)| {
            let o = LossOptions { stream: opts.stream.wrapping_add(j as u64), ..*opts };
            Ok(ProbeRow { h, loss: clone_loss_discrete(family, theta + h / scale, cfg, &o)? })
        })
        .collect::<Result<_>>()?;
    let best = rows.iter().max_by(|a, b| a.loss.loss.total_cmp(&b.loss.loss)).expect("nonempty grid");
    let (sup, argmax) = (best.loss.loss, best.h);
    Ok(MinimaxProbe { theta, rows, sup, argmax })
}
