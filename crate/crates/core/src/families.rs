//! One-parameter families with exact sufficient-statistic resampling.
//!
//! All three built-ins have score `ℓ_θ(ω) = J_θ·(ω − θ)` and sufficient
//! statistic `S = Σω`, so the normalized score of `N` observations is the
//! affine map `ℓ_θ^N = J_θ·(S − Nθ)/√N`. Conditioning on the score is the
//! same as conditioning on `S`, which is what [`FamilyPoint::conditional_resample`]
//! does.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Distance within which a randomized-rounding target is snapped to an integer.
const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Bernoulli,
    Poisson,
    /// `N(θ, σ²)` with known `σ`.
    #[serde(rename = "gauss-loc")]
    GaussianLocation { sigma: f64 },
}

impl Family {
    pub fn gaussian_location(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("Gaussian scale must be positive, got {sigma}")));
        }
        Ok(Family::GaussianLocation { sigma })
    }

    /// Configuration id: `bernoulli`, `poisson` or `gauss-loc`.
    pub fn id(&self) -> &'static str {
        match self {
            Family::Bernoulli => "bernoulli",
            Family::Poisson => "poisson",
            Family::GaussianLocation { .. } => "gauss-loc",
        }
    }

    /// Open parameter interval `(lo, hi)`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Family::Bernoulli => (0.0, 1.0),
            Family::Poisson => (0.0, f64::INFINITY),
            Family::GaussianLocation { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, Family::GaussianLocation { .. })
    }

    pub fn at(self, theta: f64) -> Result<FamilyPoint> {
        FamilyPoint::new(self, theta)
    }

    /// Clips `theta` to `[lo + 1/n, hi − 1/n]` (finite ends only). When the
    /// interval is empty the midpoint of the domain is returned.
    pub fn clip_to_interior(&self, theta: f64, n: usize) -> f64 {
        let (lo, hi) = self.domain();
        let pad = 1.0 / n.max(1) as f64;
        let a = if lo.is_finite() { lo + pad } else { lo };
        let b = if hi.is_finite() { hi - pad } else { hi };
        if a > b {
            return 0.5 * (lo + hi);
        }
        theta.clamp(a, b)
    }

    /// Whether `theta` lies strictly inside the parameter domain.
    pub fn contains(&self, theta: f64) -> bool {
        let (lo, hi) = self.domain();
        theta.is_finite() && theta > lo && theta < hi
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::GaussianLocation { sigma } => write!(f, "gauss-loc(sigma={sigma})"),
            other => f.write_str(other.id()),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Parses a family id; `gauss-loc` gets `σ = 1` (see
    /// [`Family::gaussian_location`] for other scales).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Family::Bernoulli),
            "poisson" => Ok(Family::Poisson),
            "gauss-loc" => Ok(Family::GaussianLocation { sigma: 1.0 }),
            other => Err(Error::config(format!("unknown family '{other}' (expected bernoulli, poisson or gauss-loc)"))),
        }
    }
}

/// Score, Fisher information and its smallest eigenvalue at one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreReport {
    pub score_value: f64,
    pub fisher: f64,
    pub min_eigenvalue: f64,
}

/// Result of resampling a dataset on a (rounded) sufficient statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Resample {
    pub data: Vec<f64>,
    /// The statistic actually imposed.
    pub stat: f64,
    /// Whether the rounded target had to be clipped into the achievable range.
    pub clipped: bool,
}

/// A family at a fixed interior parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyPoint {
    pub family: Family,
    pub theta: f64,
}

impl FamilyPoint {
    pub fn new(family: Family, theta: f64) -> Result<Self> {
        if !family.contains(theta) {
            return Err(Error::domain(format!("theta = {theta} is outside the {} domain", family.id())));
        }
        Ok(FamilyPoint { family, theta })
    }

    pub fn log_density(&self, omega: f64) -> f64 {
        let t = self.theta;
        match self.family {
            Family::Bernoulli => {
                if omega == 1.0 {
                    t.ln()
                } else if omega == 0.0 {
                    (-t).ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Poisson => {
                if omega >= 0.0 && omega.fract() == 0.0 {
                    omega * t.ln() - t - ln_gamma(omega + 1.0)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::GaussianLocation { sigma } => {
                let z = (omega - t) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
        }
    }

    /// Probability mass (discrete) or density (continuous); zero off support.
    pub fn density(&self, omega: f64) -> f64 {
        self.log_density(omega).exp()
    }

    /// `ℓ_θ(ω) = ∂_θ ln p_θ(ω)`.
    pub fn score(&self, omega: f64) -> f64 {
        self.fisher_info() * (omega - self.theta)
    }

    /// `J_θ = E_θ ℓ_θ²`.
    pub fn fisher_info(&self) -> f64 {
        1.0 / self.variance()
    }

    pub fn score_report(&self, omega: f64) -> ScoreReport {
        let j = self.fisher_info();
        ScoreReport { score_value: self.score(omega), fisher: j, min_eigenvalue: j }
    }

    /// `E_θ ω`, which equals `θ` for every built-in.
    pub fn mean(&self) -> f64 {
        self.theta
    }

    /// `Var_θ ω`.
    pub fn variance(&self) -> f64 {
        match self.family {
            Family::Bernoulli => self.theta * (1.0 - self.theta),
            Family::Poisson => self.theta,
            Family::GaussianLocation { sigma } => sigma * sigma,
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Bernoulli => f64::from(u8::from(rng.gen::<f64>() < self.theta)),
            Family::Poisson => Poisson::new(self.theta).expect("validated rate").sample(rng),
            Family::GaussianLocation { sigma } => self.theta + sigma * rng.sample::<f64, _>(StandardNormal),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Draws the sufficient statistic of `n` observations directly from its law.
    pub fn sample_stat<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self.family {
            Family::Bernoulli => Binomial::new(n as u64, self.theta).expect("validated p").sample(rng) as f64,
            Family::Poisson => Poisson::new(n as f64 * self.theta).expect("validated rate").sample(rng),
            Family::GaussianLocation { sigma } => {
                Normal::new(n as f64 * self.theta, sigma * (n as f64).sqrt()).expect("validated scale").sample(rng)
            }
        }
    }

    /// `S = Σω`.
    pub fn suff_stat(&self, data: &[f64]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::domain("sufficient statistic of an empty sample"));
        }
        Ok(data.iter().sum())
    }

    /// `ℓ_θ^N` as a function of the statistic `S` of `N` observations.
    pub fn score_from_stat(&self, n: usize, stat: f64) -> f64 {
        let nf = n as f64;
        self.fisher_info() * (stat - nf * self.theta) / nf.sqrt()
    }

    /// Inverse of [`score_from_stat`](Self::score_from_stat).
    pub fn stat_from_score(&self, n: usize, score: f64) -> f64 {
        let nf = n as f64;
        nf * self.theta + nf.sqrt() * score / self.fisher_info()
    }

    /// Largest achievable statistic for `n` observations, if bounded.
    pub fn stat_max(&self, n: usize) -> Option<f64> {
        match self.family {
            Family::Bernoulli => Some(n as f64),
            Family::Poisson => None,
            Family::GaussianLocation { .. } => None,
        }
    }

    /// Two-atom law of the randomized rounding `⌊s⌋ + Bernoulli(frac s)`,
    /// clipped to the achievable range of `n` observations. Returns
    /// `(atoms, clipped)`; atoms with zero weight are omitted. Only defined
    /// for discrete families.
    pub fn rounding_law(&self, n: usize, s: f64) -> Result<(Vec<(i64, f64)>, bool)> {
        if !self.family.is_discrete() {
            return Err(Error::Unsupported(format!("rounding law for continuous family {}", self.family)));
        }
        if !s.is_finite() {
            return Err(Error::domain(format!("target statistic must be finite, got {s}")));
        }
        let max = self.stat_max(n).unwrap_or(f64::INFINITY);
        if s <= 0.0 {
            return Ok((vec![(0, 1.0)], s < 0.0));
        }
        if s >= max {
            return Ok((vec![(max as i64, 1.0)], s > max));
        }
        let nearest = s.round();
        if (s - nearest).abs() <= SNAP_TOL {
            return Ok((vec![(nearest as i64, 1.0)], false));
        }
        let lo = s.floor();
        let frac = s - lo;
        Ok((vec![(lo as i64, 1.0 - frac), (lo as i64 + 1, frac)], false))
    }

    /// Draws the imposed statistic for a real target `s`: randomized rounding
    /// and clipping for discrete families, `s` itself for continuous ones.
    pub fn round_target<R: Rng + ?Sized>(&self, n: usize, s: f64, rng: &mut R) -> Result<(f64, bool)> {
        if !self.family.is_discrete() {
            if !s.is_finite() {
                return Err(Error::domain(format!("target statistic must be finite, got {s}")));
            }
            return Ok((s, false));
        }
        let (atoms, clipped) = self.rounding_law(n, s)?;
        if clipped {
            log::warn!("{}: target statistic {s} clipped for n = {n}", self.family);
        }
        let stat = match atoms.as_slice() {
            [(k, _)] => *k,
            [(k0, w0), (k1, _)] => {
                if rng.gen::<f64>() < *w0 {
                    *k0
                } else {
                    *k1
                }
            }
            _ => unreachable!("rounding law has one or two atoms"),
        };
        Ok((stat as f64, clipped))
    }

    /// Draws `ω^n` from the conditional law of `P_θ^n` given `Σω = T*`, where
    /// `T*` is `target` after rounding and clipping.
    pub fn conditional_resample<R: Rng + ?Sized>(&self, n: usize, target: f64, rng: &mut R) -> Result<Resample> {
        if n == 0 {
            return Err(Error::domain("cannot resample zero observations"));
        }
        let (stat, clipped) = self.round_target(n, target, rng)?;
        let data = match self.family {
            Family::Bernoulli => {
                let mut data = vec![0.0; n];
                for i in index::sample(rng, n, stat as usize) {
                    data[i] = 1.0;
                }
                data
            }
            Family::Poisson => {
                let mut data = vec![0.0; n];
                for _ in 0..stat as u64 {
                    data[rng.gen_range(0..n)] += 1.0;
                }
                data
            }
            Family::GaussianLocation { sigma } => {
                let z: Vec<f64> = (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
                let zbar = z.iter().sum::<f64>() / n as f64;
                let center = stat / n as f64;
                z.iter().map(|zi| center + (zi - zbar)).collect()
            }
        };
        Ok(Resample { data, stat, clipped })
    }

    /// Exact pmf of the statistic of `n` observations at integer `k`
    /// (Binomial(n, θ) or Poisson(nθ)).
    pub fn stat_pmf(&self, n: usize, k: i64) -> Result<f64> {
        Ok(self.stat_ln_pmf(n, k)?.exp())
    }

    pub fn stat_ln_pmf(&self, n: usize, k: i64) -> Result<f64> {
        let t = self.theta;
        let nf = n as f64;
        match self.family {
            Family::Bernoulli => {
                if k < 0 || k as usize > n {
                    return Ok(f64::NEG_INFINITY);
                }
                let kf = k as f64;
                Ok(ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0) + kf * t.ln() + (nf - kf) * (-t).ln_1p())
            }
            Family::Poisson => {
                if k < 0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let lambda = nf * t;
                let kf = k as f64;
                Ok(kf * lambda.ln() - lambda - ln_gamma(kf + 1.0))
            }
            Family::GaussianLocation { .. } => {
                Err(Error::Unsupported("statistic pmf of a continuous family".into()))
            }
        }
    }

    /// The support range `[lo, hi]` of the statistic of `n` observations that
    /// carries all but at most `tail` probability (the full range for
    /// Bernoulli).
    pub fn stat_range(&self, n: usize, tail: f64) -> Result<(i64, i64)> {
        match self.family {
            Family::Bernoulli => Ok((0, n as i64)),
            Family::Poisson => {
                let lambda = n as f64 * self.theta;
                let sd = lambda.sqrt();
                let mut hi = (lambda + 10.0 * sd + 10.0).ceil() as i64;
                // extend until the upper tail is negligible
                while self.stat_ln_pmf(n, hi)?.exp() > tail * 1e-3 {
                    hi += (sd.ceil() as i64).max(1);
                }
                Ok((0, hi))
            }
            Family::GaussianLocation { .. } => {
                Err(Error::Unsupported("statistic range of a continuous family".into()))
            }
        }
    }
}
