//! The scale amplifier `Ψ_√r: x ↦ √r·x` and the rotation that turns one
//! amplified Gaussian observation into `r` clones.
//!
//! If `y ~ N(√r·h, Σ)` and `Z₂, …, Z_r ~ N(0, Σ)` are independent, then
//! applying `Oᵀ` (blockwise per coordinate) to `(y, Z₂, …, Z_r)` gives exactly
//! `r` independent `N(h, Σ)` draws whenever the first row of the orthogonal
//! matrix `O` is `(1/√r, …, 1/√r)`. Cloning a Gaussian shift therefore loses
//! exactly what amplifying it loses.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{tv_numeric, GaussianShift, TvMethod, TvResult};

/// The optimal amplifier: a pure scale map whose factor equals the mean gain
/// it targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplifierSpec {
    pub scale: f64,
    pub target_gain: f64,
}

impl AmplifierSpec {
    /// The amplifier for `N(h, Σ) → N(√r·h, Σ)`.
    pub fn optimal(r: f64) -> Result<Self> {
        check_gain(r)?;
        Ok(AmplifierSpec { scale: r.sqrt(), target_gain: r.sqrt() })
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x * self.scale
    }
}

fn check_gain(r: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("amplification needs r >= 1, got {r}")));
    }
    Ok(())
}

/// `√r·x`.
pub fn amplify(x: &DVector<f64>, r: f64) -> Result<DVector<f64>> {
    Ok(AmplifierSpec::optimal(r)?.apply(x))
}

/// An `r×r` orthogonal matrix whose first row is constant `1/√r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    r: usize,
    entries: DMatrix<f64>,
}

impl RotationMatrix {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Householder reflection `H = 1 − 2vvᵀ/vᵀv` with `v = e₁ − u`,
/// `u = (1/√r)·1`. `H` is symmetric and maps `e₁` to `u`, so its first row
/// is `uᵀ`.
pub fn build_rotation(r: usize) -> Result<RotationMatrix> {
    if r == 0 {
        return Err(Error::domain("rotation needs r >= 1"));
    }
    let mut entries = DMatrix::identity(r, r);
    if r > 1 {
        let c = 1.0 / (r as f64).sqrt();
        let mut v = DVector::from_element(r, -c);
        v[0] += 1.0;
        let vv = v.dot(&v);
        entries -= (&v * v.transpose()) * (2.0 / vv);
    }
    Ok(RotationMatrix { r, entries })
}

/// Applies `Oᵀ` to the stack `(y, noise₁, …, noise_{r−1})`.
///
/// This is the deterministic part of [`expand_to_clones`]; passing zero noise
/// is useful for checking the rotation arithmetic.
pub fn expand_with_noise(y: &DVector<f64>, rot: &RotationMatrix, noise: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let r = rot.r();
    if noise.len() + 1 != r {
        return Err(Error::DimensionMismatch { expected: r - 1, got: noise.len() });
    }
    if let Some(bad) = noise.iter().find(|z| z.len() != y.len()) {
        return Err(Error::DimensionMismatch { expected: y.len(), got: bad.len() });
    }
    let stack: Vec<&DVector<f64>> = std::iter::once(y).chain(noise.iter()).collect();
    let o = rot.entries();
    Ok((0..r)
        .map(|j| {
            let mut out = DVector::zeros(y.len());
            for (i, s) in stack.iter().enumerate() {
                out.axpy(o[(i, j)], s, 1.0);
            }
            out
        })
        .collect())
}

/// Draws `Z₂, …, Z_r ~ N(0, Σ)` and returns `Oᵀ·(y, Z₂, …, Z_r)`.
pub fn expand_to_clones<R: Rng + ?Sized>(
    y: &DVector<f64>,
    r: usize,
    sigma: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("observation must be finite"));
    }
    let noise_law = GaussianShift::new(DVector::zeros(y.len()), sigma.clone())?;
    let rot = build_rotation(r)?;
    let noise: Vec<_> = (1..r).map(|_| noise_law.sample(rng)).collect();
    expand_with_noise(y, &rot, &noise)
}

/// One Gaussian observation to `r` approximate clones: amplify, then rotate.
pub fn gaussian_clone<R: Rng + ?Sized>(
    x: &DVector<f64>,
    r: usize,
    sigma: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let y = amplify(x, r as f64)?;
    expand_to_clones(&y, r, sigma, rng)
}

/// Per-shift losses of the scale amplifier and their supremum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplifierLoss {
    pub per_h: Vec<TvResult>,
    pub sup: f64,
    /// Largest minus smallest per-shift value.
    pub spread: f64,
}

/// `‖N(√r·h, rΣ) − N(√r·h, Σ)‖₁` for each `h` in the grid, i.e. the loss of
/// `Ψ_√r` as an amplifier, from the known output density.
///
/// `method` is forwarded to [`tv_numeric`]; `budget` sets the Monte Carlo
/// sample size per expectation.
pub fn amplifier_loss_mc<R: Rng + ?Sized>(
    r: f64,
    sigma: &DMatrix<f64>,
    h_grid: &[DVector<f64>],
    method: TvMethod,
    budget: usize,
    rng: &mut R,
) -> Result<AmplifierLoss> {
    check_gain(r)?;
    if h_grid.is_empty() {
        return Err(Error::domain("shift grid is empty"));
    }
    let gain = r.sqrt();
    let mut per_h = Vec::with_capacity(h_grid.len());
    for h in h_grid {
        let mean = h * gain;
        let out = GaussianShift::new(mean.clone(), sigma * r)?;
        let target = GaussianShift::new(mean, sigma.clone())?;
        per_h.push(if r == 1.0 {
            TvResult { value: 0.0, method, std_error: 0.0, crossing_radius_sq: None }
        } else {
            tv_numeric(&out, &target, method, budget, rng)?
        });
    }
    let sup = per_h.iter().map(|t| t.value).fold(f64::NEG_INFINITY, f64::max);
    let inf = per_h.iter().map(|t| t.value).fold(f64::INFINITY, f64::min);
    Ok(AmplifierLoss { per_h, sup, spread: sup - inf })
}
