//! Gaussian-shift laws and the L1 distances between them.
//!
//! The central quantity is the isotropic loss constant
//!
//! ```text
//! ‖N(0, 1_m) − N(0, r·1_m)‖₁ = 2·[F_m(t*) − F_m(t*/r)],   t* = m·r·ln r / (r − 1)
//! ```
//!
//! where `F_m` is the chi-square CDF with `m` degrees of freedom and `t*` is
//! the squared radius of the ball on which the unit-covariance density
//! dominates. It does not depend on the covariance, which [`tv_numeric`] lets
//! one check directly for arbitrary SPD pairs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, quadratic_roots};
use crate::special::gamma_p;
use crate::stats::Moments;

/// Absolute tolerance used by [`tv_numeric`] in quadrature mode.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Half-width, in standard deviations, of the whitened integration box.
const QUAD_HALF_WIDTH: f64 = 12.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// The law `N(mean, cov)` with a validated SPD covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianShift {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl GaussianShift {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let m = mean.len();
        if m == 0 {
            return Err(Error::domain("Gaussian dimension must be at least 1"));
        }
        if cov.nrows() != m || cov.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: cov.nrows() });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("Gaussian parameters must be finite"));
        }
        let scale = cov.amax();
        for i in 0..m {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Factorization(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let chol = cholesky_lower(&cov)?;
        Ok(GaussianShift { mean, cov, chol })
    }

    /// `N(0, 1_m)`.
    pub fn standard(m: usize) -> Result<Self> {
        Self::new(DVector::zeros(m), DMatrix::identity(m, m))
    }

    /// `N(mean, scale·1_m)`.
    pub fn isotropic(mean: DVector<f64>, scale: f64) -> Result<Self> {
        let m = mean.len();
        Self::new(mean, DMatrix::identity(m, m) * scale)
    }

    /// One-dimensional `N(mean, var)`.
    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower Cholesky factor `L` with `L·Lᵀ = cov`.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let mut scratch = vec![0.0; self.dim()];
        self.evaluator().log_density(x.as_slice(), &mut scratch)
    }

    pub fn density(&self, x: &DVector<f64>) -> f64 {
        self.log_density(x).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.chol * z
    }

    fn evaluator(&self) -> Evaluator {
        let m = self.dim();
        let log_det_half: f64 = (0..m).map(|i| self.chol[(i, i)].ln()).sum();
        Evaluator {
            m,
            mean: self.mean.as_slice().to_vec(),
            chol: (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| self.chol[(i, j)]).collect(),
            log_norm: -0.5 * m as f64 * LN_2PI - log_det_half,
        }
    }
}

/// Allocation-free sampling and log-density for Monte Carlo loops.
struct Evaluator {
    m: usize,
    mean: Vec<f64>,
    /// Row-major lower Cholesky factor.
    chol: Vec<f64>,
    log_norm: f64,
}

impl Evaluator {
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..self.m {
            let row = &self.chol[i * self.m..i * self.m + i + 1];
            out[i] = self.mean[i] + row.iter().zip(z.iter()).map(|(l, v)| l * v).sum::<f64>();
        }
    }

    fn log_density(&self, x: &[f64], u: &mut [f64]) -> f64 {
        // forward substitution L·u = x − mean
        let mut q = 0.0;
        for i in 0..self.m {
            let row = &self.chol[i * self.m..(i + 1) * self.m];
            let s: f64 = (0..i).map(|j| row[j] * u[j]).sum();
            u[i] = (x[i] - self.mean[i] - s) / row[i];
            q += u[i] * u[i];
        }
        self.log_norm - 0.5 * q
    }
}

fn cholesky_lower(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    cov.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Factorization("matrix is not symmetric positive definite".into()))
}

/// How a [`TvResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
    BallIndicator,
}

/// An L1 distance between two laws (a value in `[0, 2]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvResult {
    pub value: f64,
    pub method: TvMethod,
    /// Zero for deterministic methods.
    pub std_error: f64,
    /// Squared radius `t*` of the dominance ball, for the isotropic closed form.
    pub crossing_radius_sq: Option<f64>,
}

impl TvResult {
    fn deterministic(value: f64, method: TvMethod) -> Self {
        TvResult { value: value.clamp(0.0, 2.0), method, std_error: 0.0, crossing_radius_sq: None }
    }
}

/// Chi-square CDF with `m` degrees of freedom, `P(m/2, t/2)`.
pub fn chi2_cdf(m: u32, t: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("chi-square needs at least one degree of freedom"));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("chi-square argument must be >= 0, got {t}")));
    }
    gamma_p(m as f64 / 2.0, t / 2.0)
}

/// The squared radius at which the densities of `N(0, 1_m)` and
/// `N(0, r·1_m)` cross: `m·r·ln r / (r − 1)`.
pub fn crossing_radius_sq(r: f64, m: u32) -> Result<f64> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("crossing radius needs r > 1, got {r}")));
    }
    if m == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    let x = r - 1.0;
    Ok(m as f64 * r * x.ln_1p() / x)
}

/// `‖N(0, 1_m) − N(0, r·1_m)‖₁` in closed form.
pub fn tv_isotropic(r: f64, m: u32) -> Result<TvResult> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("isotropic loss needs r >= 1, got {r}")));
    }
    if m == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if r == 1.0 {
        return Ok(TvResult::deterministic(0.0, TvMethod::ClosedForm));
    }
    let t = crossing_radius_sq(r, m)?;
    let value = 2.0 * (chi2_cdf(m, t)? - chi2_cdf(m, t / r)?);
    Ok(TvResult { crossing_radius_sq: Some(t), ..TvResult::deterministic(value, TvMethod::ClosedForm) })
}

/// Lower-triangular `W` with `W·cov·Wᵀ = 1`, the inverse Cholesky factor.
pub fn whiten(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cov.nrows() != cov.ncols() {
        return Err(Error::DimensionMismatch { expected: cov.nrows(), got: cov.ncols() });
    }
    let l = cholesky_lower(cov)?;
    let m = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(m, m))
        .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))
}

/// Numerical `∫|p − q|` by quadrature (`m ≤ 2`) or Monte Carlo.
///
/// Monte Carlo uses the unbiased identity
/// `∫|p − q| = E_p[(1 − q/p)⁺] + E_q[(1 − p/q)⁺]` with `budget` draws per
/// expectation. `budget` is ignored by quadrature.
pub fn tv_numeric<R: Rng + ?Sized>(
    p: &GaussianShift,
    q: &GaussianShift,
    method: TvMethod,
    budget: usize,
    rng: &mut R,
) -> Result<TvResult> {
    match method {
        TvMethod::Quadrature => tv_quadrature(p, q, QUADRATURE_TOL),
        TvMethod::MonteCarlo => tv_monte_carlo(p, q, budget, rng),
        other => Err(Error::Unsupported(format!("tv_numeric does not implement {other:?}"))),
    }
}

/// Quadrature estimate of `∫|p − q|` to absolute tolerance `tol`.
///
/// Both laws are whitened with respect to `p`; the log-density difference is
/// then a quadratic form, whose zero set gives exact breakpoints for the
/// one-dimensional integrals.
pub fn tv_quadrature(p: &GaussianShift, q: &GaussianShift, tol: f64) -> Result<TvResult> {
    let m = p.dim();
    if q.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: q.dim() });
    }
    if m > 2 {
        return Err(Error::Unsupported(format!("quadrature supports m <= 2, got m = {m}")));
    }
    let w = whiten(p.cov())?;
    let mu = &w * (q.mean() - p.mean());
    let c = &w * q.cov() * w.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let form = LogRatioForm::new(&mu, &c)?;
    let bounds: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let sd = c[(k, k)].sqrt();
            (
                (-QUAD_HALF_WIDTH).min(mu[k] - QUAD_HALF_WIDTH * sd),
                QUAD_HALF_WIDTH.max(mu[k] + QUAD_HALF_WIDTH * sd),
            )
        })
        .collect();

    let value = if m == 1 {
        let f = |z: f64| form.abs_diff(&[z]);
        let breaks = quadratic_roots(-0.5 * form.a[0], form.b[0], form.c);
        integrate_with_breaks(&f, bounds[0].0, bounds[0].1, &breaks, tol)
    } else {
        let (a11, a12, a22) = (form.a[0], form.a[1], form.a[3]);
        let (b1, b2, c0) = (form.b[0], form.b[1], form.c);
        let (lo2, hi2) = bounds[1];
        let inner_tol = 0.1 * tol / (bounds[0].1 - bounds[0].0);
        let inner = |z1: f64| {
            let g = |z2: f64| form.abs_diff(&[z1, z2]);
            let breaks = quadratic_roots(-0.5 * a22, b2 - a12 * z1, -0.5 * a11 * z1 * z1 + b1 * z1 + c0);
            integrate_with_breaks(&g, lo2, hi2, &breaks, inner_tol)
        };
        // Tangency points of the crossing conic, where the inner integral
        // loses smoothness.
        let outer_breaks = quadratic_roots(
            a12 * a12 - a22 * a11,
            2.0 * (a22 * b1 - b2 * a12),
            b2 * b2 + 2.0 * a22 * c0,
        );
        integrate_with_breaks(&inner, bounds[0].0, bounds[0].1, &outer_breaks, 0.9 * tol)
    };
    Ok(TvResult::deterministic(value, TvMethod::Quadrature))
}

/// `D(z) = ln p(z) − ln q(z) = −½ zᵀA z + bᵀz + c` for `p = N(0, 1)` and
/// `q = N(μ, C)` in whitened coordinates.
struct LogRatioForm {
    m: usize,
    /// Row-major `A = 1 − C⁻¹`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl LogRatioForm {
    fn new(mu: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let m = mu.len();
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Factorization("whitened covariance is not SPD".into()))?;
        let prec = chol.inverse();
        let log_det: f64 = 2.0 * (0..m).map(|i| chol.l()[(i, i)].ln()).sum::<f64>();
        let a = DMatrix::identity(m, m) - &prec;
        let pm = &prec * mu;
        Ok(LogRatioForm {
            m,
            a: a.transpose().as_slice().to_vec(),
            b: (-&pm).as_slice().to_vec(),
            c: 0.5 * mu.dot(&pm) + 0.5 * log_det,
        })
    }

    fn log_ratio(&self, z: &[f64]) -> f64 {
        let mut quad = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                quad += z[i] * self.a[i * self.m + j] * z[j];
            }
        }
        -0.5 * quad + self.b.iter().zip(z).map(|(b, x)| b * x).sum::<f64>() + self.c
    }

    fn abs_diff(&self, z: &[f64]) -> f64 {
        let sq: f64 = z.iter().map(|x| x * x).sum();
        let lp = -0.5 * self.m as f64 * LN_2PI - 0.5 * sq;
        let p = lp.exp();
        let q = (lp - self.log_ratio(z)).exp();
        (p - q).abs()
    }
}

/// Monte Carlo estimate of `∫|p − q|` with `budget` draws from each law.
pub fn tv_monte_carlo<R: Rng + ?Sized>(p: &GaussianShift, q: &GaussianShift, budget: usize, rng: &mut R) -> Result<TvResult> {
    let m = p.dim();
    if q.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: q.dim() });
    }
    if budget == 0 {
        return Err(Error::domain("Monte Carlo budget must be positive"));
    }
    let ep = p.evaluator();
    let eq = q.evaluator();
    let mut z = vec![0.0; m];
    let mut x = vec![0.0; m];
    let mut u = vec![0.0; m];
    let mut half = |from: &Evaluator, to: &Evaluator| {
        let mut acc = Moments::default();
        for _ in 0..budget {
            from.sample_into(rng, &mut z, &mut x);
            let ratio = (to.log_density(&x, &mut u) - from.log_density(&x, &mut u)).exp();
            acc.push((1.0 - ratio).max(0.0));
        }
        acc
    };
    let a = half(&ep, &eq);
    let b = half(&eq, &ep);
    let n = budget as f64;
    Ok(TvResult {
        value: (a.mean() + b.mean()).clamp(0.0, 2.0),
        method: TvMethod::MonteCarlo,
        std_error: (a.variance() / n + b.variance() / n).sqrt(),
        crossing_radius_sq: None,
    })
}

/// Monte Carlo estimate of `‖N(0, 1_m) − N(0, r·1_m)‖₁` as
/// `2·[P₁(B_r) − P_r(B_r)]`, using the known dominance ball `B_r`.
pub fn tv_ball_indicator<R: Rng + ?Sized>(r: f64, m: u32, budget: usize, rng: &mut R) -> Result<TvResult> {
    if budget == 0 {
        return Err(Error::domain("Monte Carlo budget must be positive"));
    }
    if r == 1.0 {
        return Ok(TvResult::deterministic(0.0, TvMethod::BallIndicator));
    }
    let t = crossing_radius_sq(r, m)?;
    let mut hit = |scale: f64| {
        let mut acc = Moments::default();
        for _ in 0..budget {
            let sq: f64 = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum::<f64>() * scale;
            acc.push(if sq <= t { 1.0 } else { 0.0 });
        }
        acc
    };
    let inner = hit(1.0);
    let outer = hit(r);
    let n = budget as f64;
    Ok(TvResult {
        value: (2.0 * (inner.mean() - outer.mean())).clamp(0.0, 2.0),
        method: TvMethod::BallIndicator,
        std_error: 2.0 * (inner.variance() / n + outer.variance() / n).sqrt(),
        crossing_radius_sq: Some(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{normal_cdf, normal_pdf};
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: plain composite Simpson on a fine uniform grid of
    /// `|φ(y) − φ(y/√r)/√r|` over [−40, 40].
    fn tv_1d_oracle(r: f64) -> f64 {
        let n = 400_000;
        let (a, b) = (-40.0, 40.0);
        let h = (b - a) / n as f64;
        let sr = r.sqrt();
        let f = |y: f64| (normal_pdf(y) - normal_pdf(y / sr) / sr).abs();
        let mut s = f(a) + f(b);
        for i in 1..n {
            let y = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(y);
        }
        s * h / 3.0
    }

    #[test]
    fn chi2_cdf_examples() {
        assert!((chi2_cdf(2, 2.0 * 2f64.ln()).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(chi2_cdf(1, 0.0).unwrap(), 0.0);
        // m = 1: 2Φ(√t) − 1
        let t: f64 = 1.386294;
        let want = 2.0 * normal_cdf(t.sqrt()) - 1.0;
        let got = chi2_cdf(1, t).unwrap();
        assert!((got - want).abs() < 1e-13);
        assert!((got - 0.7609).abs() < 1e-4);
    }

    #[test]
    fn chi2_cdf_matches_closed_forms() {
        for &t in &[0.01, 0.5, 1.0, 3.0, 7.5, 20.0, 60.0] {
            let m2 = 1.0 - (-t / 2.0f64).exp();
            assert!((chi2_cdf(2, t).unwrap() - m2).abs() < 1e-12, "m=2 t={t}");
            let m1 = 2.0 * normal_cdf(t.sqrt()) - 1.0;
            assert!((chi2_cdf(1, t).unwrap() - m1).abs() < 1e-12, "m=1 t={t}");
        }
    }

    #[test]
    fn chi2_cdf_domain() {
        assert!(chi2_cdf(0, 1.0).is_err());
        assert!(chi2_cdf(3, -0.1).is_err());
        assert!((chi2_cdf(3, 1e6).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn crossing_radius_examples() {
        let ln2 = 2f64.ln();
        assert!((crossing_radius_sq(2.0, 1).unwrap() - 2.0 * ln2).abs() < 1e-15);
        assert!((crossing_radius_sq(2.0, 2).unwrap() - 4.0 * ln2).abs() < 1e-15);
        assert!((crossing_radius_sq(1.0 + 1e-12, 1).unwrap() - 1.0).abs() < 1e-9);
        assert!(crossing_radius_sq(1.0, 1).is_err());
        assert!(crossing_radius_sq(0.5, 1).is_err());
    }

    #[test]
    fn densities_cross_at_radius() {
        for &(r, m) in &[(2.0, 1u32), (3.0, 2), (1.5, 4)] {
            let t = crossing_radius_sq(r, m).unwrap();
            let mut y = DVector::zeros(m as usize);
            y[0] = t.sqrt();
            let p = GaussianShift::standard(m as usize).unwrap();
            let q = GaussianShift::isotropic(DVector::zeros(m as usize), r).unwrap();
            assert!((p.log_density(&y) - q.log_density(&y)).abs() < 1e-12);
        }
    }

    #[test]
    fn tv_isotropic_examples() {
        assert_eq!(tv_isotropic(1.0, 5).unwrap().value, 0.0);
        let v = tv_isotropic(2.0, 1).unwrap();
        assert_eq!(v.method, TvMethod::ClosedForm);
        assert_eq!(v.std_error, 0.0);
        let oracle = tv_1d_oracle(2.0);
        assert!((oracle - 0.332_128).abs() < 1e-6, "oracle {oracle}");
        assert!((v.value - oracle).abs() < 1e-8, "{} vs {oracle}", v.value);
        assert!((tv_isotropic(2.0, 2).unwrap().value - 0.5).abs() < 1e-14);
        assert!(tv_isotropic(0.9, 1).is_err());
    }

    #[test]
    fn tv_isotropic_monotone_and_bounded() {
        for m in 1..=6 {
            let mut prev = -1.0;
            for &r in &[1.0, 1.5, 2.0, 4.0, 8.0, 64.0] {
                let v = tv_isotropic(r, m).unwrap().value;
                assert!((0.0..=2.0).contains(&v));
                assert!(v > prev, "m={m} r={r}");
                assert_eq!(v == 0.0, r == 1.0);
                prev = v;
            }
        }
    }

    #[test]
    fn whiten_examples() {
        assert_eq!(whiten(&DMatrix::identity(3, 3)).unwrap(), DMatrix::identity(3, 3));
        assert!((whiten(&dmatrix![4.0]).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
        let cov = dmatrix![2.0, 1.0; 1.0, 2.0];
        let w = whiten(&cov).unwrap();
        let prod = &w * &cov * w.transpose();
        assert!((prod - DMatrix::identity(2, 2)).amax() < 1e-10);
        assert_eq!(w[(0, 1)], 0.0);
        assert!(whiten(&dmatrix![1.0, 2.0; 2.0, 1.0]).is_err());
    }

    #[test]
    fn gaussian_shift_validation() {
        assert!(GaussianShift::new(DVector::zeros(2), dmatrix![1.0, 0.5; 0.4, 1.0]).is_err());
        assert!(GaussianShift::new(DVector::zeros(2), dmatrix![1.0, 0.0; 0.0, -1.0]).is_err());
        assert!(GaussianShift::new(DVector::zeros(3), DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = GaussianShift::scalar(0.0, 1.0).unwrap();
        let q = GaussianShift::scalar(0.0, 2.0).unwrap();
        let v = tv_numeric(&p, &q, TvMethod::Quadrature, 0, &mut rng).unwrap();
        assert!((v.value - tv_isotropic(2.0, 1).unwrap().value).abs() < 1e-5);
        let p2 = GaussianShift::standard(2).unwrap();
        let q2 = GaussianShift::isotropic(DVector::zeros(2), 2.0).unwrap();
        let v2 = tv_quadrature(&p2, &q2, 1e-7).unwrap();
        assert!((v2.value - 0.5).abs() < 1e-5, "{}", v2.value);
    }

    #[test]
    fn identical_laws_have_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = GaussianShift::new(DVector::from_vec(vec![1.0, -2.0]), dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
        let mc = tv_numeric(&p, &p, TvMethod::MonteCarlo, 1000, &mut rng).unwrap();
        assert_eq!(mc.value, 0.0);
        assert_eq!(mc.std_error, 0.0);
        let quad = tv_numeric(&p, &p, TvMethod::Quadrature, 0, &mut rng).unwrap();
        assert!(quad.value < 1e-12);
    }

    #[test]
    fn shifted_mean_increases_distance() {
        let p = GaussianShift::scalar(0.0, 1.0).unwrap();
        let q = GaussianShift::scalar(1.0, 2.0).unwrap();
        let v = tv_quadrature(&p, &q, QUADRATURE_TOL).unwrap().value;
        assert!(v > tv_isotropic(2.0, 1).unwrap().value);
    }

    #[test]
    fn numeric_rejects_bad_requests() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p3 = GaussianShift::standard(3).unwrap();
        let p1 = GaussianShift::standard(1).unwrap();
        assert!(matches!(tv_numeric(&p3, &p3, TvMethod::Quadrature, 0, &mut rng), Err(Error::Unsupported(_))));
        assert!(matches!(
            tv_numeric(&p1, &p3, TvMethod::MonteCarlo, 10, &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(tv_numeric(&p1, &p1, TvMethod::ClosedForm, 10, &mut rng).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = GaussianShift::standard(3).unwrap();
        let q = GaussianShift::isotropic(DVector::zeros(3), 2.0).unwrap();
        let v = tv_monte_carlo(&p, &q, 200_000, &mut rng).unwrap();
        let exact = tv_isotropic(2.0, 3).unwrap().value;
        assert!((v.value - exact).abs() < 4.0 * v.std_error, "{} ± {} vs {exact}", v.value, v.std_error);
        let b = tv_ball_indicator(2.0, 3, 200_000, &mut rng).unwrap();
        assert!((b.value - exact).abs() < 4.0 * b.std_error);
    }

    #[test]
    fn chi2_cdf_matches_simulated_ball_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        for &(m, t) in &[(1u32, 1.0), (2, 2.5), (4, 3.0)] {
            let hits: Moments = (0..n)
                .map(|_| {
                    let sq: f64 = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
                    if sq <= t { 1.0 } else { 0.0 }
                })
                .collect();
            let exact = chi2_cdf(m, t).unwrap();
            assert!((hits.mean() - exact).abs() < 4.0 * hits.std_error(), "m={m}");
        }
    }
}
