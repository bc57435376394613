//! Minimax L1 deviation between finite experiments, by linear programming.
//!
//! For source rows `P_θ` and target rows `Q_θ`, [`lp_deficiency`] computes
//!
//! ```text
//! inf over column-stochastic Λ of  max_θ ‖Λ·P_θ − Q_θ‖₁
//! ```
//!
//! exactly, with an optimal kernel. Discretized Gaussian-shift pairs from
//! [`discretize_gaussian_pair`] turn this into a numerical check of the
//! bounded-shift amplification loss.

mod highs_backend;
pub mod io;
pub mod lp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_interval_mass;
pub use highs_backend::solve_highs;
use lp::{solve_dense, LpProblem, LpSolution, RowKind, SimplexError};
pub use lp::LpStatus;

/// Probability rows must sum to one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Largest admissible `K_in·K_out`.
pub const MAX_KERNEL_ENTRIES: usize = 250_000;

/// Tableau size (rows × columns) up to which `Backend::Auto` uses the dense
/// simplex.
pub const DENSE_TABLEAU_LIMIT: usize = 40_000;

/// Constraint violation above which an `Auto` dense solve is redone by HiGHS.
pub const DENSE_RESIDUAL_TOL: f64 = 1e-7;

/// Default bound on the mass of the two unbounded end cells.
pub const DEFAULT_TAIL_TOL: f64 = 1e-4;

/// A parameter-indexed family of pmfs on `K` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteExperiment {
    params: Vec<String>,
    probs: Vec<Vec<f64>>,
}

impl FiniteExperiment {
    pub fn new(params: Vec<String>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if params.len() != probs.len() {
            return Err(Error::DimensionMismatch { expected: params.len(), got: probs.len() });
        }
        let k = probs.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::domain("experiment needs at least one parameter and one outcome"));
        }
        for (label, row) in params.iter().zip(&probs) {
            if row.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: row.len() });
            }
            if row.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::domain(format!("row '{label}' has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::domain(format!("row '{label}' sums to {s}")));
            }
        }
        Ok(FiniteExperiment { params, probs })
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.probs[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }

    /// Relabels outcomes: new outcome `j` is old outcome `perm[j]`.
    pub fn permute_outcomes(&self, perm: &[usize]) -> Result<Self> {
        let k = self.n_outcomes();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&j| j >= k || std::mem::replace(&mut seen[j], true)) {
            return Err(Error::domain("not a permutation of the outcomes"));
        }
        let probs = self.probs.iter().map(|row| perm.iter().map(|&j| row[j]).collect()).collect();
        Ok(FiniteExperiment { params: self.params.clone(), probs })
    }

    /// Keeps only the parameters at the given row indices.
    pub fn restrict(&self, rows: &[usize]) -> Result<Self> {
        if rows.iter().any(|&i| i >= self.n_params()) {
            return Err(Error::domain("parameter index out of range"));
        }
        Ok(FiniteExperiment {
            params: rows.iter().map(|&i| self.params[i].clone()).collect(),
            probs: rows.iter().map(|&i| self.probs[i].clone()).collect(),
        })
    }
}

/// A column-stochastic `K_out × K_in` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    k_out: usize,
    k_in: usize,
    /// Row-major `[y][x]`.
    data: Vec<f64>,
}

impl MarkovKernel {
    pub fn new(k_out: usize, k_in: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != k_out * k_in || k_out == 0 || k_in == 0 {
            return Err(Error::DimensionMismatch { expected: k_out * k_in, got: data.len() });
        }
        let kernel = MarkovKernel { k_out, k_in, data };
        for x in 0..k_in {
            let col: Vec<f64> = (0..k_out).map(|y| kernel.get(y, x)).collect();
            if col.iter().any(|v| *v < -1e-9) || (col.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!("kernel column {x} is not a pmf")));
            }
        }
        Ok(kernel)
    }

    pub fn identity(k: usize) -> Self {
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        MarkovKernel { k_out: k, k_in: k, data }
    }

    /// Every input mapped to the pmf `q`.
    pub fn constant(q: &[f64], k_in: usize) -> Result<Self> {
        let data = q.iter().flat_map(|&v| std::iter::repeat(v).take(k_in)).collect();
        Self::new(q.len(), k_in, data)
    }

    pub fn k_out(&self) -> usize {
        self.k_out
    }

    pub fn k_in(&self) -> usize {
        self.k_in
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.k_in + x]
    }

    /// `Λ·p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.k_out)
            .map(|y| self.data[y * self.k_in..(y + 1) * self.k_in].iter().zip(p).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// `max_θ ‖Λ·P_θ − Q_θ‖₁` for a given kernel.
pub fn kernel_objective(source: &FiniteExperiment, target: &FiniteExperiment, kernel: &MarkovKernel) -> Result<f64> {
    check_pair(source, target)?;
    if kernel.k_in() != source.n_outcomes() || kernel.k_out() != target.n_outcomes() {
        return Err(Error::DimensionMismatch { expected: source.n_outcomes(), got: kernel.k_in() });
    }
    Ok((0..source.n_params())
        .map(|i| kernel.apply(source.row(i)).iter().zip(target.row(i)).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Dense simplex for small tableaux, HiGHS interior point otherwise.
    #[default]
    Auto,
    Dense,
    HighsSimplex,
    HighsIpm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub backend: Backend,
    pub max_iter: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { backend: Backend::Auto, max_iter: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyResult {
    /// Optimal LP value, clamped to `[0, 2]`.
    pub value: f64,
    pub kernel: MarkovKernel,
    /// [`kernel_objective`] of the returned (cleaned) kernel.
    pub kernel_value: f64,
    pub lp_status: LpStatus,
    /// `|primal − dual|` objective, when duals are available.
    pub duality_gap: Option<f64>,
    pub backend: Backend,
}

fn check_pair(source: &FiniteExperiment, target: &FiniteExperiment) -> Result<()> {
    if source.params() != target.params() {
        return Err(Error::config("source and target must share the same parameter list"));
    }
    Ok(())
}

/// The minimax LP with default options.
pub fn lp_deficiency(source: &FiniteExperiment, target: &FiniteExperiment) -> Result<DeficiencyResult> {
    lp_deficiency_with(source, target, &LpOptions::default())
}

/// Builds the LP. Variables: `Λ[y][x]`, then `e⁺[θ][y]`, `e⁻[θ][y]`, then `t`.
pub fn build_lp(source: &FiniteExperiment, target: &FiniteExperiment) -> LpProblem {
    let (p, k_in, k_out) = (source.n_params(), source.n_outcomes(), target.n_outcomes());
    let n_lam = k_in * k_out;
    let ep = |th: usize, y: usize| n_lam + th * k_out + y;
    let em = |th: usize, y: usize| n_lam + (p + th) * k_out + y;
    let t = n_lam + 2 * p * k_out;
    let mut costs = vec![0.0; t + 1];
    costs[t] = 1.0;
    let mut lp = LpProblem { costs, rows: Vec::new() };
    for x in 0..k_in {
        lp.add_row((0..k_out).map(|y| (y * k_in + x, 1.0)).collect(), RowKind::Eq, 1.0);
    }
    for th in 0..p {
        let prow = source.row(th);
        for y in 0..k_out {
            let mut coefs: Vec<(usize, f64)> =
                (0..k_in).filter(|&x| prow[x] > 0.0).map(|x| (y * k_in + x, prow[x])).collect();
            coefs.push((ep(th, y), -1.0));
            coefs.push((em(th, y), 1.0));
            lp.add_row(coefs, RowKind::Eq, target.row(th)[y]);
        }
    }
    for th in 0..p {
        let mut coefs: Vec<(usize, f64)> = (0..k_out).flat_map(|y| [(ep(th, y), 1.0), (em(th, y), 1.0)]).collect();
        coefs.push((t, -1.0));
        lp.add_row(coefs, RowKind::Le, 0.0);
    }
    lp
}

pub fn lp_deficiency_with(
    source: &FiniteExperiment,
    target: &FiniteExperiment,
    opts: &LpOptions,
) -> Result<DeficiencyResult> {
    check_pair(source, target)?;
    let (k_in, k_out) = (source.n_outcomes(), target.n_outcomes());
    if k_in * k_out > MAX_KERNEL_ENTRIES {
        return Err(Error::config(format!(
            "kernel has {} entries, above the cap of {MAX_KERNEL_ENTRIES}",
            k_in * k_out
        )));
    }
    let lp = build_lp(source, target);
    let tableau = (lp.rows.len() + 1) * (lp.n_vars() + lp.rows.len() + 1);
    let backend = match opts.backend {
        Backend::Auto if tableau <= DENSE_TABLEAU_LIMIT => Backend::Dense,
        Backend::Auto => Backend::HighsIpm,
        other => other,
    };
    let mut backend = backend;
    let mut sol: LpSolution = match backend {
        Backend::Dense => solve_dense(&lp, opts.max_iter).map_err(|e| match e {
            // the constant kernel is always feasible and t ≥ 0 bounds the objective
            SimplexError::Infeasible => Error::Numerical("dense simplex reported an infeasible LP".into()),
            SimplexError::Unbounded => Error::Numerical("dense simplex reported an unbounded LP".into()),
        })?,
        Backend::HighsSimplex => solve_highs(&lp, false, opts.max_iter)?,
        Backend::HighsIpm | Backend::Auto => solve_highs(&lp, true, opts.max_iter)?,
    };
    if opts.backend == Backend::Auto && backend == Backend::Dense && lp.max_violation(&sol.x) > DENSE_RESIDUAL_TOL {
        log::warn!("dense simplex lost feasibility, resolving with HiGHS");
        backend = Backend::HighsIpm;
        sol = solve_highs(&lp, true, opts.max_iter)?;
    }
    let duality_gap = sol.duals.as_ref().map(|y| (sol.objective - lp.dual_objective(y)).abs());
    // clean solver noise: clip negatives and renormalize each column
    let mut data = sol.x[..k_in * k_out].to_vec();
    for x in 0..k_in {
        let s: f64 = (0..k_out).map(|y| data[y * k_in + x].max(0.0)).sum();
        for y in 0..k_out {
            let v = &mut data[y * k_in + x];
            *v = if s > 0.0 { v.max(0.0) / s } else { 1.0 / k_out as f64 };
        }
    }
    let kernel = MarkovKernel { k_out, k_in, data };
    let kernel_value = kernel_objective(source, target, &kernel)?;
    Ok(DeficiencyResult {
        value: sol.objective.clamp(0.0, 2.0),
        kernel,
        kernel_value,
        lp_status: sol.status,
        duality_gap,
        backend,
    })
}

/// Which Gaussian pair to discretize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    /// `N(h, Σ)` against `N(√r·h, Σ)`.
    #[default]
    Amplification,
    /// `N(√r·h, rΣ)` against `N(√r·h, Σ)`; the identity kernel realizes the
    /// scale amplifier here.
    AmpOne,
    /// `N(h, Σ)` against `N(h, √r·Σ)`.
    LiteralBoundedShift,
}

/// Equally spaced points `lo, …, hi`; each is the center of a cell, and the
/// two end cells extend to `±∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Lattice {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config(format!("invalid lattice [{lo}, {hi}] x {count}")));
        }
        Ok(Lattice { lo, hi, count })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step()
    }

    /// Cell edges, `count + 1` values from `−∞` to `+∞`.
    pub fn edges(&self) -> Vec<f64> {
        let d = self.step();
        std::iter::once(f64::NEG_INFINITY)
            .chain((0..self.count - 1).map(|i| self.lo + (i as f64 + 0.5) * d))
            .chain(std::iter::once(f64::INFINITY))
            .collect()
    }

    /// Index of the cell containing `x`.
    pub fn cell_of(&self, x: f64) -> usize {
        ((x - self.lo) / self.step()).round().clamp(0.0, (self.count - 1) as f64) as usize
    }
}

fn cell_masses(edges: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    let mut row: Vec<f64> = edges.windows(2).map(|w| normal_interval_mass(w[0], w[1], mean, sd)).collect();
    let s: f64 = row.iter().sum();
    for v in &mut row {
        *v /= s;
    }
    row
}

/// Discretizes a Gaussian pair onto `grid` with exact cell masses.
///
/// `sigma` is the variance `Σ` (one-dimensional). Fails with a configuration
/// error if any row puts more than `tail_tol` mass in an end cell.
pub fn discretize_gaussian_pair(
    h_list: &[f64],
    sigma: f64,
    r: f64,
    grid: &Lattice,
    mode: TargetMode,
    tail_tol: f64,
) -> Result<(FiniteExperiment, FiniteExperiment)> {
    if h_list.is_empty() {
        return Err(Error::config("empty shift list"));
    }
    if !(sigma > 0.0) || !(r >= 1.0) {
        return Err(Error::domain(format!("need sigma > 0 and r >= 1, got sigma = {sigma}, r = {r}")));
    }
    let edges = grid.edges();
    let sd = sigma.sqrt();
    let g = r.sqrt();
    let law = |mean: f64, s: f64| -> Result<Vec<f64>> {
        let row = cell_masses(&edges, mean, s);
        let tail = row[0].max(row[row.len() - 1]);
        if tail > tail_tol {
            return Err(Error::config(format!(
                "grid [{}, {}] too narrow for N({mean}, {}): end-cell mass {tail:.3e} > {tail_tol:.1e}",
                grid.lo,
                grid.hi,
                s * s
            )));
        }
        Ok(row)
    };
    let mut src = Vec::with_capacity(h_list.len());
    let mut tgt = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let (s, t) = match mode {
            TargetMode::Amplification => (law(h, sd)?, law(g * h, sd)?),
            TargetMode::AmpOne => (law(g * h, g * sd)?, law(g * h, sd)?),
            TargetMode::LiteralBoundedShift => (law(h, sd)?, law(h, r.powf(0.25) * sd)?),
        };
        src.push(s);
        tgt.push(t);
    }
    let params: Vec<String> = h_list.iter().map(|h| format!("{h}")).collect();
    Ok((FiniteExperiment::new(params.clone(), src)?, FiniteExperiment::new(params, tgt)?))
}

/// The discretized scale map `x ↦ gain·x`: the image of each input cell is
/// spread over the output cells in proportion to overlap length (end cells
/// go to the matching end cell).
pub fn scale_kernel(input: &Lattice, output: &Lattice, gain: f64) -> MarkovKernel {
    let (ein, eout) = (input.edges(), output.edges());
    let mut data = vec![0.0; output.count * input.count];
    for x in 0..input.count {
        let (a, b) = (gain * ein[x], gain * ein[x + 1]);
        if !a.is_finite() || !b.is_finite() {
            let y = if a.is_finite() { output.count - 1 } else { 0 };
            data[y * input.count + x] = 1.0;
            continue;
        }
        for y in 0..output.count {
            let overlap = (b.min(eout[y + 1]) - a.max(eout[y])).max(0.0);
            data[y * input.count + x] = overlap / (b - a);
        }
    }
    MarkovKernel { k_out: output.count, k_in: input.count, data }
}

/// `{−a, −a + step, …, a}` (always containing `a` up to rounding).
pub fn symmetric_grid(a: f64, step: f64) -> Result<Vec<f64>> {
    if !(a >= 0.0) || !(step > 0.0) {
        return Err(Error::config(format!("invalid shift grid a = {a}, step = {step}")));
    }
    let k = (a / step + 1e-9).floor() as i64;
    Ok((-k..=k).map(|i| i as f64 * step).collect())
}
