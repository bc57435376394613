//! Config-driven experiment runs and their CSV / JSON reports.
//!
//! A config file is TOML with optional top-level `seed`, `workers`, `out` and
//! `format` keys and one table per experiment id (`[tv]`, `[amp-loss]`,
//! `[deficiency]`, `[clone-sim]`, `[minimax-probe]`, `[lan-diag]`,
//! `[coupling]`). Missing tables and keys take their defaults, and the
//! resolved table is echoed in every JSON report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplifier::amplifier_loss_mc;
use crate::cloner::{clone_loss_discrete, local_minimax_probe, ClonerConfig, LossOptions};
use crate::deficiency::{
    discretize_gaussian_pair, lp_deficiency_with, symmetric_grid, Backend, Lattice, LpOptions, LpStatus, TargetMode,
    DEFAULT_TAIL_TOL,
};
use crate::error::{Error, Result};
use crate::families::Family;
use crate::gaussian::{tv_ball_indicator, tv_isotropic, tv_numeric, GaussianShift, TvMethod, TvResult};
use crate::lan::{lan_residual_rate, quantile_coupling};
use crate::rng::stream_rng;
use crate::stats::loglog_slope;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Build version, `git describe` output when available.
pub const VERSION: &str = env!("CLONEKIT_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Tv,
    AmpLoss,
    Deficiency,
    CloneSim,
    MinimaxProbe,
    LanDiag,
    Coupling,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Tv,
        Experiment::AmpLoss,
        Experiment::Deficiency,
        Experiment::CloneSim,
        Experiment::MinimaxProbe,
        Experiment::LanDiag,
        Experiment::Coupling,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Tv => "tv",
            Experiment::AmpLoss => "amp-loss",
            Experiment::Deficiency => "deficiency",
            Experiment::CloneSim => "clone-sim",
            Experiment::MinimaxProbe => "minimax-probe",
            Experiment::LanDiag => "lan-diag",
            Experiment::Coupling => "coupling",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvParams {
    pub r: Vec<f64>,
    pub m: Vec<u32>,
    pub methods: Vec<TvMethod>,
    /// Monte Carlo draws per expectation.
    pub budget: usize,
}

impl Default for TvParams {
    fn default() -> Self {
        TvParams { r: vec![2.0], m: vec![1], methods: vec![TvMethod::ClosedForm], budget: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmpLossParams {
    pub r: f64,
    /// Covariance rows.
    pub sigma: Vec<Vec<f64>>,
    /// Shift vectors.
    pub h: Vec<Vec<f64>>,
    pub method: TvMethod,
    pub budget: usize,
}

impl Default for AmpLossParams {
    fn default() -> Self {
        AmpLossParams {
            r: 2.0,
            sigma: vec![vec![1.0]],
            h: vec![vec![0.0], vec![1.0], vec![3.0]],
            method: TvMethod::MonteCarlo,
            budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeficiencyParams {
    pub r: f64,
    /// Variance of the one-dimensional Gaussian.
    pub sigma: f64,
    /// Shift bounds; each gives the grid `{−a, …, a}` with step `h_step`.
    pub a: Vec<f64>,
    pub h_step: f64,
    pub grid: Lattice,
    pub mode: TargetMode,
    pub tail_tol: f64,
    pub backend: Backend,
    pub max_iter: usize,
}

impl Default for DeficiencyParams {
    fn default() -> Self {
        DeficiencyParams {
            r: 2.0,
            sigma: 1.0,
            a: vec![0.5, 1.0, 2.0, 4.0],
            h_step: 0.5,
            grid: Lattice { lo: -10.0, hi: 10.0, count: 201 },
            mode: TargetMode::Amplification,
            tail_tol: DEFAULT_TAIL_TOL,
            backend: Backend::Auto,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloneSimParams {
    pub family: String,
    /// Scale of `gauss-loc` (ignored otherwise).
    pub sigma: f64,
    pub theta: f64,
    pub r: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub n: Vec<usize>,
    pub reps: usize,
    pub bootstrap: usize,
}

impl Default for CloneSimParams {
    fn default() -> Self {
        CloneSimParams {
            family: "bernoulli".into(),
            sigma: 1.0,
            theta: 0.3,
            r: 2.0,
            delta: 0.05,
            epsilon: 0.01,
            n: vec![100, 400, 1600],
            reps: 20_000,
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimaxParams {
    pub family: String,
    pub sigma: f64,
    pub theta: f64,
    pub h: Vec<f64>,
    pub n: usize,
    pub r: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub reps: usize,
    pub bootstrap: usize,
}

impl Default for MinimaxParams {
    fn default() -> Self {
        MinimaxParams {
            family: "bernoulli".into(),
            sigma: 1.0,
            theta: 0.3,
            h: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            n: 1600,
            r: 2.0,
            delta: 0.05,
            epsilon: 0.01,
            reps: 20_000,
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanDiagParams {
    pub family: String,
    pub sigma: f64,
    pub theta: f64,
    pub h: f64,
    pub n: Vec<usize>,
    pub threshold: f64,
    pub reps: usize,
}

impl Default for LanDiagParams {
    fn default() -> Self {
        LanDiagParams {
            family: "bernoulli".into(),
            sigma: 1.0,
            theta: 0.5,
            h: 1.0,
            n: vec![25, 100, 400],
            threshold: 0.1,
            reps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingParams {
    pub family: String,
    pub sigma: f64,
    pub theta: f64,
    pub n: Vec<usize>,
    pub eps_dev: f64,
    pub resolution: usize,
}

impl Default for CouplingParams {
    fn default() -> Self {
        CouplingParams {
            family: "bernoulli".into(),
            sigma: 1.0,
            theta: 0.5,
            n: vec![16, 64, 256, 1024],
            eps_dev: 0.1,
            resolution: 100_000,
        }
    }
}

/// The whole config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tv: TvParams,
    #[serde(rename = "amp-loss")]
    pub amp_loss: AmpLossParams,
    pub deficiency: DeficiencyParams,
    #[serde(rename = "clone-sim")]
    pub clone_sim: CloneSimParams,
    #[serde(rename = "minimax-probe")]
    pub minimax_probe: MinimaxParams,
    #[serde(rename = "lan-diag")]
    pub lan_diag: LanDiagParams,
    pub coupling: CouplingParams,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub file: ConfigFile,
}

impl ExperimentConfig {
    pub fn resolve(experiment: Experiment, file: ConfigFile, flags: Overrides) -> Result<Self> {
        let cfg = ExperimentConfig {
            experiment,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            workers: flags.workers.or(file.workers),
            out: flags.out.or_else(|| file.out.clone()),
            format: flags.format.or(file.format).unwrap_or_default(),
            file,
        };
        if cfg.workers == Some(0) {
            return Err(Error::config("workers must be positive"));
        }
        Ok(cfg)
    }

    /// The resolved parameter table of the selected experiment.
    pub fn params_json(&self) -> serde_json::Value {
        let f = &self.file;
        let v = match self.experiment {
            Experiment::Tv => serde_json::to_value(&f.tv),
            Experiment::AmpLoss => serde_json::to_value(&f.amp_loss),
            Experiment::Deficiency => serde_json::to_value(&f.deficiency),
            Experiment::CloneSim => serde_json::to_value(&f.clone_sim),
            Experiment::MinimaxProbe => serde_json::to_value(&f.minimax_probe),
            Experiment::LanDiag => serde_json::to_value(&f.lan_diag),
            Experiment::Coupling => serde_json::to_value(&f.coupling),
        };
        v.expect("parameter tables serialize")
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Empty,
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Some result did not reach its stopping criterion.
    Partial,
}

/// Results of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: BTreeMap<String, f64>,
    pub wall_clock_s: f64,
    pub status: Status,
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    summary: BTreeMap<String, f64>,
    status: Status,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new(), summary: BTreeMap::new(), status: Status::Ok }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Runs the experiment on a pool of `cfg.workers` threads (all cores when
/// unset).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let table = pool.install(|| match cfg.experiment {
        Experiment::Tv => run_tv(&cfg.file.tv, cfg.seed),
        Experiment::AmpLoss => run_amp_loss(&cfg.file.amp_loss, cfg.seed),
        Experiment::Deficiency => run_deficiency(&cfg.file.deficiency),
        Experiment::CloneSim => run_clone_sim(&cfg.file.clone_sim, cfg.seed),
        Experiment::MinimaxProbe => run_minimax(&cfg.file.minimax_probe, cfg.seed),
        Experiment::LanDiag => run_lan_diag(&cfg.file.lan_diag, cfg.seed),
        Experiment::Coupling => run_coupling(&cfg.file.coupling),
    })?;
    Ok(Report {
        schema: SCHEMA_VERSION,
        version: VERSION.to_string(),
        experiment: cfg.experiment.id().to_string(),
        seed: cfg.seed,
        config: cfg.params_json(),
        columns: table.columns.iter().map(|c| c.to_string()).collect(),
        rows: table.rows,
        summary: table.summary,
        wall_clock_s: start.elapsed().as_secs_f64(),
        status: table.status,
    })
}

fn family_of(id: &str, sigma: f64) -> Result<Family> {
    match Family::from_str(id)? {
        Family::GaussianLocation { .. } => Family::gaussian_location(sigma),
        f => Ok(f),
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::config("reps must be >= 1"));
    }
    Ok(())
}

fn run_tv(p: &TvParams, seed: u64) -> Result<Table> {
    if p.r.is_empty() || p.m.is_empty() || p.methods.is_empty() {
        return Err(Error::config("tv needs at least one r, m and method"));
    }
    let mut t = Table::new(&["r", "m", "method", "value", "std_error", "crossing_radius_sq"]);
    for &r in &p.r {
        for &m in &p.m {
            for &method in &p.methods {
                let mut rng = stream_rng(seed, &format!("tv/{r}/{m}/{method:?}"), 0);
                let res: TvResult = match method {
                    TvMethod::ClosedForm => tv_isotropic(r, m)?,
                    TvMethod::BallIndicator => tv_ball_indicator(r, m, p.budget, &mut rng)?,
                    numeric => {
                        let dim = m as usize;
                        let a = GaussianShift::standard(dim)?;
                        let b = GaussianShift::isotropic(DVector::zeros(dim), r)?;
                        tv_numeric(&a, &b, numeric, p.budget, &mut rng)?
                    }
                };
                let method_id = serde_json::to_value(res.method).expect("enum serializes");
                t.push(vec![
                    r.into(),
                    m.into(),
                    method_id.as_str().unwrap_or_default().into(),
                    res.value.into(),
                    res.std_error.into(),
                    res.crossing_radius_sq.into(),
                ]);
            }
        }
    }
    Ok(t)
}

fn run_amp_loss(p: &AmpLossParams, seed: u64) -> Result<Table> {
    let m = p.sigma.len();
    if m == 0 || p.sigma.iter().any(|row| row.len() != m) {
        return Err(Error::config("sigma must be a nonempty square matrix"));
    }
    let sigma = DMatrix::from_fn(m, m, |i, j| p.sigma[i][j]);
    let mut h_grid = Vec::with_capacity(p.h.len());
    for h in &p.h {
        if h.len() != m {
            return Err(Error::config(format!("shift {h:?} does not have dimension {m}")));
        }
        h_grid.push(DVector::from_column_slice(h));
    }
    let mut rng = stream_rng(seed, "amp-loss", 0);
    let loss = amplifier_loss_mc(p.r, &sigma, &h_grid, p.method, p.budget, &mut rng)?;
    let reference = tv_isotropic(p.r, m as u32)?.value;
    let mut t = Table::new(&["h", "value", "std_error", "reference"]);
    for (h, res) in p.h.iter().zip(&loss.per_h) {
        let label: Vec<String> = h.iter().map(|x| format!("{x}")).collect();
        t.push(vec![label.join(";").as_str().into(), res.value.into(), res.std_error.into(), reference.into()]);
    }
    t.summary.insert("sup".into(), loss.sup);
    t.summary.insert("spread".into(), loss.spread);
    Ok(t)
}

fn run_deficiency(p: &DeficiencyParams) -> Result<Table> {
    if p.a.is_empty() {
        return Err(Error::config("deficiency needs at least one a"));
    }
    let grid = Lattice::new(p.grid.lo, p.grid.hi, p.grid.count)?;
    let opts = LpOptions { backend: p.backend, max_iter: p.max_iter };
    let results: Vec<_> = p
        .a
        .par_iter()
        .map(|&a| {
            let shifts = symmetric_grid(a, p.h_step)?;
            let (s, q) = discretize_gaussian_pair(&shifts, p.sigma, p.r, &grid, p.mode, p.tail_tol)?;
            Ok((a, shifts.len(), lp_deficiency_with(&s, &q, &opts)?))
        })
        .collect::<Result<_>>()?;
    let reference = tv_isotropic(p.r, 1)?.value;
    let mut t = Table::new(&["a", "shifts", "value", "kernel_value", "status", "duality_gap", "backend", "reference"]);
    for (a, shifts, res) in results {
        if res.lp_status != LpStatus::Optimal {
            t.status = Status::Partial;
        }
        let status = serde_json::to_value(res.lp_status).expect("enum serializes");
        let backend = serde_json::to_value(res.backend).expect("enum serializes");
        t.push(vec![
            a.into(),
            shifts.into(),
            res.value.into(),
            res.kernel_value.into(),
            status.as_str().unwrap_or_default().into(),
            res.duality_gap.into(),
            backend.as_str().unwrap_or_default().into(),
            reference.into(),
        ]);
    }
    Ok(t)
}

fn loss_options(reps: usize, bootstrap: usize) -> Result<LossOptions> {
    check_reps(reps)?;
    Ok(LossOptions { bootstrap, ..LossOptions::new(reps) })
}

fn run_clone_sim(p: &CloneSimParams, seed: u64) -> Result<Table> {
    let family = family_of(&p.family, p.sigma)?;
    if p.n.is_empty() {
        return Err(Error::config("clone-sim needs at least one n"));
    }
    let opts = loss_options(p.reps, p.bootstrap)?;
    let reference = tv_isotropic(p.r / (1.0 - p.delta), 1)?.value;
    let mut t = Table::new(&[
        "n", "n1", "n2", "rn", "reps", "loss", "ci_lo", "ci_hi", "plug_in", "clip_rate", "reference",
    ]);
    for &n in &p.n {
        let cfg = ClonerConfig::new(n, p.r, p.delta, p.epsilon, seed)?;
        let res = clone_loss_discrete(family, p.theta, &cfg, &opts)?;
        t.push(vec![
            n.into(),
            cfg.n1().into(),
            cfg.n2().into(),
            cfg.rn().into(),
            res.reps.into(),
            res.loss.into(),
            res.ci.0.into(),
            res.ci.1.into(),
            res.plug_in.into(),
            res.clip_rate.into(),
            reference.into(),
        ]);
    }
    Ok(t)
}

fn run_minimax(p: &MinimaxParams, seed: u64) -> Result<Table> {
    let family = family_of(&p.family, p.sigma)?;
    let opts = loss_options(p.reps, p.bootstrap)?;
    let cfg = ClonerConfig::new(p.n, p.r, p.delta, p.epsilon, seed)?;
    let probe = local_minimax_probe(family, p.theta, &p.h, &cfg, &opts)?;
    let mut t = Table::new(&["h", "theta", "loss", "ci_lo", "ci_hi", "plug_in", "clip_rate"]);
    for row in &probe.rows {
        let l = &row.loss;
        t.push(vec![
            row.h.into(),
            l.theta.into(),
            l.loss.into(),
            l.ci.0.into(),
            l.ci.1.into(),
            l.plug_in.into(),
            l.clip_rate.into(),
        ]);
    }
    t.summary.insert("sup".into(), probe.sup);
    t.summary.insert("argmax_h".into(), probe.argmax);
    t.summary.insert("reference".into(), tv_isotropic(p.r, 1)?.value);
    Ok(t)
}

fn run_lan_diag(p: &LanDiagParams, seed: u64) -> Result<Table> {
    check_reps(p.reps)?;
    let f = family_of(&p.family, p.sigma)?.at(p.theta)?;
    let rows = lan_residual_rate(&f, p.h, &p.n, p.threshold, p.reps, seed)?;
    let mut t = Table::new(&["n", "exceed", "trials", "prob", "ci_lo", "ci_hi"]);
    for e in rows {
        t.push(vec![e.n.into(), e.exceed.into(), e.trials.into(), e.prob.into(), e.ci.0.into(), e.ci.1.into()]);
    }
    Ok(t)
}

fn run_coupling(p: &CouplingParams) -> Result<Table> {
    let f = family_of(&p.family, p.sigma)?.at(p.theta)?;
    let rep = quantile_coupling(&f, &p.n, p.eps_dev, p.resolution)?;
    let mut t = Table::new(&["n", "deviation_prob", "sup_deviation", "mean_abs_deviation"]);
    for r in &rep.rows {
        t.push(vec![r.n.into(), r.deviation_prob.into(), r.sup_deviation.into(), r.mean_abs_deviation.into()]);
    }
    let xs: Vec<f64> = rep.rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rep.rows.iter().map(|r| r.mean_abs_deviation).collect();
    if let Some(slope) = loglog_slope(&xs, &ys) {
        t.summary.insert("loglog_slope".into(), slope);
    }
    Ok(t)
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Empty => String::new(),
        Cell::Int(v) => v.to_string(),
        Cell::Num(v) => format!("{v:.16e}"),
        Cell::Text(s) => s.clone(),
    }
}

/// Serializes `report`. CSV carries no wall-clock value, so reruns with the
/// same config and seed are byte-identical.
pub fn emit_report(report: &Report, format: Format) -> Result<Vec<u8>> {
    if report.rows.is_empty() {
        return Err(Error::config("refusing to emit an empty report"));
    }
    match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(report).map_err(|e| Error::Numerical(e.to_string()))?;
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# clonekit {} experiment={} seed={}", report.version, report.experiment, report.seed);
            let _ = writeln!(s, "# columns: {}", report.columns.join(","));
            if report.status != Status::Ok {
                let _ = writeln!(s, "# status: partial");
            }
            for (k, v) in &report.summary {
                let _ = writeln!(s, "# {k} = {v:.16e}");
            }
            s.push_str(&report.columns.join(","));
            s.push('\n');
            for row in &report.rows {
                let cells: Vec<String> = row.iter().map(csv_cell).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            Ok(s.into_bytes())
        }
    }
}

/// Writes the emitted report to `out`, or to standard output.
pub fn write_report(report: &Report, format: Format, out: Option<&Path>) -> Result<()> {
    let bytes = emit_report(report, format)?;
    match out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|e| Error::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Process exit code for an error: 2 for bad input, 3 for numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical(_) | Error::Factorization(_) => 3,
        _ => 2,
    }
}
