//! Linear programs in the form `min cᵀx` s.t. row constraints, `x ≥ 0`, and
//! a dense two-phase simplex with Bland's rule for small instances.

use serde::Serialize;

/// Feasibility and optimality tolerance of the dense simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `min costsᵀx` subject to `rows`, all variables nonnegative.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub costs: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn n_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        self.rows.push(LpRow { coefs, kind, rhs });
    }

    /// Largest constraint or sign violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| {
            let v: f64 = r.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            match r.kind {
                RowKind::Eq => (v - r.rhs).abs(),
                RowKind::Le => (v - r.rhs).max(0.0),
                RowKind::Ge => (r.rhs - v).max(0.0),
            }
        });
        x.iter().map(|v| (-v).max(0.0)).chain(rows).fold(0.0, f64::max)
    }

    /// `Σ y_i·rhs_i`, the dual objective for row duals `y` (column bounds
    /// are all zero, so they contribute nothing).
    pub fn dual_objective(&self, duals: &[f64]) -> f64 {
        self.rows.iter().zip(duals).map(|(r, y)| r.rhs * y).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals with `c − Aᵀy ≥ 0` at optimality.
    pub duals: Option<Vec<f64>>,
    pub status: LpStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimplexError {
    Infeasible,
    Unbounded,
}

/// Smallest tableau entry accepted as a pivot.
const PIVOT_TOL: f64 = 1e-9;

struct Tableau {
    rows: usize,
    cols: usize,
    /// `(rows + 1) × (cols + 1)`, objective row last, rhs column last.
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    /// Installs the reduced-cost row `c − c_Bᵀ B⁻¹A` for new phase costs.
    fn set_costs(&mut self, costs: &[f64]) {
        let (m, w) = (self.rows, self.cols + 1);
        let mut obj = vec![0.0; w];
        obj[..self.cols].copy_from_slice(costs);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&self.data[i * w..(i + 1) * w]) {
                    *o -= cb * v;
                }
            }
        }
        self.data[m * w..].copy_from_slice(&obj);
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let inv = 1.0 / self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == pr {
                continue;
            }
            let f = self.data[i * w + pc];
            if f != 0.0 {
                let row = &mut self.data[i * w..(i + 1) * w];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Bland's rule iterations on the current objective row. Columns with
    /// `allowed[j] == false` never enter. Returns `Ok(true)` at optimality,
    /// `Ok(false)` when the iteration budget ran out.
    fn run(&mut self, allowed: &[bool], budget: &mut usize) -> Result<bool, SimplexError> {
        loop {
            let obj = self.rows;
            let entering = (0..self.cols).find(|&j| allowed[j] && self.at(obj, j) < -SIMPLEX_TOL);
            let Some(pc) = entering else { return Ok(true) };
            if *budget == 0 {
                return Ok(false);
            }
            *budget -= 1;
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.rows {
                let a = self.at(i, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => ratio < r - SIMPLEX_TOL || (ratio <= r + SIMPLEX_TOL && self.basis[i] < b),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((_, pr, _)) = best else { return Err(SimplexError::Unbounded) };
            self.pivot(pr, pc);
        }
    }
}

/// Solves `lp` with a dense two-phase simplex using Bland's anti-cycling rule.
pub fn solve_dense(lp: &LpProblem, max_iter: usize) -> Result<LpSolution, SimplexError> {
    let n = lp.n_vars();
    let m = lp.rows.len();
    // normalize to nonnegative right-hand sides
    let mut sign = vec![1.0; m];
    let mut kinds = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let mut kind = row.kind;
        if row.rhs < 0.0 {
            sign[i] = -1.0;
            kind = match kind {
                RowKind::Le => RowKind::Ge,
                RowKind::Ge => RowKind::Le,
                RowKind::Eq => RowKind::Eq,
            };
        }
        kinds.push(kind);
    }
    // column layout: originals, one slack/surplus per inequality, one
    // artificial per Eq/Ge row
    let mut next = n;
    let mut slack_of = vec![None; m];
    for (i, k) in kinds.iter().enumerate() {
        if *k != RowKind::Eq {
            slack_of[i] = Some(next);
            next += 1;
        }
    }
    let mut unit_col = vec![0usize; m];
    let mut artificial = vec![false; next];
    for (i, k) in kinds.iter().enumerate() {
        if *k == RowKind::Le {
            unit_col[i] = slack_of[i].expect("slack");
        } else {
            unit_col[i] = next;
            artificial.push(true);
            next += 1;
        }
    }
    let cols = next;
    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coefs {
            data[i * w + j] += sign[i] * a;
        }
        if let Some(s) = slack_of[i] {
            data[i * w + s] = if kinds[i] == RowKind::Le { 1.0 } else { -1.0 };
        }
        data[i * w + unit_col[i]] = 1.0;
        data[i * w + cols] = sign[i] * row.rhs;
    }
    let mut t = Tableau { rows: m, cols, data, basis: unit_col.clone() };
    let mut budget = max_iter;

    // phase 1: minimize the sum of artificials
    if artificial.iter().any(|a| *a) {
        let phase1: Vec<f64> = artificial.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        t.set_costs(&phase1);
        let allowed = vec![true; cols];
        if !t.run(&allowed, &mut budget)? {
            return Ok(partial(&t, n, LpStatus::IterationLimit, lp));
        }
        if -t.rhs(m) > 1e-7 {
            return Err(SimplexError::Infeasible);
        }
        // drive remaining zero-level artificials out of the basis
        for i in 0..m {
            if artificial[t.basis[i]] {
                let best = (0..cols)
                    .filter(|&j| !artificial[j])
                    .max_by(|&a, &b| t.at(i, a).abs().total_cmp(&t.at(i, b).abs()));
                if let Some(j) = best.filter(|&j| t.at(i, j).abs() > SIMPLEX_TOL) {
                    t.pivot(i, j);
                }
            }
        }
    }

    // phase 2: true objective
    let phase2: Vec<f64> = (0..cols).map(|j| if j < n { lp.costs[j] } else { 0.0 }).collect();
    t.set_costs(&phase2);
    let allowed: Vec<bool> = (0..cols).map(|j| !artificial[j]).collect();
    let status = if t.run(&allowed, &mut budget)? { LpStatus::Optimal } else { LpStatus::IterationLimit };
    let mut sol = partial(&t, n, status, lp);
    // y_i = −(reduced cost of the initial unit column of row i)
    let duals = (0..m).map(|i| -sign[i] * t.at(m, unit_col[i])).collect();
    sol.duals = Some(duals);
    Ok(sol)
}

fn partial(t: &Tableau, n: usize, status: LpStatus, lp: &LpProblem) -> LpSolution {
    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    let objective = lp.costs.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpSolution { x, objective, duals: None, status }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(costs: &[f64], rows: &[(&[(usize, f64)], RowKind, f64)]) -> LpProblem {
        let mut p = LpProblem { costs: costs.to_vec(), rows: Vec::new() };
        for (c, k, b) in rows {
            p.add_row(c.to_vec(), *k, *b);
        }
        p
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let p = lp(
            &[-3.0, -5.0],
            &[
                (&[(0, 1.0)], RowKind::Le, 4.0),
                (&[(1, 2.0)], RowKind::Le, 12.0),
                (&[(0, 3.0), (1, 2.0)], RowKind::Le, 18.0),
            ],
        );
        let s = solve_dense(&p, 1000).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        let gap = (s.objective - p.dual_objective(s.duals.as_ref().unwrap())).abs();
        assert!(gap < 1e-9, "gap {gap}");
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y + 3z, x + y + z = 1, y + z ≥ 0.5, −x ≥ −0.25 (i.e. x ≤ 0.25)
        let p = lp(
            &[1.0, 2.0, 3.0],
            &[
                (&[(0, 1.0), (1, 1.0), (2, 1.0)], RowKind::Eq, 1.0),
                (&[(1, 1.0), (2, 1.0)], RowKind::Ge, 0.5),
                (&[(0, -1.0)], RowKind::Ge, -0.25),
            ],
        );
        let s = solve_dense(&p, 1000).unwrap();
        // x = 0.25, y = 0.75
        assert!((s.objective - 1.75).abs() < 1e-9, "{s:?}");
        let gap = (s.objective - p.dual_objective(s.duals.as_ref().unwrap())).abs();
        assert!(gap < 1e-9, "gap {gap}");
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let inf = lp(&[1.0], &[(&[(0, 1.0)], RowKind::Le, 1.0), (&[(0, 1.0)], RowKind::Ge, 2.0)]);
        assert_eq!(solve_dense(&inf, 100), Err(SimplexError::Infeasible));
        let unb = lp(&[-1.0], &[(&[(0, 1.0)], RowKind::Ge, 1.0)]);
        assert_eq!(solve_dense(&unb, 100), Err(SimplexError::Unbounded));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // a classic cycling example for the largest-coefficient rule
        let p = lp(
            &[-0.75, 150.0, -0.02, 6.0],
            &[
                (&[(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], RowKind::Le, 0.0),
                (&[(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], RowKind::Le, 0.0),
                (&[(2, 1.0)], RowKind::Le, 1.0),
            ],
        );
        let s = solve_dense(&p, 1000).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let p = lp(
            &[-3.0, -5.0],
            &[(&[(0, 1.0)], RowKind::Le, 4.0), (&[(1, 2.0)], RowKind::Le, 12.0), (&[(0, 3.0), (1, 2.0)], RowKind::Le, 18.0)],
        );
        assert_eq!(solve_dense(&p, 1).unwrap().status, LpStatus::IterationLimit);
    }
}
