//! Large instances go to the HiGHS solver.

use highs::{HighsModelStatus, RowProblem, Sense};

use super::lp::{LpProblem, LpSolution, LpStatus, RowKind};
use crate::error::{Error, Result};

/// HiGHS drops matrix entries at or below this magnitude (with a warning);
/// they are dropped here first.
const SMALL_MATRIX_VALUE: f64 = 1e-9;

/// Solves `lp` with HiGHS, by dual simplex or interior point (with
/// crossover).
pub fn solve_highs(lp: &LpProblem, interior_point: bool, max_iter: usize) -> Result<LpSolution> {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = lp.costs.iter().map(|&c| pb.add_column(c, 0.0..)).collect();
    let mut dropped = 0usize;
    for row in &lp.rows {
        dropped += row.coefs.iter().filter(|c| c.1.abs() <= SMALL_MATRIX_VALUE).count();
        let coefs = row.coefs.iter().filter(|c| c.1.abs() > SMALL_MATRIX_VALUE).map(|&(j, a)| (cols[j], a));
        match row.kind {
            RowKind::Eq => pb.add_row(row.rhs..=row.rhs, coefs),
            RowKind::Le => pb.add_row(..=row.rhs, coefs),
            RowKind::Ge => pb.add_row(row.rhs.., coefs),
        }
    }
    if dropped > 0 {
        log::debug!("dropped {dropped} matrix entries below {SMALL_MATRIX_VALUE:e}");
    }
    let mut model = pb
        .try_optimise(Sense::Minimise)
        .map_err(|s| Error::Numerical(format!("HiGHS rejected the model: {s:?}")))?;
    model.make_quiet();
    if interior_point {
        model.set_option("solver", "ipm");
        model.set_option("ipm_iteration_limit", max_iter.min(i32::MAX as usize) as i32);
    } else {
        model.set_option("simplex_iteration_limit", max_iter.min(i32::MAX as usize) as i32);
    }
    let solved = model
        .try_solve()
        .map_err(|s| Error::Numerical(format!("HiGHS failed: {s:?}")))?;
    let status = match solved.status() {
        HighsModelStatus::Optimal => LpStatus::Optimal,
        HighsModelStatus::ReachedIterationLimit | HighsModelStatus::ReachedTimeLimit => LpStatus::IterationLimit,
        other => return Err(Error::Numerical(format!("HiGHS ended with status {other:?}"))),
    };
    let sol = solved.get_solution();
    let x: Vec<f64> = sol.columns().iter().map(|v| v.max(0.0)).collect();
    let objective = lp.costs.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective, duals: Some(sol.dual_rows().to_vec()), status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deficiency::lp::solve_dense;

    #[test]
    fn agrees_with_dense_simplex() {
        let mut p = LpProblem { costs: vec![1.0, 2.0, 3.0], rows: Vec::new() };
        p.add_row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], RowKind::Eq, 1.0);
        p.add_row(vec![(1, 1.0), (2, 1.0)], RowKind::Ge, 0.5);
        p.add_row(vec![(0, 1.0)], RowKind::Le, 0.25);
        let dense = solve_dense(&p, 100).unwrap();
        for ipm in [false, true] {
            let h = solve_highs(&p, ipm, 10_000).unwrap();
            assert_eq!(h.status, LpStatus::Optimal);
            assert!((h.objective - dense.objective).abs() < 1e-8);
            let gap = (h.objective - p.dual_objective(h.duals.as_ref().unwrap())).abs();
            assert!(gap < 1e-7);
        }
    }
}
