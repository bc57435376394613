//! Plain-text matrix format for finite experiments.
//!
//! ```text
//! # params: <label> <label> ...
//! <p> <K>
//! <K numbers>      (one line per parameter)
//! ```
//!
//! The `# params:` line is optional on input; without it the labels are
//! `0, 1, …, p − 1`. Other `#` lines and blank lines are ignored.

use std::io::{BufRead, Write};

use super::FiniteExperiment;
use crate::error::{Error, Result};

pub fn write_experiment<W: Write>(exp: &FiniteExperiment, mut out: W) -> Result<()> {
    writeln!(out, "# params: {}", exp.params().join(" "))?;
    writeln!(out, "{} {}", exp.n_params(), exp.n_outcomes())?;
    for i in 0..exp.n_params() {
        let row: Vec<String> = exp.row(i).iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_experiment<R: BufRead>(input: R) -> Result<FiniteExperiment> {
    let mut labels: Option<Vec<String>> = None;
    let mut numbers: Vec<Vec<f64>> = Vec::new();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# params:") {
            labels = Some(rest.split_whitespace().map(str::to_owned).collect());
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::config(format!("bad number '{t}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        numbers.push(row);
    }
    let mut it = numbers.into_iter();
    let header = it.next().ok_or_else(|| Error::config("missing 'p K' header"))?;
    let [p, k] = header[..] else {
        return Err(Error::config("header must be two integers 'p K'"));
    };
    if p.fract() != 0.0 || k.fract() != 0.0 || p < 1.0 || k < 1.0 {
        return Err(Error::config("header must be two positive integers 'p K'"));
    }
    let (p, k) = (p as usize, k as usize);
    let rows: Vec<Vec<f64>> = it.collect();
    if rows.len() != p {
        return Err(Error::config(format!("expected {p} rows, found {}", rows.len())));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::config(format!("expected {k} entries per row, found {}", bad.len())));
    }
    let labels = labels.unwrap_or_else(|| (0..p).map(|i| i.to_string()).collect());
    FiniteExperiment::new(labels, rows)
}
