//! Laws on integer lattices and exact L1 distances between them.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-12;

/// A pmf on integer points, stored as a sorted support with parallel masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    support: Vec<i64>,
    mass: Vec<f64>,
    /// Number of samples behind an empirical estimate, if any.
    sample_count: Option<usize>,
}

impl EmpiricalLaw {
    /// Builds a law from `(point, mass)` pairs; repeated points are merged.
    pub fn new(pairs: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut merged = BTreeMap::new();
        for (k, w) in pairs {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::domain(format!("mass at {k} must be finite and nonnegative, got {w}")));
            }
            *merged.entry(k).or_insert(0.0) += w;
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::domain(format!("masses sum to {total}, expected 1")));
        }
        let (support, mass) = merged.into_iter().unzip();
        Ok(EmpiricalLaw { support, mass, sample_count: None })
    }

    /// Like [`new`](Self::new), but divides by the total mass first.
    pub fn normalized(pairs: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if !(total > 0.0) {
            return Err(Error::domain("cannot normalize a law with zero total mass"));
        }
        Self::new(pairs.into_iter().map(|(k, w)| (k, w / total)))
    }

    pub fn point(k: i64) -> Self {
        EmpiricalLaw { support: vec![k], mass: vec![1.0], sample_count: None }
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn sample_count(&self) -> Option<usize> {
        self.sample_count
    }

    pub fn with_sample_count(mut self, n: usize) -> Self {
        self.sample_count = Some(n);
        self
    }

    /// Mass at `k` (zero off support).
    pub fn get(&self, k: i64) -> f64 {
        self.support.binary_search(&k).map(|i| self.mass[i]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    /// Writes `point,mass` CSV rows under a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "point,mass")?;
        for (k, w) in self.iter() {
            writeln!(out, "{k},{w:.16e}")?;
        }
        Ok(())
    }
}

/// `Σ_k |p(k) − q(k)|` over the union of supports.
pub fn pmf_l1(p: &EmpiricalLaw, q: &EmpiricalLaw) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    while i < p.support.len() || j < q.support.len() {
        let kp = p.support.get(i).copied().unwrap_or(i64::MAX);
        let kq = q.support.get(j).copied().unwrap_or(i64::MAX);
        if kp == kq {
            total += (p.mass[i] - q.mass[j]).abs();
            i += 1;
            j += 1;
        } else if kp < kq {
            total += p.mass[i];
            i += 1;
        } else {
            total += q.mass[j];
            j += 1;
        }
    }
    total.min(2.0)
}

/// L1 distance in total-variation units (half the L1 norm).
pub fn as_tv(l1: f64) -> f64 {
    0.5 * l1
}

/// Normalized counts of `samples`.
pub fn empirical_pmf(samples: &[i64]) -> Result<EmpiricalLaw> {
    if samples.is_empty() {
        return Err(Error::domain("empirical pmf of an empty sample"));
    }
    let mut counts = BTreeMap::new();
    for &s in samples {
        *counts.entry(s).or_insert(0usize) += 1;
    }
    let n = samples.len() as f64;
    let (support, mass) = counts.into_iter().map(|(k, c)| (k, c as f64 / n)).unzip();
    Ok(EmpiricalLaw { support, mass, sample_count: Some(samples.len()) })
}

/// Weighted superposition `Σ w_i·p_i`; weights must sum to one.
pub fn mixture_pmf(atoms: &[(EmpiricalLaw, f64)]) -> Result<EmpiricalLaw> {
    if atoms.is_empty() {
        return Err(Error::domain("mixture of zero components"));
    }
    let wsum: f64 = atoms.iter().map(|a| a.1).sum();
    if (wsum - 1.0).abs() > 1e-9 || atoms.iter().any(|a| !(a.1 >= 0.0)) {
        return Err(Error::domain(format!("mixture weights must be nonnegative and sum to 1, got {wsum}")));
    }
    let mut merged = BTreeMap::new();
    for (law, w) in atoms {
        for (k, m) in law.iter() {
            *merged.entry(k).or_insert(0.0) += w * m;
        }
    }
    let (support, mass): (Vec<i64>, Vec<f64>) = merged.into_iter().unzip();
    let total: f64 = mass.iter().sum();
    let mass = mass.into_iter().map(|m| m / total).collect();
    Ok(EmpiricalLaw { support, mass, sample_count: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(pairs: &[(i64, f64)]) -> EmpiricalLaw {
        EmpiricalLaw::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn l1_examples() {
        let p = law(&[(0, 0.5), (1, 0.5)]);
        assert_eq!(pmf_l1(&p, &p), 0.0);
        assert_eq!(pmf_l1(&EmpiricalLaw::point(0), &EmpiricalLaw::point(1)), 2.0);
        assert!((pmf_l1(&p, &law(&[(0, 0.75), (1, 0.25)])) - 0.5).abs() < 1e-15);
        assert_eq!(as_tv(2.0), 1.0);
    }

    #[test]
    fn partial_overlap() {
        let p = law(&[(-2, 0.25), (0, 0.75)]);
        let q = law(&[(0, 0.5), (3, 0.5)]);
        assert!((pmf_l1(&p, &q) - (0.25 + 0.25 + 0.5)).abs() < 1e-15);
        assert_eq!(pmf_l1(&p, &q), pmf_l1(&q, &p));
    }

    #[test]
    fn construction_checks() {
        assert!(EmpiricalLaw::new([(0, 0.5)]).is_err());
        assert!(EmpiricalLaw::new([(0, 1.5), (1, -0.5)]).is_err());
        let merged = EmpiricalLaw::new([(2, 0.25), (1, 0.5), (2, 0.25)]).unwrap();
        assert_eq!(merged.support(), &[1, 2]);
        assert_eq!(merged.get(2), 0.5);
        assert_eq!(merged.get(7), 0.0);
        assert_eq!(EmpiricalLaw::normalized([(0, 2.0), (1, 6.0)]).unwrap().get(1), 0.75);
    }

    #[test]
    fn empirical_examples() {
        let e = empirical_pmf(&[0, 1, 1]).unwrap();
        assert_eq!(e.support(), &[0, 1]);
        assert!((e.get(0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.sample_count(), Some(3));
        assert_eq!(empirical_pmf(&[7]).unwrap(), EmpiricalLaw::point(7).with_sample_count(1));
        assert!(empirical_pmf(&[]).is_err());
        assert_eq!(empirical_pmf(&[1, 0, 1]).unwrap(), e);
    }

    #[test]
    fn mixture_examples() {
        let p = law(&[(0, 0.25), (1, 0.75)]);
        assert_eq!(mixture_pmf(&[(p.clone(), 1.0)]).unwrap(), p);
        let u = mixture_pmf(&[(EmpiricalLaw::point(0), 0.5), (EmpiricalLaw::point(5), 0.5)]).unwrap();
        assert_eq!(u, law(&[(0, 0.5), (5, 0.5)]));
        assert!(mixture_pmf(&[(p.clone(), 0.6)]).is_err());
        assert!(mixture_pmf(&[]).is_err());
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        law(&[(0, 0.5), (2, 0.5)]).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("point,mass"));
        assert_eq!(s.lines().count(), 3);
        assert!(s.contains("2,5.0000000000000000e-1"));
    }
}
