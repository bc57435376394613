//! Asymptotic `(n, rn)`-cloning of classical probability families.
//!
//! The crate is organised bottom-up:
//!
//! * [`gaussian`]: Gaussian-shift laws, the chi-square CDF and the L1 distances
//!   that define the optimal cloning loss `‖N(0, r·1) − N(0, 1)‖₁`.
//! * [`amplifier`]: the scale amplifier `x ↦ √r·x` and the rotation that turns
//!   an amplified observation into `r` Gaussian clones.
//! * [`families`]: Bernoulli, Poisson and Gaussian-location families with
//!   scores, Fisher information and exact conditional resampling.
//! * [`lan`]: score processes, log-likelihood-ratio expansion diagnostics and
//!   one-dimensional quantile couplings.
//! * [`cloner`]: the three-step `(n, rn)` cloner and its exact count-law loss.
//! * [`deficiency`]: a linear-programming oracle for the minimax L1 deviation
//!   between two finite experiments.
//! * [`tv`]: lattice laws and L1 distances between them.
//! * [`harness`]: config-driven experiments and CSV/JSON reports.
//!
//! Distances are always reported as L1 norms (twice the total variation).

pub mod amplifier;
pub mod cloner;
pub mod deficiency;
pub mod error;
pub mod families;
pub mod gaussian;
pub mod harness;
pub mod lan;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod tv;

pub use error::{Error, Result};
