//! Exact moments, cumulants, and moment generating functions of lacunary
//! trigonometric sums `S_n^f = sum_{j=1}^n f(a_j U)`, together with the
//! verification machinery around them: correlation graphs and their cumulant
//! bounds, moderate-deviation scaling schedules with Monte Carlo tail
//! estimates, and mod-Gaussian residuals.
//!
//! Everything moment-shaped is computed in exact rational arithmetic on top
//! of weighted Diophantine solution counting; floats appear only at
//! evaluation and reporting boundaries, and every truncation carries a
//! certified error bound.

pub mod corrgraph;
pub mod cumulants;
pub mod deviation;
pub mod diophantine;
mod error;
pub mod exact;
pub mod mgf;
pub mod moments;
pub(crate) mod sampling;
pub mod sequences;
pub mod trigpoly;

pub use error::{Error, Result};
