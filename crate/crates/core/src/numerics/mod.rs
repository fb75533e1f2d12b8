//! Numerical kernels shared by the profile, weight and PDE code.
//!
//! Everything here is generic over [`Scalar`] and free of global state.

pub mod cumulative;
pub mod diff;
pub mod interp;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod richardson;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use ode::{integrate_ode, integrate_ode_at, Samples, Trajectory};
pub use quad::{quad_adaptive, quad_semi_infinite, QuadResult, TailModel};
pub use richardson::{richardson_table, Richardson};

/// Error-control settings for the adaptive kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_steps: usize,
}

impl<T: Scalar> Tolerances<T> {
    pub fn new(abs_tol: T, rel_tol: T, max_steps: usize) -> Result<Self> {
        if !(abs_tol > T::zero() && rel_tol > T::zero()) {
            return Err(Error::Range(format!(
                "tolerances must be positive (abs {abs_tol}, rel {rel_tol})"
            )));
        }
        if max_steps == 0 {
            return Err(Error::Range("max_steps must be at least 1".into()));
        }
        Ok(Self { abs_tol, rel_tol, max_steps })
    }

    /// Same absolute and relative tolerance.
    pub fn uniform(tol: T, max_steps: usize) -> Result<Self> {
        Self::new(tol, tol, max_steps)
    }

    pub fn halved(&self) -> Self {
        let two = T::lit(2.0);
        Self { abs_tol: self.abs_tol / two, rel_tol: self.rel_tol / two, max_steps: self.max_steps }
    }
}

impl Default for Tolerances<f64> {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_steps: 5_000_000 }
    }
}
