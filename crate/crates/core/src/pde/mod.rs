//! Radial solver for `u_t = Δ(u^m/m)` on an annulus `r_in ≤ |x| ≤ r_out`,
//! with the rescaling to self-similar variables and the experiments built
//! on them.
//!
//! The grid is uniform in `x = ln r`, where the radial operator reads
//! `Δ(u^m/m) = r^{−n}(r^{n−2}(u^m/m)_x)_x`.

mod exact;
mod experiments;
mod rescale;
mod solver;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::Real;

pub use exact::{make_self_similar_field, self_similar_value, Barenblatt};
pub use experiments::{
    contraction_experiment, convergence_experiment, log_bump, random_sandwiched_pair, ContractionReport, ORDER_SLACK,
    ConvergenceReport, ConvergenceSetup, PerturbationSpec, SandwichFamily, SANDWICH_SLACK,
};
pub use rescale::{rescale_field, scale_field, RescaledField};
pub use solver::{evolve, evolve_lockstep, evolve_sampled, step, EvolveConfig, EvolveStats, StepOutcome};

/// Nodes `r_i = r_in·e^{iΔx}`, `i = 0..=cells`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogGrid {
    r_in: Real,
    r_out: Real,
    cells: usize,
}

impl LogGrid {
    pub fn new(r_in: Real, r_out: Real, cells: usize) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in && r_out.is_finite()) {
            return Err(Error::Range(format!("invalid annulus [{r_in}, {r_out}]")));
        }
        if cells < 4 {
            return Err(Error::Range(format!("need at least 4 cells, got {cells}")));
        }
        Ok(Self { r_in, r_out, cells })
    }

    pub fn r_in(&self) -> Real {
        self.r_in
    }
    pub fn r_out(&self) -> Real {
        self.r_out
    }
    pub fn cells(&self) -> usize {
        self.cells
    }
    pub fn len(&self) -> usize {
        self.cells + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> Real {
        (self.r_out / self.r_in).ln() / self.cells as Real
    }
    pub fn x0(&self) -> Real {
        self.r_in.ln()
    }
    pub fn x(&self, i: usize) -> Real {
        self.x0() + self.dx() * i as Real
    }
    pub fn r(&self, i: usize) -> Real {
        if i == self.cells {
            self.r_out
        } else {
            self.x(i).exp()
        }
    }
    pub fn radii(&self) -> Vec<Real> {
        (0..self.len()).map(|i| self.r(i)).collect()
    }
}

/// Dirichlet data at `r_in` and `r_out`.
#[derive(Debug, Clone)]
pub enum Boundary {
    /// Time-independent values.
    Fixed { inner: Real, outer: Real },
    /// Traces of `V_λ(r, t) = t^{−α} f_λ(t^{−β} r)`.
    SelfSimilar { profile: Arc<Profile>, lambda: Real },
    /// Traces of an exact Barenblatt solution.
    Barenblatt(Barenblatt),
}

impl Boundary {
    /// Dirichlet values at `r_in` and `r_out` at time `t`.
    pub fn traces(&self, grid: &LogGrid, t: Real) -> Result<(Real, Real)> {
        let (a, b) = match self {
            Boundary::Fixed { inner, outer } => (*inner, *outer),
            Boundary::SelfSimilar { profile, lambda } => (
                self_similar_value(profile, *lambda, grid.r_in, t)?,
                self_similar_value(profile, *lambda, grid.r_out, t)?,
            ),
            Boundary::Barenblatt(b) => (b.value(grid.r_in, t), b.value(grid.r_out, t)),
        };
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Positivity(format!("boundary values {a}, {b} at t = {t}")));
        }
        Ok((a, b))
    }
}

/// Radially symmetric state of `u_t = Δ(u^m/m)` in `ℝⁿ`: positive nodal
/// values on a [`LogGrid`].
#[derive(Debug, Clone)]
pub struct RadialField {
    pub n: usize,
    pub m: Real,
    pub grid: LogGrid,
    pub u: Vec<Real>,
    pub t: Real,
    /// Time at which the data count as initial data. The one-sided bound
    /// `u_t ≤ u/((1−m)(t − t_origin))` is checked against it.
    pub t_origin: Real,
    pub bc: Boundary,
}

impl RadialField {
    /// A field whose data are imposed at `t` (so `t_origin = t`).
    pub fn new(n: usize, m: Real, grid: LogGrid, u: Vec<Real>, t: Real, bc: Boundary) -> Result<Self> {
        if n < 1 || !(m > 0.0 && m < 1.0) {
            return Err(Error::Range(format!("need n ≥ 1 and 0 < m < 1, got n = {n}, m = {m}")));
        }
        if u.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", u.len(), grid.len())));
        }
        if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Positivity(format!("u[{i}] = {v}")));
        }
        if !t.is_finite() {
            return Err(Error::Range(format!("time {t} is not finite")));
        }
        Ok(Self { n, m, grid, u, t, t_origin: t, bc })
    }

    pub fn with_origin(mut self, t_origin: Real) -> Result<Self> {
        if !(t_origin <= self.t) {
            return Err(Error::Range(format!("origin {t_origin} is after the current time {}", self.t)));
        }
        self.t_origin = t_origin;
        Ok(self)
    }

    pub fn radii(&self) -> Vec<Real> {
        self.grid.radii()
    }
}
