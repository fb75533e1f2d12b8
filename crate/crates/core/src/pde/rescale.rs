//! The scaling `u ↦ s^α u(s^β ·, s ·)` and the self-similar variables
//! `ũ(y, τ) = t^α u(t^β y, t)`, `τ = ln t`.

use super::{Boundary, LogGrid, RadialField};
use crate::error::{Error, Result};
use crate::numerics::interp::UniformCubic;
use crate::params::ParamSet;
use crate::Real;

/// Nodal values of `ũ(·, τ)` on a reference grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledField {
    pub y: Vec<Real>,
    pub u: Vec<Real>,
    pub tau: Real,
}

fn resample(field: &RadialField, radii: impl Iterator<Item = Real>) -> Result<Vec<Real>> {
    let logs: Vec<Real> = field.u.iter().map(|v| v.ln()).collect();
    let table = UniformCubic::new(field.grid.x0(), field.grid.dx(), logs)
        .ok_or_else(|| Error::Resolution("field grid too small to interpolate".into()))?;
    let (lo, hi) = (field.grid.r_in(), field.grid.r_out());
    radii
        .map(|r| {
            // Endpoints can drift by rounding in exp/ln.
            let x = r.ln().clamp(lo.ln(), hi.ln());
            if !(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)) {
                return Err(Error::Range(format!("radius {r:e} outside the field grid [{lo:e}, {hi:e}]")));
            }
            table.eval(x).map(Real::exp).ok_or_else(|| Error::Range(format!("radius {r:e} not interpolable")))
        })
        .collect()
}

/// `w(x, t/s) = s^α u(s^β x, t)` sampled on `grid`.
///
/// The map sends solutions to solutions. Self-similar boundary data are
/// invariant under it; any other rule is frozen at the new end values.
pub fn scale_field(field: &RadialField, p: &ParamSet<Real>, s: Real, grid: LogGrid) -> Result<RadialField> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Range(format!("scale factor {s} must be positive")));
    }
    let (a, b) = (s.powf(p.alpha()), s.powf(p.beta()));
    let radii = grid.radii();
    let u: Vec<Real> = resample(field, radii.iter().map(|&y| b * y))?.into_iter().map(|v| a * v).collect();
    let bc = match &field.bc {
        Boundary::SelfSimilar { .. } => field.bc.clone(),
        _ => Boundary::Fixed { inner: u[0], outer: u[u.len() - 1] },
    };
    RadialField::new(field.n, field.m, grid, u, field.t / s, bc)?.with_origin(field.t_origin / s)
}

/// `ũ(y, τ)` at `τ = ln t` on the radii `y`.
pub fn rescale_field(field: &RadialField, p: &ParamSet<Real>, y: &[Real]) -> Result<RescaledField> {
    let t = field.t;
    if !(t > 0.0) {
        return Err(Error::Range(format!("rescaling needs t > 0, got {t}")));
    }
    let (a, b) = (t.powf(p.alpha()), t.powf(p.beta()));
    let u = resample(field, y.iter().map(|&v| b * v))?.into_iter().map(|v| a * v).collect();
    Ok(RescaledField { y: y.to_vec(), u, tau: t.ln() })
}
