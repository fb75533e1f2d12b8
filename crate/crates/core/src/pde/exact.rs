//! Closed-form solutions used as boundary data and as references.

use std::sync::Arc;

use serde::Serialize;

use super::{Boundary, LogGrid, RadialField};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::Real;

/// Barenblatt solution with extinction time `T`:
///
/// `B_k(r, t) = (T−t)^{α₁}(C*/(k² + ((T−t)^{β₁}r)²))^{1/(1−m)}`
///
/// with `C* = 2(n−2−nm)/(1−m)`, `β₁ = 1/(n−2−nm)`, `α₁ = (2β₁+1)/(1−m)`.
/// Requires `0 < m < (n−2)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Barenblatt {
    pub n: usize,
    pub m: Real,
    pub k: Real,
    pub extinction: Real,
}

impl Barenblatt {
    pub fn new(n: usize, m: Real, k: Real, extinction: Real) -> Result<Self> {
        let nf = n as Real;
        if n < 3 || !(m > 0.0 && m < (nf - 2.0) / nf) {
            return Err(Error::Range(format!("Barenblatt solution needs n ≥ 3 and 0 < m < (n-2)/n, got n = {n}, m = {m}")));
        }
        if !(k > 0.0 && extinction.is_finite()) {
            return Err(Error::Range(format!("k = {k} must be positive")));
        }
        Ok(Self { n, m, k, extinction })
    }

    fn exponents(&self) -> (Real, Real, Real) {
        let d = self.n as Real - 2.0 - self.n as Real * self.m;
        let beta1 = 1.0 / d;
        let alpha1 = (2.0 * beta1 + 1.0) / (1.0 - self.m);
        (2.0 * d / (1.0 - self.m), alpha1, beta1)
    }

    /// `B_k(r, t)`; NaN at or after the extinction time.
    pub fn value(&self, r: Real, t: Real) -> Real {
        let s = self.extinction - t;
        if !(s > 0.0) {
            return Real::NAN;
        }
        let (c, alpha1, beta1) = self.exponents();
        let y = s.powf(beta1) * r;
        s.powf(alpha1) * (c / (self.k * self.k + y * y)).powf(1.0 / (1.0 - self.m))
    }

    /// `B_k(·, t)` on `grid`, with `t_origin = min(t, 0)`.
    pub fn field(&self, grid: LogGrid, t: Real) -> Result<RadialField> {
        let u = grid.radii().iter().map(|&r| self.value(r, t)).collect();
        RadialField::new(self.n, self.m, grid, u, t, Boundary::Barenblatt(*self))?.with_origin(t.min(0.0))
    }
}

/// `V_λ(r, t) = t^{−α} f_λ(t^{−β} r)` with `f_λ(ρ) = λ^{2/(1−m)} f(λρ)`.
pub fn self_similar_value(profile: &Profile, lambda: Real, r: Real, t: Real) -> Result<Real> {
    if !(t > 0.0 && lambda > 0.0 && r > 0.0) {
        return Err(Error::Range(format!("self-similar value needs positive r, t, λ; got r = {r}, t = {t}, λ = {lambda}")));
    }
    let p = profile.params();
    let arg = lambda * t.powf(-p.beta()) * r;
    let f = profile
        .f_at(arg)
        .ok_or_else(|| Error::Range(format!("scaled radius {arg:e} is below the profile table (starts at {:e})", profile.s_min().exp())))?;
    Ok(t.powf(-p.alpha()) * lambda.powf(p.scaling_exponent()) * f)
}

/// `V_λ(·, t)` on `grid`, with Dirichlet traces taken from the same formula.
pub fn make_self_similar_field(profile: Arc<Profile>, lambda: Real, t: Real, grid: LogGrid) -> Result<RadialField> {
    let u = grid
        .radii()
        .iter()
        .map(|&r| self_similar_value(&profile, lambda, r, t))
        .collect::<Result<Vec<_>>>()?;
    let p = *profile.params();
    RadialField::new(p.n(), p.m(), grid, u, t, Boundary::SelfSimilar { profile, lambda })?.with_origin(0.0)
}
