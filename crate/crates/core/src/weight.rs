//! Radial superharmonic weight `φ_μ` with `φ_μ ~ a₄ r^{-μ}` at infinity.
//!
//! `φ_μ(r) = 1 − a₄ ∫₀^r s^{1-n} ∫₀^s ρ^{n-1} η₁(ρ) dρ ds`, where `η₁`
//! vanishes on `[0, 1]`, equals `μ(n−2−μ) r^{-μ-2}` on `[2, ∞)`, and is
//! bridged smoothly in between. Hence `Δφ_μ = −a₄η₁ ≤ 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::interp::Hermite;
use crate::numerics::{quad_adaptive, Tolerances};
use crate::scalar::Scalar;

/// Number of table cells on `[1, 2]`.
pub const TABLE_CELLS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpSpec<T> {
    pub mu: T,
    pub n: usize,
}

impl<T: Scalar> BumpSpec<T> {
    pub fn new(mu: T, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Range(format!("dimension n = {n} must be at least 3")));
        }
        let top = T::from_count(n - 2);
        if !(mu > T::zero() && mu < top) {
            return Err(Error::Range(format!("mu = {mu} outside (0, {top})")));
        }
        Ok(Self { mu, n })
    }

    /// The source term `η₁(r)`.
    pub fn eta1(&self, r: T) -> T {
        let one = T::one();
        if r <= one {
            return T::zero();
        }
        let tail = self.mu * (T::from_count(self.n - 2) - self.mu) * r.powf(-self.mu - T::lit(2.0));
        if r >= T::lit(2.0) {
            tail
        } else {
            tail * smooth_ramp(r - one)
        }
    }
}

/// C^∞ ramp on `[0, 1]`: 0 at the left end, 1 at the right, all derivatives
/// vanishing at both ends.
pub fn smooth_ramp<T: Scalar>(t: T) -> T {
    let psi = |x: T| if x > T::zero() { (-x.recip()).exp() } else { T::zero() };
    let a = psi(t);
    let b = psi(T::one() - t);
    if a + b == T::zero() {
        return T::zero();
    }
    a / (a + b)
}

/// Which part of `u − v` a weighted distance measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum L1Mode {
    Abs,
    PositivePart,
}

#[derive(Debug, Clone)]
pub struct WeightFunction<T> {
    spec: BumpSpec<T>,
    a4: T,
    a5: T,
    /// Coefficient `c = (a₅ − μ2^{n−2−μ})/(n−2)` of the `r^{2−n}` term for `r > 2`.
    c: T,
    r0: T,
    table: Hermite<T>,
}

/// Builds `φ_μ`, tabulating it on `[1, 2]`.
///
/// `a₄` splits its defining integral at `s = 2`; the part beyond 2 is the
/// closed form `k₀`.
pub fn build_weight<T: Scalar>(spec: BumpSpec<T>, quad_tol: T) -> Result<WeightFunction<T>> {
    let spec = BumpSpec::new(spec.mu, spec.n)?;
    if !(quad_tol > T::zero()) {
        return Err(Error::Range(format!("quadrature tolerance {quad_tol} must be positive")));
    }
    let (one, two) = (T::one(), T::lit(2.0));
    let nf = T::from_count(spec.n);
    let n2 = nf - two;
    let mu = spec.mu;
    let cells = TABLE_CELLS;
    let dr = one / T::from_count(cells);
    let tol = Tolerances::new(quad_tol / T::from_count(cells), quad_tol, 10_000)?;

    // I(r) = ∫₁^r ρ^{n-1}η₁ and L(r) = ∫₁^r ρη₁ at the table nodes.
    let mut r = Vec::with_capacity(cells + 1);
    let mut i_acc = vec![T::zero()];
    let mut l_acc = vec![T::zero()];
    r.push(one);
    for k in 0..cells {
        let lo = one + dr * T::from_count(k);
        let hi = one + dr * T::from_count(k + 1);
        let di = quad_adaptive(|x: T| x.powi(spec.n as i32 - 1) * spec.eta1(x), lo, hi, &tol)?;
        let dl = quad_adaptive(|x: T| x * spec.eta1(x), lo, hi, &tol)?;
        i_acc.push(i_acc[k] + di.value);
        l_acc.push(l_acc[k] + dl.value);
        r.push(hi);
    }
    let a5 = i_acc[cells];
    let l2 = l_acc[cells];
    // ∫₁^r s^{1-n} I(s) ds = (L(r) − r^{2-n} I(r))/(n−2), by parts.
    let j2 = (l2 - two.powf(two - nf) * a5) / n2;
    let k0 = (two.powf(two - nf) * a5 + (n2 - mu) * two.powf(-mu)) / n2;
    let a4 = one / (j2 + k0);

    let phi: Vec<T> = r
        .iter()
        .zip(i_acc.iter().zip(&l_acc))
        .map(|(&x, (&ii, &ll))| one - a4 * (ll - x.powf(two - nf) * ii) / n2)
        .collect();
    let dphi: Vec<T> = r
        .iter()
        .zip(&i_acc)
        .map(|(&x, &ii)| -a4 * x.powf(one - nf) * ii)
        .collect();
    let table = Hermite::new(r, phi, dphi).ok_or_else(|| Error::Internal("weight table nodes not increasing".into()))?;
    let c = (a5 - mu * two.powf(n2 - mu)) / n2;
    let r0 = bound_radius(c, mu, n2);
    let w = WeightFunction { spec, a4, a5, c, r0, table };
    w.check_shape()?;
    Ok(w)
}

/// Smallest radius (at least 2) beyond which
/// `a₄r^{-μ}/2 < φ < 2a₄r^{-μ}` and `−2μa₄r^{-μ-1} < φ′ < −μa₄r^{-μ-1}/2`.
fn bound_radius<T: Scalar>(c: T, mu: T, n2: T) -> T {
    let two = T::lit(2.0);
    // Both conditions bound c·x from above/below with x = r^{μ+2−n} decreasing.
    let x_max = if c > T::zero() {
        (T::one() / c).min(mu / (n2 * c))
    } else if c < T::zero() {
        (T::one() / (two * c.abs())).min(mu / (two * n2 * c.abs()))
    } else {
        T::infinity()
    };
    let r_star = x_max.powf(-T::one() / (n2 - mu));
    if r_star.is_finite() && r_star >= two {
        r_star * (T::one() + T::lit(1e-9))
    } else {
        two
    }
}

impl<T: Scalar> WeightFunction<T> {
    pub fn spec(&self) -> BumpSpec<T> {
        self.spec
    }
    pub fn a4(&self) -> T {
        self.a4
    }
    pub fn a5(&self) -> T {
        self.a5
    }
    /// Radius beyond which both two-sided power-law bounds hold.
    pub fn r0(&self) -> T {
        self.r0
    }

    /// `(φ(r), φ′(r))` for `r ≥ 0`.
    pub fn eval(&self, r: T) -> (T, T) {
        let (one, two) = (T::one(), T::lit(2.0));
        if r <= one {
            return (one, T::zero());
        }
        if r <= two {
            return self.table.eval(r).unwrap_or_else(|| self.closed_form(two));
        }
        self.closed_form(r)
    }

    pub fn phi(&self, r: T) -> T {
        self.eval(r).0
    }

    /// Exact expression of `(φ, φ′)` valid for `r ≥ 2`.
    pub fn closed_form(&self, r: T) -> (T, T) {
        let nf = T::from_count(self.spec.n);
        let two = T::lit(2.0);
        let mu = self.spec.mu;
        let phi = self.a4 * (self.c * r.powf(two - nf) + r.powf(-mu));
        let dphi = -self.a4 * ((nf - two) * self.c * r.powf(T::one() - nf) + mu * r.powf(-mu - T::one()));
        (phi, dphi)
    }

    /// Largest centred-difference radial Laplacian `φ'' + (n−1)φ′/r` over a
    /// uniform sampling of `[h, r_max]` with spacing `h`.
    pub fn max_discrete_laplacian(&self, h: T, r_max: T) -> T {
        let nf = T::from_count(self.spec.n);
        let mut worst = T::neg_infinity();
        let mut r = h + h;
        while r + h <= r_max {
            let (pm, p0, pp) = (self.phi(r - h), self.phi(r), self.phi(r + h));
            let lap = (pp - T::lit(2.0) * p0 + pm) / (h * h) + (nf - T::one()) / r * (pp - pm) / (T::lit(2.0) * h);
            worst = worst.max(lap);
            r = r + h;
        }
        worst
    }

    fn check_shape(&self) -> Result<()> {
        let ok = self.a4 > T::zero() && self.a4.is_finite() && self.a5 > T::zero();
        if !ok {
            return Err(Error::Internal(format!("weight normalisation a4 = {}, a5 = {}", self.a4, self.a5)));
        }
        let mut prev = T::one();
        for k in 1..=512 {
            let r = T::lit(1.0 + k as f64 / 128.0);
            let (p, dp) = self.eval(r);
            // Near r = 1 the decrease is below double precision.
            let strict = r >= T::lit(1.25);
            let decreasing = if strict { p < prev && dp < T::zero() } else { p <= prev && dp <= T::zero() };
            if !(p > T::zero() && p <= T::one() && decreasing) {
                return Err(Error::Internal(format!("weight not positive decreasing at r = {r}")));
            }
            prev = p;
        }
        Ok(())
    }
}

/// Weighted distance `ω_{n−1}∫|u−v|φ r^{n−1} dr` (or with `(u−v)₊`) for
/// nodal values on a radial grid, by the trapezoid rule in `x = ln r`.
pub fn weighted_l1<T: Scalar>(w: &WeightFunction<T>, r: &[T], u: &[T], v: &[T], mode: L1Mode) -> Result<T> {
    if r.len() != u.len() || r.len() != v.len() {
        return Err(Error::GridMismatch(format!(
            "lengths differ: grid {}, fields {} and {}",
            r.len(),
            u.len(),
            v.len()
        )));
    }
    if r.iter().any(|&x| !(x > T::zero())) || r.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::GridMismatch("radial grid must be positive and increasing".into()));
    }
    let n = w.spec.n;
    let g: Vec<T> = r
        .iter()
        .zip(u.iter().zip(v))
        .map(|(&x, (&a, &b))| {
            let d = match mode {
                L1Mode::Abs => (a - b).abs(),
                L1Mode::PositivePart => (a - b).max(T::zero()),
            };
            d * w.phi(x) * x.powi(n as i32)
        })
        .collect();
    let half = T::lit(0.5);
    let sum: T = (1..r.len()).map(|i| half * (g[i] + g[i - 1]) * (r[i] / r[i - 1]).ln()).sum();
    Ok(sphere_area::<T>(n) * sum)
}

/// Surface area `2π^{n/2}/Γ(n/2)` of the unit sphere in `ℝⁿ`.
pub fn sphere_area<T: Scalar>(n: usize) -> T {
    // Γ(n/2) by the recurrence from Γ(1) = 1 or Γ(1/2) = √π.
    let pi = T::PI();
    let (mut gamma, mut k) = if n % 2 == 0 { (T::one(), 2) } else { (pi.sqrt(), 1) };
    while k + 2 <= n {
        gamma = gamma * T::from_count(k) / T::lit(2.0);
        k += 2;
    }
    T::lit(2.0) * pi.powf(T::from_count(n) / T::lit(2.0)) / gamma
}
