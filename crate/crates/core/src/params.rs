//! Admissible parameters and the closed-form constants derived from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default relative margin of `b1` above `b0`.
pub const DEFAULT_B1_MARGIN: f64 = 0.05;

/// Problem parameters `(n, m, γ, ρ₁)` with the self-similar exponents.
///
/// Construct through [`ParamSet::new`]; every instance is admissible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSet<T> {
    n: usize,
    m: T,
    gamma: T,
    rho1: T,
    alpha: T,
    beta: T,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new(n: usize, m: T, gamma: T, rho1: T) -> Result<Self> {
        let (alpha, beta) = derive_exponents(n, m, gamma, rho1)?;
        Ok(Self { n, m, gamma, rho1, alpha, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    /// Dimension as a scalar.
    pub fn nf(&self) -> T {
        T::from_count(self.n)
    }
    pub fn m(&self) -> T {
        self.m
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }
    pub fn rho1(&self) -> T {
        self.rho1
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    /// α′ = −α > 0.
    pub fn alpha_p(&self) -> T {
        -self.alpha
    }
    /// β′ = −β > 0.
    pub fn beta_p(&self) -> T {
        -self.beta
    }

    /// Far-field decay exponent `(n-2)/m`.
    pub fn far_exponent(&self) -> T {
        (self.nf() - T::lit(2.0)) / self.m
    }

    /// Scaling exponent `2/(1-m)` of the profile family.
    pub fn scaling_exponent(&self) -> T {
        T::lit(2.0) / (T::one() - self.m)
    }

    /// Whether `n ≤ γ < (n-2)/m`, the regime of the large-time convergence result.
    pub fn strict_regime(&self) -> bool {
        self.nf() <= self.gamma && self.gamma < self.far_exponent()
    }
}

/// Returns `(α, β)` with `β = ρ₁/(2 − γ(1−m))` and `α = (2β − ρ₁)/(1−m)`.
pub fn derive_exponents<T: Scalar>(n: usize, m: T, gamma: T, rho1: T) -> Result<(T, T)> {
    let two = T::lit(2.0);
    if n < 3 {
        return Err(Error::Range(format!("dimension n = {n} must be at least 3")));
    }
    let nf = T::from_count(n);
    if !(m > T::zero() && m < (nf - two) / nf) {
        return Err(Error::Range(format!("m = {m} outside (0, (n-2)/n) for n = {n}")));
    }
    if !(rho1 > T::zero() && rho1.is_finite()) {
        return Err(Error::Range(format!("rho1 = {rho1} must be positive")));
    }
    if !gamma.is_finite() {
        return Err(Error::Range(format!("gamma = {gamma} is not finite")));
    }
    let one_m = T::one() - m;
    let denom = two - gamma * one_m;
    if denom.abs() <= T::lit(8.0) * T::epsilon() * (two + gamma.abs() * one_m) {
        return Err(Error::Degenerate(format!("gamma = {gamma} equals 2/(1-m)")));
    }
    let far = (nf - two) / m;
    if !(gamma > two / one_m && gamma < far) {
        return Err(Error::Range(format!("gamma = {gamma} outside (2/(1-m), (n-2)/m) = ({}, {far})", two / one_m)));
    }
    let beta = rho1 / denom;
    let alpha = (two * beta - rho1) / one_m;
    Ok((alpha, beta))
}

/// Constants of the tail fixed-point construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FPConstants<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub c5: T,
    pub eps1: T,
    pub b0: T,
    pub b1: T,
    pub eta_inf: T,
}

/// Derives `C₁…C₅`, `ε₁`, `b₀` and `b₁ = b₀(1 + margin)`.
///
/// `C₅` is the smallest value with `1 − exp(−(C₃/C₂)x) ≤ C₅x`, namely `C₃/C₂`.
pub fn derive_fp_constants<T: Scalar>(p: &ParamSet<T>, eta_inf: T, margin: T) -> Result<FPConstants<T>> {
    if !(eta_inf > T::zero() && eta_inf.is_finite()) {
        return Err(Error::Range(format!("eta_inf = {eta_inf} must be positive")));
    }
    if !(margin > T::zero() && margin.is_finite()) {
        return Err(Error::Range(format!("b1 margin {margin} must be positive")));
    }
    let (one, two) = (T::one(), T::lit(2.0));
    let m = p.m();
    let bp = p.beta_p();
    let c1 = p.far_exponent() - p.gamma();
    let c2 = p.rho1() / bp + (one - m) * c1;
    let c3 = (bp * c1 * eta_inf.powf(one - m) + m) / c2;
    let two_m = two.powf(m);
    let eta_m = eta_inf.powf(m);
    let c4 = (two * c3 / c2)
        .max(two_m * bp * c1 / (eta_m * c2))
        .max(two_m * bp / (eta_m * c2 * c2) * (bp * c1 * eta_inf.powf(one - m) + c3 * c3));
    let eps1 = T::lit(0.5) * one.min(eta_inf);
    let c5 = c3 / c2;
    let b0 = T::lit(4.0) / c2
        * one
            .max((T::lit(15.0) * c4).ln())
            .max(((T::lit(10.0) * eta_inf + c3 + bp * eta_inf.powf(one - m)) / c2).ln())
            .max(((c3 + c5 * eta_inf) / eps1).ln());
    let b1 = b0 * (one + margin);
    if !(c1 > T::zero() && c2 > T::zero() && b0.is_finite()) {
        return Err(Error::Internal(format!("contraction constants not positive: C1 = {c1}, C2 = {c2}")));
    }
    Ok(FPConstants { c1, c2, c3, c4, c5, eps1, b0, b1, eta_inf })
}

/// Coefficients of the origin expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionConstants<T> {
    pub a1: T,
    pub a2: T,
    pub a3: T,
}

pub fn derive_expansion_constants<T: Scalar>(p: &ParamSet<T>) -> Result<ExpansionConstants<T>> {
    let (a, b, r, m) = (p.alpha(), p.beta(), p.rho1(), p.m());
    let n2 = p.nf() - T::lit(2.0);
    let a1 = (T::lit(2.0) * m * a - n2 * b + r) / r;
    let a2 = -b * b / r;
    let a3 = (a * b * n2 - m * a * a) / (r * r);
    if !(a2 < T::zero()) || !(a3 > T::zero()) {
        return Err(Error::Internal(format!("expansion constants have wrong signs: a2 = {a2}, a3 = {a3}")));
    }
    Ok(ExpansionConstants { a1, a2, a3 })
}
