//! Five-point finite differences on uniform grids.

use crate::scalar::Scalar;

/// First derivative, fourth order at every node (one-sided at the ends).
/// Needs at least five samples; returns `None` otherwise.
pub fn first_derivative<T: Scalar>(f: &[T], h: T) -> Option<Vec<T>> {
    let n = f.len();
    if n < 5 {
        return None;
    }
    let l = |x: f64| T::lit(x);
    let c = T::one() / (l(12.0) * h);
    let left0 = |g: &dyn Fn(usize) -> T| {
        c * (l(-25.0) * g(0) + l(48.0) * g(1) - l(36.0) * g(2) + l(16.0) * g(3) - l(3.0) * g(4))
    };
    let left1 = |g: &dyn Fn(usize) -> T| {
        c * (l(-3.0) * g(0) - l(10.0) * g(1) + l(18.0) * g(2) - l(6.0) * g(3) + g(4))
    };
    let mut out = vec![T::zero(); n];
    let fwd = |k: usize| f[k];
    let bwd = |k: usize| f[n - 1 - k];
    out[0] = left0(&fwd);
    out[1] = left1(&fwd);
    out[n - 1] = -left0(&bwd);
    out[n - 2] = -left1(&bwd);
    for i in 2..n - 2 {
        out[i] = c * (f[i - 2] - l(8.0) * f[i - 1] + l(8.0) * f[i + 1] - f[i + 2]);
    }
    Some(out)
}

/// Second derivative: fourth order in the interior, third order at the two
/// outermost nodes on each side.
pub fn second_derivative<T: Scalar>(f: &[T], h: T) -> Option<Vec<T>> {
    let n = f.len();
    if n < 5 {
        return None;
    }
    let l = |x: f64| T::lit(x);
    let c = T::one() / (l(12.0) * h * h);
    let left0 = |g: &dyn Fn(usize) -> T| {
        c * (l(35.0) * g(0) - l(104.0) * g(1) + l(114.0) * g(2) - l(56.0) * g(3) + l(11.0) * g(4))
    };
    let left1 = |g: &dyn Fn(usize) -> T| {
        c * (l(11.0) * g(0) - l(20.0) * g(1) + l(6.0) * g(2) + l(4.0) * g(3) - g(4))
    };
    let mut out = vec![T::zero(); n];
    let fwd = |k: usize| f[k];
    let bwd = |k: usize| f[n - 1 - k];
    out[0] = left0(&fwd);
    out[1] = left1(&fwd);
    out[n - 1] = left0(&bwd);
    out[n - 2] = left1(&bwd);
    for i in 2..n - 2 {
        out[i] = c * (l(16.0) * (f[i - 1] + f[i + 1]) - l(30.0) * f[i] - f[i - 2] - f[i + 2]);
    }
    Some(out)
}
