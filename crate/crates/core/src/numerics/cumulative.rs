//! Fourth-order running integrals of uniformly sampled data.

use crate::scalar::Scalar;

/// Integral of the cubic through neighbouring samples over each cell
/// `[s_i, s_{i+1}]`. Falls back to the trapezoid rule below four samples.
pub fn cell_integrals<T: Scalar>(f: &[T], ds: T) -> Vec<T> {
    let n = f.len();
    if n < 2 {
        return Vec::new();
    }
    if n < 4 {
        let half = ds * T::lit(0.5);
        return f.windows(2).map(|w| half * (w[0] + w[1])).collect();
    }
    let c = ds / T::lit(24.0);
    let (k9, k19, k5, k13) = (T::lit(9.0), T::lit(19.0), T::lit(5.0), T::lit(13.0));
    let mut out = Vec::with_capacity(n - 1);
    out.push(c * (k9 * f[0] + k19 * f[1] - k5 * f[2] + f[3]));
    for i in 1..n - 2 {
        out.push(c * (k13 * (f[i] + f[i + 1]) - f[i - 1] - f[i + 2]));
    }
    out.push(c * (k9 * f[n - 1] + k19 * f[n - 2] - k5 * f[n - 3] + f[n - 4]));
    out
}

/// `out[i] = ∫_{s_0}^{s_i} f`.
pub fn cumulative_from_left<T: Scalar>(f: &[T], ds: T) -> Vec<T> {
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(f.len());
    if f.is_empty() {
        return out;
    }
    out.push(acc);
    for c in cell_integrals(f, ds) {
        acc = acc + c;
        out.push(acc);
    }
    out
}

/// `out[i] = ∫_{s_i}^{s_last} f`.
pub fn cumulative_from_right<T: Scalar>(f: &[T], ds: T) -> Vec<T> {
    let cells = cell_integrals(f, ds);
    let mut out = vec![T::zero(); f.len()];
    for i in (0..cells.len()).rev() {
        out[i] = out[i + 1] + cells[i];
    }
    out
}
