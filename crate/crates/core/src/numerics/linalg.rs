//! Small dense and banded linear solves.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves a tridiagonal system by the Thomas algorithm.
///
/// `sub[i]` multiplies `x[i-1]` in row `i` (`sub[0]` unused) and `sup[i]`
/// multiplies `x[i+1]` (`sup[n-1]` unused).
pub fn solve_tridiagonal<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Internal("tridiagonal bands have inconsistent lengths".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut piv = diag[0];
    for i in 0..n {
        if i > 0 {
            piv = diag[i] - sub[i] * c[i - 1];
        }
        if piv == T::zero() || !piv.is_finite() {
            return Err(Error::Internal(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c[i] = sup[i] / piv;
        d[i] = if i == 0 { rhs[0] / piv } else { (rhs[i] - sub[i] * d[i - 1]) / piv };
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] = x[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Least-squares polynomial fit; returns coefficients in increasing degree
/// for the variable `x` itself.
///
/// The abscissae are mapped to `[-1, 1]` and the system is solved by
/// Householder QR, so narrow windows far from the origin stay well posed.
pub fn polyfit<T: Scalar>(x: &[T], y: &[T], degree: usize) -> Result<Vec<T>> {
    let cols = degree + 1;
    let rows = x.len();
    if rows != y.len() || rows < cols {
        return Err(Error::Internal(format!("polyfit needs at least {cols} paired samples")));
    }
    let lo = x.iter().copied().fold(T::infinity(), T::min);
    let hi = x.iter().copied().fold(T::neg_infinity(), T::max);
    let two = T::lit(2.0);
    let center = (lo + hi) / two;
    let half = (hi - lo) / two;
    if !(half > T::zero()) {
        return Err(Error::Internal("polyfit abscissae are all equal".into()));
    }
    // Column-major Vandermonde in the scaled variable.
    let mut a = vec![T::zero(); rows * cols];
    for (i, &xi) in x.iter().enumerate() {
        let t = (xi - center) / half;
        let mut p = T::one();
        for j in 0..cols {
            a[j * rows + i] = p;
            p = p * t;
        }
    }
    let mut b = y.to_vec();
    for k in 0..cols {
        let norm = (k..rows).map(|i| a[k * rows + i].powi(2)).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(Error::Internal("rank-deficient polyfit".into()));
        }
        let alpha = if a[k * rows + k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..rows).map(|i| a[k * rows + i]).collect();
        v[0] = v[0] - alpha;
        let vn = v.iter().map(|&e| e * e).sum::<T>();
        if vn == T::zero() {
            continue;
        }
        for j in k..cols {
            let dot = (k..rows).map(|i| v[i - k] * a[j * rows + i]).sum::<T>();
            let f = two * dot / vn;
            for i in k..rows {
                a[j * rows + i] = a[j * rows + i] - f * v[i - k];
            }
        }
        let dot = (k..rows).map(|i| v[i - k] * b[i]).sum::<T>();
        let f = two * dot / vn;
        for i in k..rows {
            b[i] = b[i] - f * v[i - k];
        }
    }
    let mut c = vec![T::zero(); cols];
    for k in (0..cols).rev() {
        let s = ((k + 1)..cols).map(|j| a[j * rows + k] * c[j]).sum::<T>();
        c[k] = (b[k] - s) / a[k * rows + k];
    }
    // Expand p(t) with t = (x - center)/half back into powers of x.
    let mut out = vec![T::zero(); cols];
    let mut basis = vec![T::one()];
    for (j, &cj) in c.iter().enumerate() {
        if j > 0 {
            let mut next = vec![T::zero(); basis.len() + 1];
            for (i, &bi) in basis.iter().enumerate() {
                next[i + 1] = next[i + 1] + bi / half;
                next[i] = next[i] - bi * center / half;
            }
            basis = next;
        }
        for (i, &bi) in basis.iter().enumerate() {
            out[i] = out[i] + cj * bi;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_direct() {
        let sub = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [-1.0, -1.0, -1.0, 0.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut v = diag[i] * x_true[i];
                if i > 0 {
                    v += sub[i] * x_true[i - 1];
                }
                if i < 3 {
                    v += sup[i] * x_true[i + 1];
                }
                v
            })
            .collect();
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..4 {
            assert!((x[i] - x_true[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn polyfit_recovers_quadratic_on_narrow_window() {
        let x: Vec<f64> = (0..30).map(|i| 1e-3 * (1.0 + 3.0 * i as f64 / 29.0)).collect();
        let y: Vec<f64> = x.iter().map(|&t| 2.0 - 0.8 * t + 0.3 * t * t).collect();
        let c = polyfit(&x, &y, 2).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12);
        assert!((c[1] + 0.8).abs() < 1e-9);
        assert!((c[2] - 0.3).abs() < 1e-5);
    }
}
