//! Interpolation on sampled data.

use crate::scalar::Scalar;

/// Piecewise cubic Hermite interpolant through values and slopes.
#[derive(Debug, Clone)]
pub struct Hermite<T> {
    x: Vec<T>,
    y: Vec<T>,
    dy: Vec<T>,
}

impl<T: Scalar> Hermite<T> {
    /// `x` must be strictly increasing and all three slices equally long
    /// (at least two nodes).
    pub fn new(x: Vec<T>, y: Vec<T>, dy: Vec<T>) -> Option<Self> {
        let ok = x.len() >= 2
            && x.len() == y.len()
            && x.len() == dy.len()
            && x.windows(2).all(|w| w[1] > w[0]);
        ok.then_some(Self { x, y, dy })
    }

    pub fn domain(&self) -> (T, T) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value and first derivative; `None` outside the node range.
    pub fn eval(&self, t: T) -> Option<(T, T)> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = self.x.partition_point(|&v| v <= t).clamp(1, self.x.len() - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = two * u3 - three * u2 + one;
        let h10 = u3 - two * u2 + u;
        let h01 = three * u2 - two * u3;
        let h11 = u3 - u2;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.dy[i], self.dy[i + 1]);
        let value = h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1;
        let six = T::lit(6.0);
        let g00 = six * u2 - six * u;
        let g10 = three * u2 - T::lit(4.0) * u + one;
        let g11 = three * u2 - two * u;
        let slope = (g00 * (y0 - y1)) / h + g10 * d0 + g11 * d1;
        Some((value, slope))
    }
}

/// Four-point Lagrange interpolation of samples on a uniform grid.
#[derive(Debug, Clone)]
pub struct UniformCubic<T> {
    x0: T,
    dx: T,
    y: Vec<T>,
}

impl<T: Scalar> UniformCubic<T> {
    /// Needs at least four samples and a positive spacing.
    pub fn new(x0: T, dx: T, y: Vec<T>) -> Option<Self> {
        (y.len() >= 4 && dx > T::zero()).then_some(Self { x0, dx, y })
    }

    pub fn domain(&self) -> (T, T) {
        (self.x0, self.x0 + self.dx * T::from_count(self.y.len() - 1))
    }

    pub fn eval(&self, t: T) -> Option<T> {
        let (lo, hi) = self.domain();
        let slack = self.dx * T::lit(1e-9);
        if !(t >= lo - slack && t <= hi + slack) {
            return None;
        }
        let n = self.y.len();
        let u = (t - self.x0) / self.dx;
        let cell = u.floor().to_usize().unwrap_or(0).min(n - 2);
        let start = cell.saturating_sub(1).min(n - 4);
        let v = u - T::from_count(start);
        let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
        let six = T::lit(6.0);
        let w0 = -(v - one) * (v - two) * (v - three) / six;
        let w1 = v * (v - two) * (v - three) / two;
        let w2 = -v * (v - one) * (v - three) / two;
        let w3 = v * (v - one) * (v - two) / six;
        Some(w0 * self.y[start] + w1 * self.y[start + 1] + w2 * self.y[start + 2] + w3 * self.y[start + 3])
    }
}
