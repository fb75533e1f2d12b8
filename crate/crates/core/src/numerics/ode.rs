//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The step controller is the PI controller of Hairer's `dopri5`, which
//! behaves well when the step size is pinned to the stability boundary
//! (mildly stiff problems). Integration may run in either direction.

use crate::error::{Error, Result};
use crate::numerics::Tolerances;
use crate::scalar::Scalar;

/// Any state component above this magnitude aborts the integration.
pub const OVERFLOW_GUARD: f64 = 1e12;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Accepted steps of an integration together with their interpolants.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    dim: usize,
    forward: bool,
    /// Step start times, in integration order.
    t0: Vec<T>,
    h: Vec<T>,
    /// Five interpolation coefficient vectors per step, flattened.
    coef: Vec<T>,
    t_end: T,
    y_end: Vec<T>,
    rejected: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.t0.len()
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn t_start(&self) -> T {
        self.t0.first().copied().unwrap_or(self.t_end)
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn y_end(&self) -> &[T] {
        &self.y_end
    }

    /// Node times: step starts followed by the final time.
    pub fn times(&self) -> Vec<T> {
        let mut ts = self.t0.clone();
        ts.push(self.t_end);
        ts
    }

    /// Dense-output evaluation; `None` outside the integrated span.
    pub fn eval(&self, t: T) -> Option<Vec<T>> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(t, &mut out).then_some(out)
    }

    pub fn eval_into(&self, t: T, out: &mut [T]) -> bool {
        let (lo, hi) = if self.forward {
            (self.t_start(), self.t_end)
        } else {
            (self.t_end, self.t_start())
        };
        if !(t >= lo && t <= hi) {
            return false;
        }
        if self.t0.is_empty() {
            out.copy_from_slice(&self.y_end);
            return true;
        }
        // Last step whose start precedes t in integration order.
        let idx = if self.forward {
            self.t0.partition_point(|&s| s <= t)
        } else {
            self.t0.partition_point(|&s| s >= t)
        }
        .saturating_sub(1);
        let theta = (t - self.t0[idx]) / self.h[idx];
        let one = T::one();
        let base = idx * 5 * self.dim;
        for i in 0..self.dim {
            let c = |k: usize| self.coef[base + k * self.dim + i];
            out[i] = c(0)
                + theta * (c(1) + (one - theta) * (c(2) + theta * (c(3) + (one - theta) * c(4))));
        }
        true
    }
}

fn rms_norm<T: Scalar>(err: &[T], y0: &[T], y1: &[T], tol: &Tolerances<T>) -> T {
    let n = T::from_count(err.len());
    let s: T = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(&e, (&a, &b))| {
            let sc = tol.abs_tol + tol.rel_tol * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates `y' = rhs(t, y)` from `span.0` to `span.1`.
///
/// The local error of every accepted step satisfies the mixed
/// absolute/relative criterion of `tol`. `max_steps` bounds accepted plus
/// rejected steps.
pub fn integrate_ode<T, F>(rhs: F, y0: &[T], span: (T, T), tol: &Tolerances<T>) -> Result<Trajectory<T>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    let dim = y0.len();
    let mut traj = Trajectory {
        dim,
        forward: span.1 >= span.0,
        t0: Vec::new(),
        h: Vec::new(),
        coef: Vec::new(),
        t_end: span.0,
        y_end: y0.to_vec(),
        rejected: 0,
    };
    let (t0, h, coef) = (&mut traj.t0, &mut traj.h, &mut traj.coef);
    let run = drive(rhs, y0, span, tol, |t, hs, c: &[T]| {
        t0.push(t);
        h.push(hs);
        coef.extend_from_slice(c);
    })?;
    traj.t_end = run.t_end;
    traj.y_end = run.y_end;
    traj.rejected = run.rejected;
    Ok(traj)
}

/// States at the requested times, evaluated from the dense output while
/// integrating so that no step history is kept.
#[derive(Debug, Clone)]
pub struct Samples<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub accepted: usize,
    pub rejected: usize,
    /// Extreme values of every component over all accepted step endpoints.
    pub min_state: Vec<T>,
    pub max_state: Vec<T>,
}

/// Like [`integrate_ode`], but returns only the states at `times`, which
/// must lie in the span and be ordered along the direction of integration.
pub fn integrate_ode_at<T, F>(rhs: F, y0: &[T], span: (T, T), times: &[T], tol: &Tolerances<T>) -> Result<Samples<T>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    let dim = y0.len();
    let forward = span.1 >= span.0;
    let inside = |t: T| if forward { t >= span.0 && t <= span.1 } else { t <= span.0 && t >= span.1 };
    let ordered = times.windows(2).all(|w| if forward { w[1] >= w[0] } else { w[1] <= w[0] });
    if !ordered || !times.iter().all(|&t| inside(t)) {
        return Err(Error::Range("sample times must be ordered and inside the span".into()));
    }
    let mut states = Vec::with_capacity(times.len());
    let mut next = 0usize;
    while next < times.len() && times[next] == span.0 {
        states.push(y0.to_vec());
        next += 1;
    }
    let mut accepted = 0usize;
    let mut min_state = y0.to_vec();
    let mut max_state = y0.to_vec();
    let one = T::one();
    let run = drive(rhs, y0, span, tol, |t, hs, c: &[T]| {
        accepted += 1;
        let t_hi = t + hs;
        for i in 0..dim {
            let end = c[i] + c[dim + i];
            min_state[i] = min_state[i].min(end);
            max_state[i] = max_state[i].max(end);
        }
        while next < times.len() {
            let tq = times[next];
            let covered = if forward { tq <= t_hi } else { tq >= t_hi };
            if !covered {
                break;
            }
            let theta = (tq - t) / hs;
            states.push(
                (0..dim)
                    .map(|i| {
                        let k = |j: usize| c[j * dim + i];
                        k(0) + theta * (k(1) + (one - theta) * (k(2) + theta * (k(3) + (one - theta) * k(4))))
                    })
                    .collect(),
            );
            next += 1;
        }
    })?;
    while states.len() < times.len() {
        states.push(run.y_end.clone());
    }
    Ok(Samples { times: times.to_vec(), states, accepted, rejected: run.rejected, min_state, max_state })
}

struct RunEnd<T> {
    t_end: T,
    y_end: Vec<T>,
    rejected: usize,
}

/// Core stepping loop; `on_step(t, h, coef)` receives every accepted step
/// with its five dense-output coefficient vectors (flattened, `5·dim`).
fn drive<T, F, S>(mut rhs: F, y0: &[T], span: (T, T), tol: &Tolerances<T>, mut on_step: S) -> Result<RunEnd<T>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
    S: FnMut(T, T, &[T]),
{
    let dim = y0.len();
    let (t_start, t_final) = span;
    if y0.iter().any(|v| !v.is_finite()) || !t_start.is_finite() || !t_final.is_finite() {
        return Err(Error::Range("non-finite initial state or span".into()));
    }
    let forward = t_final >= t_start;
    let dir = if forward { T::one() } else { -T::one() };
    let mut rejected = 0usize;
    let length = (t_final - t_start).abs();
    if length == T::zero() || dim == 0 {
        return Ok(RunEnd { t_end: t_start, y_end: y0.to_vec(), rejected });
    }

    let lit = T::lit;
    let guard = lit(OVERFLOW_GUARD);
    let eps = T::epsilon();

    let mut t = t_start;
    let mut y = y0.to_vec();
    let mut k1 = vec![T::zero(); dim];
    let mut k2 = vec![T::zero(); dim];
    let mut k3 = vec![T::zero(); dim];
    let mut k4 = vec![T::zero(); dim];
    let mut k5 = vec![T::zero(); dim];
    let mut k6 = vec![T::zero(); dim];
    let mut k7 = vec![T::zero(); dim];
    let mut ys = vec![T::zero(); dim];
    let mut y1 = vec![T::zero(); dim];
    let mut err = vec![T::zero(); dim];
    let mut coef = vec![T::zero(); 5 * dim];
    rhs(t, &y, &mut k1);

    // Initial step guess (Hairer, Nørsett & Wanner, II.4).
    let mut h = {
        let sc: Vec<T> = y.iter().map(|v| tol.abs_tol + tol.rel_tol * v.abs()).collect();
        let d0 = (y.iter().zip(&sc).map(|(v, s)| (*v / *s).powi(2)).sum::<T>() / T::from_count(dim)).sqrt();
        let d1 = (k1.iter().zip(&sc).map(|(v, s)| (*v / *s).powi(2)).sum::<T>() / T::from_count(dim)).sqrt();
        let h0 = if d0 < lit(1e-5) || d1 < lit(1e-5) { lit(1e-6) } else { lit(0.01) * d0 / d1 };
        let h0 = h0.min(length);
        for i in 0..dim {
            ys[i] = y[i] + dir * h0 * k1[i];
        }
        rhs(t + dir * h0, &ys, &mut k2);
        let d2 = (k2
            .iter()
            .zip(&k1)
            .zip(&sc)
            .map(|((a, b), s)| ((*a - *b) / *s).powi(2))
            .sum::<T>()
            / T::from_count(dim))
        .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= lit(1e-15) {
            (h0 * lit(1e-3)).max(lit(1e-6))
        } else {
            (lit(0.01) / d1.max(d2)).powf(lit(0.2))
        };
        (lit(100.0) * h0).min(h1).min(length)
    };

    let beta = lit(0.04);
    let expo1 = lit(0.2) - beta * lit(0.75);
    let safe = lit(0.9);
    let fac_min = lit(0.2);
    let fac_max = lit(10.0);
    let mut fac_old = lit(1e-4);
    let mut last_rejected = false;
    let mut attempts = 0usize;

    loop {
        let remaining = (t_final - t).abs();
        if remaining <= lit(16.0) * eps * t.abs().max(T::one()) {
            break;
        }
        attempts += 1;
        if attempts > tol.max_steps {
            return Err(Error::Stiffness(format!(
                "step budget of {} exhausted at t = {t}",
                tol.max_steps
            )));
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h <= lit(16.0) * eps * t.abs().max(T::one()) {
            return Err(Error::Stiffness(format!("step size {h} underflowed at t = {t}")));
        }
        let hs = dir * h;

        for i in 0..dim {
            ys[i] = y[i] + hs * lit(A21) * k1[i];
        }
        rhs(t + lit(C2) * hs, &ys, &mut k2);
        for i in 0..dim {
            ys[i] = y[i] + hs * (lit(A31) * k1[i] + lit(A32) * k2[i]);
        }
        rhs(t + lit(C3) * hs, &ys, &mut k3);
        for i in 0..dim {
            ys[i] = y[i] + hs * (lit(A41) * k1[i] + lit(A42) * k2[i] + lit(A43) * k3[i]);
        }
        rhs(t + lit(C4) * hs, &ys, &mut k4);
        for i in 0..dim {
            ys[i] = y[i]
                + hs * (lit(A51) * k1[i] + lit(A52) * k2[i] + lit(A53) * k3[i] + lit(A54) * k4[i]);
        }
        rhs(t + lit(C5) * hs, &ys, &mut k5);
        for i in 0..dim {
            ys[i] = y[i]
                + hs * (lit(A61) * k1[i]
                    + lit(A62) * k2[i]
                    + lit(A63) * k3[i]
                    + lit(A64) * k4[i]
                    + lit(A65) * k5[i]);
        }
        let t_new = if last { t_final } else { t + hs };
        rhs(t_new, &ys, &mut k6);
        for i in 0..dim {
            y1[i] = y[i]
                + hs * (lit(A71) * k1[i]
                    + lit(A73) * k3[i]
                    + lit(A74) * k4[i]
                    + lit(A75) * k5[i]
                    + lit(A76) * k6[i]);
        }
        rhs(t_new, &y1, &mut k7);
        for i in 0..dim {
            err[i] = hs
                * (lit(E1) * k1[i]
                    + lit(E3) * k3[i]
                    + lit(E4) * k4[i]
                    + lit(E5) * k5[i]
                    + lit(E6) * k6[i]
                    + lit(E7) * k7[i]);
        }
        let mut en = rms_norm(&err, &y, &y1, tol);
        if !en.is_finite() {
            en = lit(1e10);
        }

        let fac11 = en.powf(expo1);
        let mut fac = fac11 / fac_old.powf(beta);
        fac = (fac / safe).max(T::one() / fac_max).min(T::one() / fac_min);
        let h_new = h / fac;

        if en <= T::one() {
            fac_old = en.max(lit(1e-4));
            if let Some(bad) = y1.iter().find(|v| !(v.abs() <= guard)) {
                return Err(Error::BlowUp(format!("component {bad} at t = {t_new}")));
            }
            // Dense-output coefficients for this step.
            for i in 0..dim {
                let ydiff = y1[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                coef[i] = y[i];
                coef[dim + i] = ydiff;
                coef[2 * dim + i] = bspl;
                coef[3 * dim + i] = ydiff - hs * k7[i] - bspl;
                coef[4 * dim + i] = hs
                    * (lit(D1) * k1[i]
                        + lit(D3) * k3[i]
                        + lit(D4) * k4[i]
                        + lit(D5) * k5[i]
                        + lit(D6) * k6[i]
                        + lit(D7) * k7[i]);
            }
            on_step(t, hs, &coef);
            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut y1);
            t = t_new;
            let h_next = if last_rejected { h_new.min(h) } else { h_new };
            last_rejected = false;
            h = h_next;
            if last {
                break;
            }
        } else {
            h = h / (T::one() / fac_min).min(fac11 / safe);
            last_rejected = true;
            rejected += 1;
        }
    }
    Ok(RunEnd { t_end: t, y_end: y, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol(v: f64) -> Tolerances<f64> {
        Tolerances::uniform(v, 1_000_000).unwrap()
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate_ode(|_, y: &[f64], d: &mut [f64]| d[0] = -y[0], &[1.0], (0.0, 1.0), &tol(1e-10)).unwrap();
        assert!((tr.y_end()[0] - (-1.0f64).exp()).abs() < 1e-9);
        let mid = tr.eval(0.37).unwrap()[0];
        assert!((mid - (-0.37f64).exp()).abs() < 1e-9);
        assert!(tr.eval(1.5).is_none());
    }

    #[test]
    fn zero_field_is_constant() {
        let tr = integrate_ode(|_, _: &[f64], d: &mut [f64]| d.fill(0.0), &[2.5, -1.0], (0.0, 3.0), &tol(1e-8)).unwrap();
        assert_eq!(tr.y_end(), &[2.5, -1.0]);
        assert_eq!(tr.eval(1.7).unwrap(), vec![2.5, -1.0]);
    }

    #[test]
    fn logistic_matches_closed_form() {
        let t = 1e-10;
        let tr = integrate_ode(|_, y: &[f64], d: &mut [f64]| d[0] = y[0] * (1.0 - y[0]), &[0.5], (0.0, 2.0), &tol(t)).unwrap();
        for k in 0..=20 {
            let s = 0.1 * k as f64;
            let exact = 1.0 / (1.0 + (-s).exp());
            assert!((tr.eval(s).unwrap()[0] - exact).abs() <= 10.0 * t, "s={s}");
        }
    }

    #[test]
    fn backward_integration() {
        let tr = integrate_ode(|_, y: &[f64], d: &mut [f64]| d[0] = y[0], &[1.0], (0.0, -2.0), &tol(1e-11)).unwrap();
        assert!((tr.y_end()[0] - (-2.0f64).exp()).abs() < 1e-10);
        assert!((tr.eval(-0.5).unwrap()[0] - (-0.5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn overflow_guard_trips() {
        let r = integrate_ode(|_, y: &[f64], d: &mut [f64]| d[0] = y[0] * y[0], &[1.0], (0.0, 2.0), &tol(1e-8));
        assert!(matches!(r, Err(Error::BlowUp(_)) | Err(Error::Stiffness(_))));
    }

    #[test]
    fn step_budget_is_enforced() {
        let t = Tolerances::uniform(1e-12, 5).unwrap();
        let r = integrate_ode(|_, y: &[f64], d: &mut [f64]| d[0] = -y[0], &[1.0], (0.0, 10.0), &t);
        assert!(matches!(r, Err(Error::Stiffness(_))));
    }

    #[test]
    fn samples_match_dense_output() {
        let f = |_: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let times: Vec<f64> = (0..=30).map(|k| -0.1 * k as f64).collect();
        let s = integrate_ode_at(f, &[0.0, 1.0], (0.0, -3.0), &times, &tol(1e-11)).unwrap();
        for (t, y) in s.times.iter().zip(&s.states) {
            assert!((y[0] - t.sin()).abs() < 1e-9 && (y[1] - t.cos()).abs() < 1e-9, "t={t}");
        }
        assert!(s.min_state[0] < -0.99 && s.max_state[0] <= 1e-12);
        assert!(integrate_ode_at(f, &[0.0, 1.0], (0.0, -3.0), &[-1.0, -0.5], &tol(1e-8)).is_err());
    }

    #[test]
    fn forward_then_reverse_returns_to_start() {
        let t = 1e-10;
        let f = |_: f64, y: &[f64], d: &mut [f64]| d[0] = y[0] * (1.0 - y[0]);
        let fwd = integrate_ode(f, &[0.2], (0.0, 3.0), &tol(t)).unwrap();
        let back = integrate_ode(f, fwd.y_end(), (3.0, 0.0), &tol(t)).unwrap();
        assert!((back.y_end()[0] - 0.2).abs() <= 10.0 * t);
    }

    #[test]
    fn works_in_single_precision() {
        let t = Tolerances::<f32>::uniform(1e-5, 100_000).unwrap();
        let tr = integrate_ode(|_, y: &[f32], d: &mut [f32]| d[0] = -y[0], &[1.0f32], (0.0, 1.0), &t).unwrap();
        assert!((tr.y_end()[0] - (-1.0f32).exp()).abs() < 1e-4);
    }
}
