//! Singular self-similar profiles.
//!
//! In the variables `s = ln r`, `w̃(s) = r^γ f(r)` and `h = C₁ + w̃_s/w̃`, the
//! profile equation becomes the Riccati-type system
//!
//! ```text
//! h' = (n−2 + β′e^{−ρ₁s/β′}w̃^{1−m}) h − β′C₁e^{−ρ₁s/β′}w̃^{1−m} − m h²
//! w̃' = (h − C₁) w̃
//! ```
//!
//! The tail on `[b₁, ∞)` is the fixed point of an integral map (solved by
//! Picard iteration); the rest of the line is reached by integrating the
//! system backward from `b₁`.

use crate::error::{Error, Result};
use crate::numerics::cumulative::{cumulative_from_left, cumulative_from_right};
use crate::numerics::richardson_table;
use crate::numerics::{integrate_ode_at, Tolerances};
use crate::params::{derive_fp_constants, FPConstants, ParamSet, DEFAULT_B1_MARGIN};
use crate::Real;

type Params = ParamSet<Real>;
type Constants = FPConstants<Real>;

/// Spacing of the published profile grid in `s`.
pub const OUTPUT_DS: Real = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConfig {
    pub b1_margin: Real,
    /// Stopping threshold for the Picard update in the weighted tail norm.
    pub picard_tol: Real,
    pub picard_max_iter: usize,
    /// End of the tail grid; `None` selects `b₁ + max(40, −ln tol)/C₂`.
    pub s_max: Option<Real>,
    /// The backward continuation stops where `ρ = r^{ρ₁/β′}` reaches this value.
    pub rho_min: Real,
    pub ode_tol: Tolerances<Real>,
    /// Relative agreement required of the last two Richardson levels for `η`.
    pub extrap_tol: Real,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            b1_margin: DEFAULT_B1_MARGIN,
            picard_tol: 1e-12,
            picard_max_iter: 200,
            s_max: None,
            rho_min: 1e-6,
            ode_tol: Tolerances { abs_tol: 1e-14, rel_tol: 1e-12, max_steps: 20_000_000 },
            extrap_tol: 1e-8,
        }
    }
}

/// Fixed point of the tail map on a uniform grid over `[b₁, s_max]`.
#[derive(Debug, Clone)]
pub struct TailSolution {
    pub params: Params,
    pub fp: Constants,
    pub s0: Real,
    pub ds: Real,
    pub h: Vec<Real>,
    pub wt: Vec<Real>,
    /// Weighted norm of `Φ(x) − x` at the returned iterate.
    pub fp_residual: Real,
    pub iterations: usize,
    /// Weighted norms of successive updates `x_{k+1} − x_k`.
    pub update_norms: Vec<Real>,
}

impl TailSolution {
    pub fn s(&self) -> Vec<Real> {
        (0..self.h.len()).map(|i| self.s0 + self.ds * i as Real).collect()
    }

    pub fn s_max(&self) -> Real {
        self.s0 + self.ds * (self.h.len() - 1) as Real
    }

    /// Ratios of successive update norms.
    pub fn contraction_ratios(&self) -> Vec<Real> {
        self.update_norms.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Weighted tail norm `max(sup|a| e^{C₁s}, sup|b| e^{C₂s/2})`.
pub fn tail_norm(fp: &Constants, s: &[Real], a: &[Real], b: &[Real]) -> Real {
    s.iter()
        .zip(a.iter().zip(b))
        .map(|(&x, (&p, &q))| (p.abs() * (fp.c1 * x).exp()).max(q.abs() * (0.5 * fp.c2 * x).exp()))
        .fold(0.0, Real::max)
}

/// Checks the four inequalities defining the closed set the tail map
/// preserves, with a relative slack for rounding.
pub fn check_tail_domain(fp: &Constants, s: &[Real], wt: &[Real], h: &[Real], slack: Real) -> Result<()> {
    for (i, (&x, (&w, &hh))) in s.iter().zip(wt.iter().zip(h)).enumerate() {
        let we = w * (fp.c1 * x).exp();
        let he = hh * (fp.c2 * x).exp();
        let checks = [
            ((we - fp.eta_inf).abs() <= fp.eps1 * (1.0 + slack), "|w̃ − η∞e^{−C₁s}|e^{C₁s} ≤ ε₁"),
            (hh.abs() * (0.5 * fp.c2 * x).exp() <= fp.eps1 * (1.0 + slack), "|h|e^{C₂s/2} ≤ ε₁"),
            (we <= fp.eta_inf * (1.0 + slack), "w̃e^{C₁s} ≤ η∞"),
            (he >= -slack * fp.c3 && he <= fp.c3 * (1.0 + slack), "0 ≤ he^{C₂s} ≤ C₃"),
        ];
        if let Some((_, what)) = checks.iter().find(|c| !c.0) {
            return Err(Error::BoundViolation(format!("{what} fails at node {i} (s = {x})")));
        }
    }
    Ok(())
}

struct TailMap<'a> {
    p: &'a Params,
    fp: &'a Constants,
    s: Vec<Real>,
    ds: Real,
}

impl TailMap<'_> {
    fn apply(&self, wt: &[Real], h: &[Real]) -> (Vec<Real>, Vec<Real>) {
        let (fp, ds) = (self.fp, self.ds);
        let n2 = self.p.nf() - 2.0;
        let bp = self.p.beta_p();
        let one_m = 1.0 - self.p.m();
        let last = h.len() - 1;

        let mut tail_h = cumulative_from_right(h, ds);
        for v in tail_h.iter_mut() {
            *v += h[last] / fp.c2;
        }
        let w_new: Vec<Real> =
            self.s.iter().zip(&tail_h).map(|(&x, &th)| fp.eta_inf * (-th - fp.c1 * x).exp()).collect();

        let q: Vec<Real> = self
            .s
            .iter()
            .zip(wt)
            .map(|(&x, &w)| (-self.p.rho1() * x / bp).exp() * w.powf(one_m))
            .collect();
        let big_q = cumulative_from_left(&q, ds);
        let e: Vec<Real> = self.s.iter().zip(&big_q).map(|(&x, &qq)| -bp * qq - n2 * x).collect();
        let g: Vec<Real> = q.iter().zip(h).map(|(&qq, &hh)| bp * fp.c1 * qq + self.p.m() * hh * hh).collect();

        let mut h_new = vec![0.0; h.len()];
        h_new[last] = g[last] / (n2 + bp * q[last] + fp.c2);
        let c = ds / 24.0;
        for i in (0..last).rev() {
            let f = |j: usize| (e[j] - e[i]).exp() * g[j];
            let cell = if last < 3 {
                0.5 * ds * (f(i) + f(i + 1))
            } else if i == 0 {
                c * (9.0 * f(0) + 19.0 * f(1) - 5.0 * f(2) + f(3))
            } else if i == last - 1 {
                c * (9.0 * f(last) + 19.0 * f(last - 1) - 5.0 * f(last - 2) + f(last - 3))
            } else {
                c * (13.0 * (f(i) + f(i + 1)) - f(i - 1) - f(i + 2))
            };
            h_new[i] = (e[i + 1] - e[i]).exp() * h_new[i + 1] + cell;
        }
        (w_new, h_new)
    }
}

/// Default end of the tail grid.
pub fn default_s_max(fp: &Constants, tol: Real) -> Real {
    fp.b1 + 40.0_f64.max(-tol.ln()) / fp.c2
}

/// Grid refinement factor: the tail grid has spacing `OUTPUT_DS / M`.
fn tail_refinement(fp: &Constants) -> usize {
    fp.c2.ceil().max(1.0) as usize
}

/// Solves the tail fixed-point problem by Picard iteration from the seed
/// `(η∞e^{−C₁s}, min(C₃, ε₁)e^{−C₂s})`.
pub fn picard_solve(p: &Params, fp: &Constants, s_max: Real, tol: Real, max_iter: usize) -> Result<TailSolution> {
    if !(fp.b1 > fp.b0) {
        return Err(Error::Range(format!("b1 = {} must exceed b0 = {}", fp.b1, fp.b0)));
    }
    if !(s_max >= fp.b1 + 40.0 / fp.c2) {
        return Err(Error::Range(format!("s_max = {s_max} is below b1 + 40/C2 = {}", fp.b1 + 40.0 / fp.c2)));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Range("Picard tolerance and iteration cap must be positive".into()));
    }
    let ds = OUTPUT_DS / tail_refinement(fp) as Real;
    let cells = ((s_max - fp.b1) / ds).ceil() as usize;
    let s: Vec<Real> = (0..=cells).map(|i| fp.b1 + ds * i as Real).collect();
    let map = TailMap { p, fp, s, ds };

    let mut wt: Vec<Real> = map.s.iter().map(|&x| fp.eta_inf * (-fp.c1 * x).exp()).collect();
    let h0 = fp.c3.min(fp.eps1);
    let mut h: Vec<Real> = map.s.iter().map(|&x| h0 * (-fp.c2 * x).exp()).collect();
    let slack = 1e-9;
    check_tail_domain(fp, &map.s, &wt, &h, slack)?;

    let mut norms = Vec::new();
    let mut stalled = 0;
    for it in 1..=max_iter {
        let (w1, h1) = map.apply(&wt, &h);
        check_tail_domain(fp, &map.s, &w1, &h1, slack)?;
        let dw: Vec<Real> = w1.iter().zip(&wt).map(|(a, b)| a - b).collect();
        let dh: Vec<Real> = h1.iter().zip(&h).map(|(a, b)| a - b).collect();
        let d = tail_norm(fp, &map.s, &dw, &dh);
        if let Some(&prev) = norms.last() {
            stalled = if d > 0.99 * prev { stalled + 1 } else { 0 };
            if stalled >= 3 {
                return Err(Error::NonContraction(format!("update ratio above 0.99 three times (iteration {it})")));
            }
        }
        norms.push(d);
        wt = w1;
        h = h1;
        if d <= tol {
            let (w2, h2) = map.apply(&wt, &h);
            let rw: Vec<Real> = w2.iter().zip(&wt).map(|(a, b)| a - b).collect();
            let rh: Vec<Real> = h2.iter().zip(&h).map(|(a, b)| a - b).collect();
            let fp_residual = tail_norm(fp, &map.s, &rw, &rh);
            return Ok(TailSolution {
                params: *p,
                fp: *fp,
                s0: fp.b1,
                ds,
                h,
                wt,
                fp_residual,
                iterations: it,
                update_norms: norms,
            });
        }
    }
    Err(Error::Tolerance(format!(
        "Picard update {} above {tol} after {max_iter} iterations",
        norms.last().copied().unwrap_or(Real::NAN)
    )))
}

/// Right-hand side of the `(h, ln w̃)` system.
pub fn profile_rhs(p: &Params, c1: Real) -> impl Fn(Real, &[Real], &mut [Real]) + Copy {
    let bp = p.beta_p();
    let rho1 = p.rho1();
    let n2 = p.nf() - 2.0;
    let one_m = 1.0 - p.m();
    let m = p.m();
    move |s, y, dy| {
        let q = bp * ((-rho1 * s / bp) + one_m * y[1]).exp();
        dy[0] = (n2 + q) * y[0] - c1 * q - m * y[0] * y[0];
        dy[1] = y[0] - c1;
    }
}

/// A singular self-similar profile sampled on a uniform grid in `s = ln r`.
///
/// Values between nodes come from cubic Hermite interpolation of `ln w̃`,
/// whose derivative `h − C₁` is known at every node.
#[derive(Debug, Clone)]
pub struct Profile {
    params: Params,
    fp: Constants,
    s0: Real,
    ds: Real,
    h: Vec<Real>,
    lw: Vec<Real>,
    eta_origin: Real,
    eta_origin_error: Real,
    eta_levels: Vec<Real>,
    eta_inf: Real,
    lambda: Real,
    fp_residual: Real,
    iterations: usize,
    contraction_ratios: Vec<Real>,
}

/// Integrates the tail backward to `s_min` and assembles the profile.
pub fn continue_left(tail: &TailSolution, s_min: Real, tol: &Tolerances<Real>) -> Result<Profile> {
    let fp = tail.fp;
    let p = tail.params;
    if !(s_min < fp.b1) {
        return Err(Error::Range(format!("s_min = {s_min} must lie below b1 = {}", fp.b1)));
    }
    let stride = ((OUTPUT_DS / tail.ds).round() as usize).max(1);
    let back = ((fp.b1 - s_min) / OUTPUT_DS).ceil() as usize;
    let times: Vec<Real> = (0..=back).map(|k| fp.b1 - OUTPUT_DS * k as Real).collect();
    let s_end = *times.last().unwrap();
    let y0 = [tail.h[0], tail.wt[0].ln()];
    let run = integrate_ode_at(profile_rhs(&p, fp.c1), &y0, (fp.b1, s_end), &times, tol)?;
    let slack = 10.0 * tol.abs_tol.max(tol.rel_tol * fp.c1);
    if run.min_state[0] <= -slack || run.max_state[0] >= fp.c1 + slack {
        return Err(Error::BoundViolation(format!(
            "h left (0, C1): range [{}, {}] with C1 = {}",
            run.min_state[0], run.max_state[0], fp.c1
        )));
    }
    let mut h = Vec::with_capacity(back + tail.h.len() / stride + 1);
    let mut lw = Vec::with_capacity(h.capacity());
    for y in run.states.iter().rev().take(back) {
        h.push(y[0]);
        lw.push(y[1]);
    }
    for i in (0..tail.h.len()).step_by(stride) {
        h.push(tail.h[i]);
        lw.push(tail.wt[i].ln());
    }
    for (k, &hh) in h.iter().enumerate() {
        if !(hh > 0.0 && hh < fp.c1) {
            return Err(Error::BoundViolation(format!(
                "h = {hh} outside (0, {}) at s = {}",
                fp.c1,
                s_end + OUTPUT_DS * k as Real
            )));
        }
    }
    Ok(Profile {
        params: p,
        fp,
        s0: s_end,
        ds: OUTPUT_DS,
        h,
        lw,
        eta_origin: Real::NAN,
        eta_origin_error: Real::NAN,
        eta_levels: Vec::new(),
        eta_inf: fp.eta_inf,
        lambda: 1.0,
        fp_residual: tail.fp_residual,
        iterations: tail.iterations,
        contraction_ratios: tail.contraction_ratios(),
    })
}

/// Fills in `η = lim_{r→0} r^γ f(r)` by Richardson extrapolation in
/// `ρ = r^{ρ₁/β′}`, sampled at `ρ₀2^{−k}` down to the smallest resolved `ρ`.
pub fn recover_profile(mut profile: Profile, extrap_tol: Real) -> Result<Profile> {
    let p = profile.params;
    let kappa = p.rho1() / p.beta_p();
    let levels = 7;
    let s_lo = profile.s_min();
    let rho_lo = (kappa * s_lo).exp();
    let rho0 = rho_lo * 2f64.powi(levels as i32 - 1);
    let mut approx = Vec::with_capacity(levels);
    for k in 0..levels {
        let rho = (rho0 / 2f64.powi(k as i32)).max(rho_lo);
        let s = (rho.ln() / kappa).max(s_lo);
        approx.push(profile.lw_at(s).ok_or_else(|| Error::Internal("origin sample outside profile".into()))?.0.exp());
    }
    let orders: Vec<Real> = (1..levels).map(|j| j as Real).collect();
    let rich = richardson_table(&approx, 2.0, &orders).ok_or_else(|| Error::Internal("no extrapolation levels".into()))?;
    let eta = rich.value;
    if !(rich.error <= 10.0 * extrap_tol * eta.abs()) {
        return Err(Error::Extrapolation(format!(
            "last Richardson levels differ by {} (relative {}), tolerance {extrap_tol}",
            rich.error,
            rich.error / eta.abs()
        )));
    }
    profile.eta_origin = eta;
    profile.eta_origin_error = rich.error;
    profile.eta_levels = rich.diagonal();
    Ok(profile)
}

/// Full pipeline: constants, tail fixed point, continuation and `η`.
pub fn build_profile(p: &Params, eta_inf: Real, cfg: &ProfileConfig) -> Result<Profile> {
    let fp = derive_fp_constants(p, eta_inf, cfg.b1_margin)?;
    let s_max = cfg.s_max.unwrap_or_else(|| default_s_max(&fp, cfg.picard_tol));
    let tail = picard_solve(p, &fp, s_max, cfg.picard_tol, cfg.picard_max_iter)?;
    if !(cfg.rho_min > 0.0 && cfg.rho_min < 1.0) {
        return Err(Error::Range(format!("rho_min = {} must lie in (0, 1)", cfg.rho_min)));
    }
    let s_min = p.beta_p() / p.rho1() * cfg.rho_min.ln();
    let s_min = s_min.min(fp.b1 - 1.0);
    let profile = continue_left(&tail, s_min, &cfg.ode_tol)?;
    recover_profile(profile, cfg.extrap_tol)
}

/// `f_λ(r) = λ^{2/(1−m)} f(λr)`.
///
/// In logarithmic variables this shifts the grid by `−ln λ` and scales
/// `w̃` by `λ^{2/(1−m)−γ}`; both are exact.
pub fn rescale_profile(profile: &Profile, lambda: Real) -> Result<Profile> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Range(format!("lambda = {lambda} must be positive")));
    }
    let p = profile.params;
    let k = p.scaling_exponent();
    let ln_l = lambda.ln();
    let shift = (k - p.gamma()) * ln_l;
    let mut out = profile.clone();
    out.s0 -= ln_l;
    for v in out.lw.iter_mut() {
        *v += shift;
    }
    out.eta_origin *= lambda.powf(k - p.gamma());
    out.eta_origin_error *= lambda.powf(k - p.gamma());
    for v in out.eta_levels.iter_mut() {
        *v *= lambda.powf(k - p.gamma());
    }
    out.eta_inf *= lambda.powf(k - p.far_exponent());
    out.lambda *= lambda;
    Ok(out)
}

/// Scale factor taking a profile with origin coefficient `eta_from` to one
/// with `eta_to`.
pub fn lambda_for_eta(p: &Params, eta_from: Real, eta_to: Real) -> Real {
    (eta_to / eta_from).powf(1.0 / (p.scaling_exponent() - p.gamma()))
}

/// Profile with `lim r^γ f = target_eta`, obtained by rescaling the profile
/// with `η∞ = 1`.
pub fn solve_for_eta(p: &Params, target_eta: Real, cfg: &ProfileConfig) -> Result<Profile> {
    if !(target_eta > 0.0 && target_eta.is_finite()) {
        return Err(Error::Range(format!("target eta = {target_eta} must be positive")));
    }
    let base = build_profile(p, 1.0, cfg)?;
    rescale_profile(&base, lambda_for_eta(p, base.eta_origin, target_eta))
}

impl Profile {
    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Constants of the unscaled construction.
    pub fn fp_constants(&self) -> &Constants {
        &self.fp
    }

    pub fn eta_origin(&self) -> Real {
        self.eta_origin
    }

    /// Difference of the two most extrapolated estimates of `η`.
    pub fn eta_origin_error(&self) -> Real {
        self.eta_origin_error
    }

    /// Diagonal of the Richardson tableau for `η`.
    pub fn eta_levels(&self) -> &[Real] {
        &self.eta_levels
    }

    pub fn eta_inf(&self) -> Real {
        self.eta_inf
    }

    /// Accumulated scale factor relative to the computed profile.
    pub fn lambda(&self) -> Real {
        self.lambda
    }

    pub fn fp_residual(&self) -> Real {
        self.fp_residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn contraction_ratios(&self) -> &[Real] {
        &self.contraction_ratios
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn ds(&self) -> Real {
        self.ds
    }

    pub fn s_min(&self) -> Real {
        self.s0
    }

    pub fn s_max(&self) -> Real {
        self.s0 + self.ds * (self.h.len() - 1) as Real
    }

    pub fn s_grid(&self) -> Vec<Real> {
        (0..self.h.len()).map(|i| self.s0 + self.ds * i as Real).collect()
    }

    pub fn r_grid(&self) -> Vec<Real> {
        self.s_grid().into_iter().map(Real::exp).collect()
    }

    pub fn h(&self) -> &[Real] {
        &self.h
    }

    /// `ln w̃` at the nodes.
    pub fn log_wt(&self) -> &[Real] {
        &self.lw
    }

    pub fn wt(&self) -> Vec<Real> {
        self.lw.iter().map(|v| v.exp()).collect()
    }

    /// `f = r^{−γ} w̃` at the nodes.
    pub fn f(&self) -> Vec<Real> {
        let g = self.params.gamma();
        self.s_grid().iter().zip(&self.lw).map(|(&s, &l)| (l - g * s).exp()).collect()
    }

    /// `z = h − C₁ = r w_r / w`.
    pub fn z(&self) -> Vec<Real> {
        self.h.iter().map(|&h| h - self.fp.c1).collect()
    }

    /// `r f_r / f = h − C₁ − γ` at the nodes.
    pub fn rfr_over_f(&self) -> Vec<Real> {
        let g = self.params.gamma();
        self.h.iter().map(|&h| h - self.fp.c1 - g).collect()
    }

    /// Distances `(rf_r/f + (n−2)/m, −γ − rf_r/f)` at each node, evaluated
    /// without cancellation. Far out `rf_r/f` rounds to `−(n−2)/m` while the
    /// first distance is still positive.
    pub fn rfr_over_f_margins(&self) -> Vec<(Real, Real)> {
        let p = &self.params;
        let gap = (p.far_exponent() - p.gamma()) - self.fp.c1;
        self.h.iter().map(|&h| (h + gap, self.fp.c1 - h)).collect()
    }

    /// `(ln w̃, (ln w̃)_s)` at any `s ≥ s_min`.
    ///
    /// Beyond the grid the far-field form `ln η∞ − C₁s − h(s_max)e^{−C₂(s−s_max)}/C₂`
    /// is used, with `h` continued as `h(s_max)e^{−C₂(s−s_max)}`.
    pub fn lw_at(&self, s: Real) -> Option<(Real, Real)> {
        let c1 = self.fp.c1;
        let last = self.h.len() - 1;
        let u = (s - self.s0) / self.ds;
        if !(u >= -1e-9) {
            return None;
        }
        if u > last as Real {
            let hs = self.h[last] * (-self.fp.c2 * (s - self.s_max())).exp();
            return Some((self.eta_inf.ln() - c1 * s - hs / self.fp.c2, hs - c1));
        }
        let i = (u.floor().max(0.0) as usize).min(last - 1);
        let t = (u - i as Real).clamp(0.0, 1.0);
        let (y0, y1) = (self.lw[i], self.lw[i + 1]);
        let (d0, d1) = ((self.h[i] - c1) * self.ds, (self.h[i + 1] - c1) * self.ds);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (3.0 * t2 - 2.0 * t3) * y1 + (t3 - t2) * d1;
        let dv = ((6.0 * t2 - 6.0 * t) * (y0 - y1) + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1) / self.ds;
        Some((v, dv))
    }

    /// `f(r)` for `r ≥ e^{s_min}`.
    pub fn f_at(&self, r: Real) -> Option<Real> {
        let s = r.ln();
        self.lw_at(s).map(|(l, _)| (l - self.params.gamma() * s).exp())
    }

    /// `r^{(n−2)/m} f(r)` at the last node.
    pub fn far_field_value(&self) -> Real {
        (self.lw[self.lw.len() - 1] + self.fp.c1 * self.s_max()).exp()
    }
}
