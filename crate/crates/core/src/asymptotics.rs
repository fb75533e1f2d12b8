//! Checks of a computed profile against its origin expansion, the ODE it
//! solves in three different coordinates, and the inversion `g(r) = r^{−(n−2)/m} f(1/r)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::diff::{first_derivative, second_derivative};
use crate::numerics::interp::UniformCubic;
use crate::numerics::linalg::polyfit;
use crate::numerics::richardson_table;
use crate::params::{ExpansionConstants, ParamSet};
use crate::profile::Profile;
use crate::Real;

type Params = ParamSet<Real>;

/// Left ends `ρ_j = 0.05·2^{−j}` of the fitting windows `[ρ_j, 4ρ_j]`.
pub const WINDOW_START: Real = 0.05;
pub const WINDOW_LEVELS: usize = 7;
const WINDOW_SAMPLES: usize = 41;

/// `κ = ρ₁/β′`, so that `ρ = r^κ = e^{κs}`.
fn kappa(p: &Params) -> Real {
    p.rho1() / p.beta_p()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    /// `w̄(0)`.
    pub eta: Real,
    /// Extrapolated `w̄_ρ(0)` and `w̄_ρρ(0)`.
    pub d1: Real,
    pub d2: Real,
    /// `a₃η^m/a₂` and `a₃(ma₃−a₁)η^{2m−1}/a₂²`.
    pub d1_ref: Real,
    pub d2_ref: Real,
    /// Largest relative spread among the last three Richardson levels.
    pub rel_err1: Real,
    pub rel_err2: Real,
    /// Relative deviation from the closed-form values.
    pub ref_err1: Real,
    pub ref_err2: Real,
    /// Diagonals of the Richardson tableaux.
    pub d1_levels: Vec<Real>,
    pub d2_levels: Vec<Real>,
    /// Whether `w̄` decreases strictly between every pair of nodes.
    pub wbar_decreasing: bool,
}

fn spread_of_last_three(diag: &[Real]) -> Real {
    let tail = &diag[diag.len().saturating_sub(3)..];
    let hi = tail.iter().copied().fold(Real::NEG_INFINITY, Real::max);
    let lo = tail.iter().copied().fold(Real::INFINITY, Real::min);
    let scale = tail.last().copied().unwrap_or(1.0).abs();
    (hi - lo) / scale
}

/// Quadratic least-squares fits of `F(ρ)` on `[ρ_j, 4ρ_j]`; returns the
/// linear and doubled quadratic coefficients per window.
fn window_fits<F: Fn(Real) -> Option<Real>>(f: F) -> Result<Vec<(Real, Real)>> {
    (0..WINDOW_LEVELS)
        .map(|j| {
            let a = WINDOW_START / 2f64.powi(j as i32);
            let xs: Vec<Real> = (0..WINDOW_SAMPLES).map(|k| a * (1.0 + 3.0 * k as Real / (WINDOW_SAMPLES - 1) as Real)).collect();
            let ys = xs
                .iter()
                .map(|&x| f(x).ok_or_else(|| Error::Resolution(format!("profile does not reach rho = {x}"))))
                .collect::<Result<Vec<_>>>()?;
            let c = polyfit(&xs, &ys, 2)?;
            Ok((c[1], 2.0 * c[2]))
        })
        .collect()
}

fn require_origin_resolution(profile: &Profile) -> Result<()> {
    let rho_lo = (kappa(profile.params()) * profile.s_min()).exp();
    // Three decades below 1e-2.
    if rho_lo > 1e-5 {
        return Err(Error::Resolution(format!(
            "profile reaches only rho = {rho_lo:.3e}; expansion fits need 1e-5"
        )));
    }
    Ok(())
}

/// `w̄(ρ) = w̃(ln ρ / κ)`.
fn wbar(profile: &Profile, rho: Real) -> Option<Real> {
    let s = rho.ln() / kappa(profile.params());
    profile.lw_at(s).map(|(l, _)| l.exp())
}

/// Estimates `w̄_ρ(0)` and `w̄_ρρ(0)` and compares them with the closed forms.
pub fn expansion_check(profile: &Profile, ec: &ExpansionConstants<Real>) -> Result<ExpansionReport> {
    require_origin_resolution(profile)?;
    let p = profile.params();
    let m = p.m();
    let eta = profile.eta_origin();
    let fits = window_fits(|rho| wbar(profile, rho))?;
    let d1_raw: Vec<Real> = fits.iter().map(|f| f.0).collect();
    let d2_raw: Vec<Real> = fits.iter().map(|f| f.1).collect();
    // A quadratic fit on [a, 4a] leaves errors O(a²) in the slope and O(a)
    // in the curvature.
    let o1: Vec<Real> = (2..WINDOW_LEVELS + 1).map(|k| k as Real).collect();
    let o2: Vec<Real> = (1..WINDOW_LEVELS).map(|k| k as Real).collect();
    let r1 = richardson_table(&d1_raw, 2.0, &o1).expect("non-empty");
    let r2 = richardson_table(&d2_raw, 2.0, &o2).expect("non-empty");
    let d1_levels = r1.diagonal();
    let d2_levels = r2.diagonal();
    let d1_ref = ec.a3 / ec.a2 * eta.powf(m);
    let d2_ref = ec.a3 * (m * ec.a3 - ec.a1) / (ec.a2 * ec.a2) * eta.powf(2.0 * m - 1.0);
    let lw = profile.log_wt();
    Ok(ExpansionReport {
        eta,
        d1: r1.value,
        d2: r2.value,
        d1_ref,
        d2_ref,
        rel_err1: spread_of_last_three(&d1_levels),
        rel_err2: spread_of_last_three(&d2_levels),
        ref_err1: ((r1.value - d1_ref) / d1_ref).abs(),
        ref_err2: ((r2.value - d2_ref) / d2_ref).abs(),
        d1_levels,
        d2_levels,
        wbar_decreasing: lw.windows(2).all(|w| w[1] < w[0]),
    })
}

/// Relative defect of the `w̄` equation at each node of a uniform `s`-grid
/// of `ln w̃` values, restricted to `ρ ∈ [rho_lo, rho_hi]`.
///
/// The equation is multiplied by `ρ²` and written in `s`; the defect is
/// divided by the largest of its terms at the node.
pub fn wbar_residuals(
    p: &Params,
    ec: &ExpansionConstants<Real>,
    s0: Real,
    ds: Real,
    lw: &[Real],
    rho_lo: Real,
    rho_hi: Real,
) -> Vec<(Real, Real)> {
    let k = kappa(p);
    let m = p.m();
    let (Some(l1), Some(l2)) = (first_derivative(lw, ds), second_derivative(lw, ds)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for i in 0..lw.len() {
        let s = s0 + ds * i as Real;
        let rho = (k * s).exp();
        if rho < rho_lo || rho > rho_hi {
            continue;
        }
        let terms = [
            (l2[i] - k * l1[i]) / (k * k),
            m * l1[i] * l1[i] / (k * k),
            ec.a1 * l1[i] / k,
            ec.a2 * l1[i] * ((1.0 - m) * lw[i]).exp() / (k * rho),
            -ec.a3,
        ];
        let sum: Real = terms.iter().sum();
        let scale = terms.iter().fold(0.0, |a: Real, t| a.max(t.abs()));
        out.push((rho, sum.abs() / scale));
    }
    out
}

/// Largest relative defect of the `w̄` equation over `ρ ∈ [1e−4, 1]`.
pub fn wbar_ode_residual(profile: &Profile, ec: &ExpansionConstants<Real>) -> Real {
    wbar_residuals(profile.params(), ec, profile.s_min(), profile.ds(), profile.log_wt(), 1e-4, 1.0)
        .into_iter()
        .fold(0.0, |a, (_, r)| a.max(r))
}

/// Relative defect of `(f^m/m)_rr + (n−1)(f^m/m)_r/r + αf + βrf_r = 0` at
/// the nodes with `r ∈ [r_lo, r_hi]`, derivatives taken from `ln w̃` by
/// finite differences.
pub fn f_residuals(profile: &Profile, r_lo: Real, r_hi: Real) -> Vec<(Real, Real)> {
    let p = profile.params();
    let (m, g, a, b) = (p.m(), p.gamma(), p.alpha(), p.beta());
    let n2 = p.nf() - 2.0;
    let lw = profile.log_wt();
    let ds = profile.ds();
    let (Some(l1), Some(l2)) = (first_derivative(lw, ds), second_derivative(lw, ds)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, s) in profile.s_grid().into_iter().enumerate() {
        let r = s.exp();
        if r < r_lo || r > r_hi {
            continue;
        }
        // Everything divided by f; ln f = ln w̃ − γs.
        let lf_s = l1[i] - g;
        let diff = ((m - 1.0) * (lw[i] - g * s) - 2.0 * s).exp();
        let terms = [diff * l2[i], diff * m * lf_s * lf_s, diff * n2 * lf_s, a, b * lf_s];
        let sum: Real = terms.iter().sum();
        let scale = terms.iter().fold(0.0, |acc: Real, t| acc.max(t.abs()));
        out.push((r, sum.abs() / scale));
    }
    out
}

/// Largest relative defect of the profile equation over `r ∈ [1e−3, 1e3]`.
pub fn f_ode_residual(profile: &Profile) -> Real {
    f_residuals(profile, 1e-3, 1e3).into_iter().fold(0.0, |a, (_, r)| a.max(r))
}

/// The inverted profile `g(ρ) = ρ^{−(n−2)/m} f(1/ρ)` on the uniform grid
/// `σ = ln ρ = −s`, stored as `ln g` in increasing `σ`.
#[derive(Debug, Clone)]
pub struct Inverted {
    pub sigma0: Real,
    pub ds: Real,
    pub log_g: Vec<Real>,
}

impl Inverted {
    pub fn sigma(&self) -> Vec<Real> {
        (0..self.log_g.len()).map(|i| self.sigma0 + self.ds * i as Real).collect()
    }

    pub fn g_at(&self, rho: Real) -> Option<Real> {
        UniformCubic::new(self.sigma0, self.ds, self.log_g.clone())?.eval(rho.ln()).map(Real::exp)
    }
}

pub fn invert(profile: &Profile) -> Inverted {
    let p = profile.params();
    let far = p.far_exponent();
    let f = profile.f();
    let s = profile.s_grid();
    // σ = −s; ln g(σ) = −(n−2)σ/m + ln f(e^{−σ}).
    let log_g: Vec<Real> = s.iter().zip(&f).rev().map(|(&si, &fi)| far * si + fi.ln()).collect();
    Inverted { sigma0: -profile.s_max(), ds: profile.ds(), log_g }
}

/// Inverse of [`invert`]: `f(r) = r^{−(n−2)/m} g(1/r)`.
pub fn uninvert_at(p: &Params, g: &Inverted, r: Real) -> Option<Real> {
    g.g_at(1.0 / r).map(|v| r.powf(-p.far_exponent()) * v)
}

#[derive(Debug, Clone, Serialize)]
pub struct InversionReport {
    /// Largest relative defect of the `g` equation on `ρ ∈ [1e−2, 1e2]`.
    pub residual_max: Real,
    /// `g` at the smallest resolved `ρ`, and the far-field coefficient it approaches.
    pub g_near_origin: Real,
    pub eta_inf: Real,
    /// `ρg_ρ` at the smallest resolved `ρ`.
    pub rho_g_rho_near_origin: Real,
    /// Minimum of `(C₁g + ρg_ρ)/g` over the grid.
    pub min_c1_g_plus_rho_g_rho: Real,
    /// Largest relative error in `f` after inverting twice, at cell midpoints.
    pub double_inversion_error: Real,
}

/// Checks the inverted equation
/// `(g^m/m)'' + (n−1)(g^m/m)'/ρ + ρ^{(n−2−nm)/m − 2}(α̃g + β̃ρg_ρ) = 0`
/// with `α̃ = α − (n−2)β/m`, `β̃ = −β`.
pub fn inversion_check(profile: &Profile) -> Result<InversionReport> {
    let p = profile.params();
    let m = p.m();
    let n2 = p.nf() - 2.0;
    let at = p.alpha() - n2 / m * p.beta();
    let bt = -p.beta();
    let pe = (n2 - p.nf() * m) / m;
    let inv = invert(profile);
    let ds = inv.ds;
    let lg = &inv.log_g;
    let (Some(g1), Some(g2)) = (first_derivative(lg, ds), second_derivative(lg, ds)) else {
        return Err(Error::Resolution("profile too short to invert".into()));
    };
    let sig = inv.sigma();
    let c1 = profile.fp_constants().c1;
    let mut residual_max: Real = 0.0;
    let mut min_ratio = Real::INFINITY;
    for i in 0..lg.len() {
        min_ratio = min_ratio.min(c1 + g1[i]);
        let rho = sig[i].exp();
        if !(1e-2..=1e2).contains(&rho) {
            continue;
        }
        // Multiplied by ρ² g^{−m}:
        // G'' + mG'² + (n−2)G' + ρ^{p} e^{(1−m)G}(α̃ + β̃G') with G = ln g, ' = d/dσ.
        let src = (pe * sig[i] + (1.0 - m) * lg[i]).exp();
        let terms = [g2[i], m * g1[i] * g1[i], n2 * g1[i], src * at, src * bt * g1[i]];
        let sum: Real = terms.iter().sum();
        let scale = terms.iter().fold(0.0, |a: Real, t| a.max(t.abs()));
        residual_max = residual_max.max(sum.abs() / scale);
    }
    let mut double = 0.0;
    let s = profile.s_grid();
    for w in s.windows(2) {
        let r = (0.5 * (w[0] + w[1])).exp();
        if !(1e-2..=1e2).contains(&r) {
            continue;
        }
        let (Some(back), Some(direct)) = (uninvert_at(p, &inv, r), profile.f_at(r)) else { continue };
        double = Real::max(double, ((back - direct) / direct).abs());
    }
    Ok(InversionReport {
        residual_max,
        g_near_origin: lg[0].exp(),
        eta_inf: profile.eta_inf(),
        rho_g_rho_near_origin: g1[0] * lg[0].exp(),
        min_c1_g_plus_rho_g_rho: min_ratio,
        double_inversion_error: double,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OriginSeriesReport {
    /// `(ρ, |r^γf − series|/ρ²)` over `ρ ∈ [1e−3, 1e−2]`, decreasing `ρ`.
    pub scaled_deviation: Vec<(Real, Real)>,
    /// Whether the scaled deviation decreases monotonically as `ρ → 0`.
    pub deviation_decreasing: bool,
    /// Extrapolated `lim r^{γ+1} f_r` and its closed form `−γη`.
    pub fr_limit: Real,
    pub fr_limit_ref: Real,
    /// Coefficient of `ρ` in `r^{γ+1}f_r` and its closed form
    /// `−(2β−mρ₁)a₃η^m/((1−m)a₂β)`.
    pub fr_coef: Real,
    pub fr_coef_ref: Real,
    pub fr_coef_rel_err: Real,
}

/// Compares `f` and `f_r` near the origin with their series in `ρ = r^{ρ₁/β′}`.
pub fn origin_series_check(profile: &Profile, ec: &ExpansionConstants<Real>, eta: Real) -> Result<OriginSeriesReport> {
    require_origin_resolution(profile)?;
    let p = profile.params();
    let k = kappa(p);
    let (m, g) = (p.m(), p.gamma());
    let d1 = ec.a3 / ec.a2 * eta.powf(m);
    let half_d2 = ec.a3 * (m * ec.a3 - ec.a1) / (2.0 * ec.a2 * ec.a2) * eta.powf(2.0 * m - 1.0);
    let mut scaled = Vec::new();
    for j in 0..=40 {
        let rho = 1e-2 * 10f64.powf(-(j as Real) / 40.0);
        let w = wbar(profile, rho).ok_or_else(|| Error::Resolution(format!("no data at rho = {rho}")))?;
        let series = eta + d1 * rho + half_d2 * rho * rho;
        scaled.push((rho, (w - series).abs() / (rho * rho)));
    }
    let deviation_decreasing = scaled.windows(2).all(|w| w[1].1 < w[0].1);

    // r^{γ+1} f_r = w̃ (ln w̃)_s − γ w̃, as a function of ρ.
    let fr = |rho: Real| profile.lw_at(rho.ln() / k).map(|(l, dl)| l.exp() * (dl - g));
    let rho_lo = (k * profile.s_min()).exp();
    let levels = 7;
    let lim_samples: Vec<Real> = (0..levels)
        .map(|j| fr(rho_lo * 2f64.powi((levels - 1 - j) as i32)).ok_or_else(|| Error::Resolution("no data near origin".into())))
        .collect::<Result<_>>()?;
    let orders: Vec<Real> = (1..levels).map(|v| v as Real).collect();
    let lim = richardson_table(&lim_samples, 2.0, &orders).expect("non-empty");
    let coef_fits = window_fits(fr)?;
    let coefs: Vec<Real> = coef_fits.iter().map(|c| c.0).collect();
    let o1: Vec<Real> = (2..WINDOW_LEVELS + 1).map(|v| v as Real).collect();
    let coef = richardson_table(&coefs, 2.0, &o1).expect("non-empty");
    let (b, r1) = (p.beta(), p.rho1());
    let fr_coef_ref = -(2.0 * b - m * r1) * ec.a3 / ((1.0 - m) * ec.a2 * b) * eta.powf(m);
    Ok(OriginSeriesReport {
        scaled_deviation: scaled,
        deviation_decreasing,
        fr_limit: lim.value,
        fr_limit_ref: -g * eta,
        fr_coef: coef.value,
        fr_coef_ref,
        fr_coef_rel_err: ((coef.value - fr_coef_ref) / fr_coef_ref).abs(),
    })
}
