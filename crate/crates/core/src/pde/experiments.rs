//! Weighted L¹ contraction between sandwiched solutions and convergence of
//! rescaled solutions to a self-similar profile.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::rescale::rescale_field;
use super::solver::{evolve_lockstep, evolve_sampled, EvolveConfig, EvolveStats};
use super::{self_similar_value, Boundary, LogGrid, RadialField};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::weight::{weighted_l1, L1Mode, WeightFunction};
use crate::Real;

/// Relative slack allowed in `V_{λ₁} ≤ u ≤ V_{λ₂}`.
pub const SANDWICH_SLACK: Real = 1e-8;

/// Relative slack in the order check; nodes where `u = v` initially only stay
/// equal up to the Newton tolerance.
pub const ORDER_SLACK: Real = 1e-9;

fn order_gap(u: &[Real], v: &[Real]) -> Real {
    u.iter().zip(v).map(|(a, b)| (a - b) / b).fold(Real::INFINITY, Real::min)
}

/// The self-similar solutions `V_{λ₁} ≤ V_{λ₀} ≤ V_{λ₂}` whose initial
/// traces are `A_i|x|^{−γ}`.
#[derive(Debug, Clone)]
pub struct SandwichFamily {
    pub profile: Arc<Profile>,
    pub amplitudes: [Real; 3],
    /// `[λ₁, λ₀, λ₂]`.
    pub lambdas: [Real; 3],
}

impl SandwichFamily {
    /// Requires `A₁ < A₀ < A₂` and `ρ₁ = 1`, the value for which the profile
    /// generates solutions of the evolution equation.
    pub fn new(profile: Arc<Profile>, a0: Real, a1: Real, a2: Real) -> Result<Self> {
        let p = profile.params();
        if (p.rho1() - 1.0).abs() > 1e-12 {
            return Err(Error::Range(format!("evolution needs rho1 = 1, got {}", p.rho1())));
        }
        if !(a1 > 0.0 && a1 < a0 && a0 < a2 && a2.is_finite()) {
            return Err(Error::Range(format!("need 0 < A1 < A0 < A2, got {a1}, {a0}, {a2}")));
        }
        // f_λ(r) ≈ λ^{k−γ}η r^{−γ} near the origin, and 1/(k−γ) = (1−m)β.
        let e = (1.0 - p.m()) * p.beta();
        let eta = profile.eta_origin();
        let lam = |a: Real| (a / eta).powf(e);
        Ok(Self { profile, amplitudes: [a1, a0, a2], lambdas: [lam(a1), lam(a0), lam(a2)] })
    }

    pub fn lambda0(&self) -> Real {
        self.lambdas[1]
    }

    /// `V_{λ}(r, t)` for the member `i` (0 lower, 1 centre, 2 upper).
    pub fn value(&self, i: usize, r: Real, t: Real) -> Result<Real> {
        self_similar_value(&self.profile, self.lambdas[i], r, t)
    }

    pub fn values(&self, i: usize, grid: &LogGrid, t: Real) -> Result<Vec<Real>> {
        grid.radii().iter().map(|&r| self.value(i, r, t)).collect()
    }

    pub fn centre_boundary(&self) -> Boundary {
        Boundary::SelfSimilar { profile: self.profile.clone(), lambda: self.lambda0() }
    }

    /// Smallest relative margin of `field` inside the sandwich; an error if
    /// it is below `−SANDWICH_SLACK`.
    pub fn check(&self, field: &RadialField) -> Result<Real> {
        let lo = self.values(0, &field.grid, field.t)?;
        let hi = self.values(2, &field.grid, field.t)?;
        let mut margin = Real::INFINITY;
        for (i, &u) in field.u.iter().enumerate() {
            let m = ((u - lo[i]) / lo[i]).min((hi[i] - u) / hi[i]);
            if m < -SANDWICH_SLACK {
                return Err(Error::SandwichViolation(format!(
                    "u = {u:e} outside [{:e}, {:e}] at r = {:e}, t = {}",
                    lo[i],
                    hi[i],
                    field.grid.r(i),
                    field.t
                )));
            }
            margin = margin.min(m);
        }
        Ok(margin)
    }
}

/// Smooth bump with support `(ln r_lo, ln r_hi)` in `ln r`, equal to 1 at the centre.
pub fn log_bump(r: Real, r_lo: Real, r_hi: Real) -> Real {
    let (a, b) = (r_lo.ln(), r_hi.ln());
    let xi = (2.0 * r.ln() - a - b) / (b - a);
    if xi.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - xi * xi)).exp()
    }
}

/// `u = V_{λ₀} + a(V_{λ₂} − V_{λ₀})` where `a ≥ 0` and `V_{λ₀} + a(V_{λ₀} − V_{λ₁})`
/// where `a < 0`, for a random smooth `a` with `|a| ≤ 0.85`, vanishing near
/// both ends of the grid. Both fields carry the `V_{λ₀}` traces.
pub fn random_sandwiched_pair(
    family: &SandwichFamily,
    grid: &LogGrid,
    t0: Real,
    rng: &mut impl Rng,
) -> Result<(RadialField, RadialField)> {
    let mut draw = || -> Result<RadialField> {
        let bumps: Vec<(Real, Real, Real)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.1f64.ln()..10f64.ln()), rng.gen_range(0.3..1.0)))
            .collect();
        let (win_lo, win_hi) = (grid.r_in().sqrt() * 0.1f64.sqrt(), grid.r_out().sqrt() * 10f64.sqrt());
        let raw: Vec<Real> = grid
            .radii()
            .iter()
            .map(|&r| {
                let x = r.ln();
                let s: Real = bumps.iter().map(|(a, c, w)| a * (-(x - c).powi(2) / (2.0 * w * w)).exp()).sum();
                s * log_bump(r, win_lo, win_hi)
            })
            .collect();
        let peak = raw.iter().fold(0.0, |m: Real, v| m.max(v.abs()));
        let scale = if peak > 0.85 { 0.85 / peak } else { 1.0 };
        let (lo, mid, hi) = (family.values(0, grid, t0)?, family.values(1, grid, t0)?, family.values(2, grid, t0)?);
        let u = raw
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let a = a * scale;
                if a >= 0.0 {
                    mid[i] + a * (hi[i] - mid[i])
                } else {
                    mid[i] + a * (mid[i] - lo[i])
                }
            })
            .collect();
        let p = family.profile.params();
        RadialField::new(p.n(), p.m(), grid.clone(), u, t0, family.centre_boundary())
    };
    Ok((draw()?, draw()?))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    /// Starting time followed by the sample times.
    pub times: Vec<Real>,
    pub dist_abs: Vec<Real>,
    pub dist_pos: Vec<Real>,
    /// When `u₀ ≥ v₀`, whether `u ≥ v(1 − ORDER_SLACK)` held at every sample.
    pub order_preserved: Option<bool>,
    /// Smallest `(u − v)/v` over nodes and samples.
    pub min_order_gap: Real,
    pub min_sandwich_margin: Real,
    pub stats: EvolveStats,
}

impl ContractionReport {
    /// Largest increase between consecutive samples, relative to `1 + initial`,
    /// over both distances.
    pub fn worst_increase(&self) -> Real {
        let rise = |d: &[Real]| d.windows(2).map(|w| (w[1] - w[0]) / (1.0 + d[0])).fold(Real::NEG_INFINITY, Real::max);
        rise(&self.dist_abs).max(rise(&self.dist_pos))
    }
}

/// Evolves `u0` and `v0` with a shared step sequence and records both
/// weighted distances at the start and at each time in `times`.
pub fn contraction_experiment(
    u0: RadialField,
    v0: RadialField,
    weight: &WeightFunction<Real>,
    family: &SandwichFamily,
    times: &[Real],
    cfg: &EvolveConfig,
) -> Result<ContractionReport> {
    if u0.grid != v0.grid || u0.t != v0.t {
        return Err(Error::GridMismatch("contraction pair must share grid and time".into()));
    }
    let mut margin = family.check(&u0)?.min(family.check(&v0)?);
    let r = u0.grid.radii();
    let ordered = u0.u.iter().zip(&v0.u).all(|(a, b)| a >= b);
    let mut gap = order_gap(&u0.u, &v0.u);
    let mut report = ContractionReport {
        times: vec![u0.t],
        dist_abs: vec![weighted_l1(weight, &r, &u0.u, &v0.u, L1Mode::Abs)?],
        dist_pos: vec![weighted_l1(weight, &r, &u0.u, &v0.u, L1Mode::PositivePart)?],
        order_preserved: ordered.then_some(true),
        min_order_gap: gap,
        min_sandwich_margin: 0.0,
        stats: EvolveStats::default(),
    };
    let mut fields = [u0, v0];
    let stats = evolve_lockstep(&mut fields, cfg, times, |_, f| {
        margin = margin.min(family.check(&f[0])?).min(family.check(&f[1])?);
        report.times.push(f[0].t);
        report.dist_abs.push(weighted_l1(weight, &r, &f[0].u, &f[1].u, L1Mode::Abs)?);
        report.dist_pos.push(weighted_l1(weight, &r, &f[0].u, &f[1].u, L1Mode::PositivePart)?);
        gap = gap.min(order_gap(&f[0].u, &f[1].u));
        Ok(())
    })?;
    if let Some(ok) = report.order_preserved.as_mut() {
        *ok = gap >= -ORDER_SLACK;
    }
    report.min_order_gap = gap;
    report.min_sandwich_margin = margin;
    report.stats = stats;
    Ok(report)
}

/// Multiplicative perturbation `1 + amplitude·bump` supported on `(r_lo, r_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub amplitude: Real,
    pub r_lo: Real,
    pub r_hi: Real,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { amplitude: 0.3, r_lo: 1.0, r_hi: 4.0 }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub family: SandwichFamily,
    pub grid: LogGrid,
    /// Starting time; the initial trace `A₀|x|^{−γ}` is represented by `V_{λ₀}(·, t₀)`.
    pub t0: Real,
    pub perturbation: Option<PerturbationSpec>,
    /// Values of `τ = ln t` at which to measure, increasing and above `ln t₀`.
    pub tau_grid: Vec<Real>,
    /// Annulus in `y` for the sup distance.
    pub compact: (Real, Real),
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub t: Vec<Real>,
    pub tau: Vec<Real>,
    /// `‖ũ(·,τ) − f_{λ₀}‖_{L¹(φ)} / ‖f_{λ₀}‖_{L¹(φ)}` over the reference `y` grid.
    pub dist_l1w: Vec<Real>,
    /// `max |ũ − f_{λ₀}|/f_{λ₀}` over reference nodes inside `compact`.
    pub dist_sup_compact: Vec<Real>,
    /// Weighted distance of the initial data from `V_{λ₀}(·, t₀)`.
    pub initial_l1w: Real,
    pub y_range: (Real, Real),
    pub min_sandwich_margin: Real,
    pub stats: EvolveStats,
}

/// Evolves `V_{λ₀}(·, t₀)` (optionally perturbed) with `V_{λ₀}` traces and
/// measures the rescaled solution against `f_{λ₀}` at each `τ`.
pub fn convergence_experiment(
    setup: &ConvergenceSetup,
    weight: &WeightFunction<Real>,
    cfg: &EvolveConfig,
) -> Result<ConvergenceReport> {
    let fam = &setup.family;
    let p = *fam.profile.params();
    let (t0, grid) = (setup.t0, &setup.grid);
    let taus = &setup.tau_grid;
    if !(t0 > 0.0) || taus.is_empty() || !(taus[0] >= t0.ln()) || taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Range("tau grid must increase from ln t0".into()));
    }
    let radii = grid.radii();
    let centre = fam.values(1, grid, t0)?;
    let u0: Vec<Real> = match setup.perturbation {
        Some(q) => radii.iter().zip(&centre).map(|(&r, v)| v * (1.0 + q.amplitude * log_bump(r, q.r_lo, q.r_hi))).collect(),
        None => centre.clone(),
    };
    let mut field = RadialField::new(p.n(), p.m(), grid.clone(), u0, t0, fam.centre_boundary())?;
    if setup.perturbation.is_none() {
        // Unperturbed data are V_{λ₀}(·, t₀), the solution with trace A₀|x|^{−γ} at t = 0.
        field = field.with_origin(0.0)?;
    }
    let mut margin = fam.check(&field)?;
    let initial_l1w = weighted_l1(weight, &radii, &field.u, &centre, L1Mode::Abs)?;
    if !initial_l1w.is_finite() {
        return Err(Error::Range("initial perturbation has infinite weighted norm".into()));
    }

    // Reference y-range covered by the field at every requested τ.
    let bp = p.beta_p();
    let (tau_lo, tau_hi) = (taus[0], taus[taus.len() - 1]);
    let y_lo = grid.r_in() * (bp * tau_hi).exp() * (1.0 + 1e-9);
    let y_hi = grid.r_out() * (bp * tau_lo).exp() * (1.0 - 1e-9);
    let ygrid = LogGrid::new(y_lo, y_hi, grid.cells())?;
    let y = ygrid.radii();
    let f0: Vec<Real> = y.iter().map(|&v| fam.value(1, v, 1.0)).collect::<Result<_>>()?;
    let zero = vec![0.0; y.len()];
    let norm = weighted_l1(weight, &y, &f0, &zero, L1Mode::Abs)?;

    let mut report = ConvergenceReport {
        t: Vec::new(),
        tau: Vec::new(),
        dist_l1w: Vec::new(),
        dist_sup_compact: Vec::new(),
        initial_l1w,
        y_range: (y_lo, y_hi),
        min_sandwich_margin: 0.0,
        stats: EvolveStats::default(),
    };
    let mut record = |f: &RadialField| -> Result<()> {
        margin = margin.min(fam.check(f)?);
        let res = rescale_field(f, &p, &y)?;
        report.t.push(f.t);
        report.tau.push(res.tau);
        report.dist_l1w.push(weighted_l1(weight, &y, &res.u, &f0, L1Mode::Abs)? / norm);
        let sup = y
            .iter()
            .zip(res.u.iter().zip(&f0))
            .filter(|(&v, _)| v >= setup.compact.0 && v <= setup.compact.1)
            .map(|(_, (a, b))| (a - b).abs() / b)
            .fold(0.0, Real::max);
        report.dist_sup_compact.push(sup);
        Ok(())
    };
    let mut stats = EvolveStats::default();
    let start = taus[0].exp();
    let field = if start > t0 * (1.0 + 1e-14) {
        let (f, s) = evolve_sampled(field, cfg, &[start], |_| Ok(()))?;
        stats.merge(&s);
        f
    } else {
        field
    };
    record(&field)?;
    let rest: Vec<Real> = taus[1..].iter().map(|v| v.exp()).collect();
    if !rest.is_empty() {
        let (_, s) = evolve_sampled(field, cfg, &rest, &mut record)?;
        stats.merge(&s);
    }
    report.min_sandwich_margin = margin;
    report.stats = stats;
    Ok(report)
}
