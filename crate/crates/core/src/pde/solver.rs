//! Backward Euler in time with a Newton solve per step.

use serde::Serialize;

use super::{LogGrid, RadialField};
use crate::error::{Error, Result};
use crate::numerics::linalg::solve_tridiagonal;
use crate::Real;

const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveConfig {
    pub dt_init: Real,
    pub dt_max: Real,
    /// Upper bound on `dt/t`; the self-similar time scale is `t` itself.
    pub dt_max_rel: Real,
    pub dt_min: Real,
    /// Factor applied to `dt` after a cheap Newton solve.
    pub growth: Real,
    /// Newton stops once `max |δu|/u` is below this.
    pub newton_tol: Real,
    pub newton_max: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_max: 1.0,
            dt_max_rel: 2e-3,
            dt_min: 1e-14,
            growth: 1.25,
            newton_tol: 1e-11,
            newton_max: 25,
        }
    }
}

impl EvolveConfig {
    /// Constant steps of size `dt`.
    pub fn fixed(dt: Real) -> Self {
        Self { dt_init: dt, dt_max: dt, dt_max_rel: Real::INFINITY, growth: 1.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: Real| v > 0.0 && !v.is_nan();
        let ok = pos(self.dt_init)
            && pos(self.dt_max)
            && pos(self.dt_max_rel)
            && pos(self.dt_min)
            && self.dt_min <= self.dt_init
            && self.growth >= 1.0
            && pos(self.newton_tol)
            && self.newton_max > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Range(format!("invalid evolve configuration {self:?}")))
        }
    }
}

/// Counters and the worst observed Aronson–Bénilan excess over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveStats {
    pub steps: usize,
    pub rejected: usize,
    pub newton_iterations: usize,
    /// Largest `((u^{k+1}−u^k)/dt − b)/b` with `b = u^{k+1}/((1−m)(t^{k+1} − t_origin))`,
    /// over all nodes and steps; non-positive when the bound holds.
    pub ab_excess: Real,
    pub min_u: Real,
}

impl Default for EvolveStats {
    fn default() -> Self {
        Self { steps: 0, rejected: 0, newton_iterations: 0, ab_excess: Real::NEG_INFINITY, min_u: Real::INFINITY }
    }
}

impl EvolveStats {
    pub fn merge(&mut self, other: &EvolveStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.newton_iterations += other.newton_iterations;
        self.ab_excess = self.ab_excess.max(other.ab_excess);
        self.min_u = self.min_u.min(other.min_u);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted { u: Vec<Real>, iterations: usize },
    /// Newton did not reach the tolerance; retry with a smaller step.
    Rejected { residual: Real },
}

struct Operator {
    mass: Vec<Real>,
    // Face coefficient between nodes i and i+1.
    flux: Vec<Real>,
    m: Real,
}

impl Operator {
    fn new(grid: &LogGrid, n: usize, m: Real) -> Self {
        let dx = grid.dx();
        let nf = n as Real;
        let mass = (0..grid.len()).map(|i| (nf * grid.x(i)).exp() * dx).collect();
        let flux = (0..grid.cells()).map(|i| ((nf - 2.0) * (grid.x(i) + 0.5 * dx)).exp() / dx).collect();
        Self { mass, flux, m }
    }

    fn phi(&self, u: Real) -> Real {
        u.powf(self.m) / self.m
    }

    fn dphi(&self, u: Real) -> Real {
        u.powf(self.m - 1.0)
    }
}

/// One backward Euler step of size `dt` from `field`.
///
/// Newton starts from the old state with the new boundary values and
/// halves its update until every node stays positive.
pub fn step(field: &RadialField, dt: Real, cfg: &EvolveConfig) -> Result<StepOutcome> {
    let op = Operator::new(&field.grid, field.n, field.m);
    step_with(&op, field, dt, cfg)
}

fn step_with(op: &Operator, field: &RadialField, dt: Real, cfg: &EvolveConfig) -> Result<StepOutcome> {
    let len = field.u.len();
    let last = len - 1;
    let t_new = field.t + dt;
    let (left, right) = field.bc.traces(&field.grid, t_new)?;
    let old = &field.u;
    let mut u = old.clone();
    u[0] = left;
    u[last] = right;
    let k = len - 2;
    let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut phi: Vec<Real> = u.iter().map(|&v| op.phi(v)).collect();
    let mut resid = Real::INFINITY;
    for it in 1..=cfg.newton_max {
        for j in 0..k {
            let i = j + 1;
            let (cl, cr) = (op.flux[i - 1], op.flux[i]);
            let md = op.mass[i] / dt;
            let f = md * (u[i] - old[i]) - (cr * (phi[i + 1] - phi[i]) - cl * (phi[i] - phi[i - 1]));
            rhs[j] = -f;
            diag[j] = md + (cl + cr) * op.dphi(u[i]);
            sub[j] = if j > 0 { -cl * op.dphi(u[i - 1]) } else { 0.0 };
            sup[j] = if j + 1 < k { -cr * op.dphi(u[i + 1]) } else { 0.0 };
        }
        let delta = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        resid = delta.iter().enumerate().map(|(j, d)| (d / u[j + 1]).abs()).fold(0.0, Real::max);
        if !resid.is_finite() {
            return Ok(StepOutcome::Rejected { residual: resid });
        }
        let mut theta = 1.0;
        let mut tries = 0;
        while delta.iter().enumerate().any(|(j, d)| !(u[j + 1] + theta * d > 0.0)) {
            theta *= 0.5;
            tries += 1;
            if tries > MAX_BACKTRACKS {
                return Err(Error::Positivity(format!(
                    "Newton update cannot keep u positive at t = {t_new} with dt = {dt}"
                )));
            }
        }
        for (j, d) in delta.iter().enumerate() {
            u[j + 1] += theta * d;
            phi[j + 1] = op.phi(u[j + 1]);
        }
        if theta == 1.0 && resid <= cfg.newton_tol {
            return Ok(StepOutcome::Accepted { u, iterations: it });
        }
    }
    Ok(StepOutcome::Rejected { residual: resid })
}

fn ab_excess(old: &[Real], new: &[Real], dt: Real, elapsed: Real, m: Real) -> Real {
    old.iter()
        .zip(new)
        .map(|(&a, &b)| {
            let bound = b / ((1.0 - m) * elapsed);
            ((b - a) / dt - bound) / bound
        })
        .fold(Real::NEG_INFINITY, Real::max)
}

/// Advances every field to each time in `times` (increasing, beyond the
/// current time) with one shared step sequence, calling `on_sample` at each.
///
/// All fields must sit at the same time. A step is retried at half size
/// whenever Newton fails for any of them.
pub fn evolve_lockstep<F>(fields: &mut [RadialField], cfg: &EvolveConfig, times: &[Real], mut on_sample: F) -> Result<EvolveStats>
where
    F: FnMut(usize, &[RadialField]) -> Result<()>,
{
    cfg.validate()?;
    let Some(first) = fields.first() else {
        return Err(Error::Range("no fields to evolve".into()));
    };
    let t0 = first.t;
    if fields.iter().any(|f| f.t != t0) {
        return Err(Error::Range("fields in lockstep must share their time".into()));
    }
    if times.iter().any(|&t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|&t| !(t > t0)) {
        return Err(Error::Range(format!("sample times must increase past t = {t0}")));
    }
    let ops: Vec<_> = fields.iter().map(|f| (Operator::new(&f.grid, f.n, f.m), f.m)).collect();
    let mut stats = EvolveStats::default();
    let mut dt = cfg.dt_init;
    for (k, &target) in times.iter().enumerate() {
        loop {
            let t = fields[0].t;
            let remaining = target - t;
            if remaining <= 1e-13 * target.abs().max(1.0) {
                break;
            }
            let mut trial = dt.min(cfg.dt_max);
            if t > 0.0 {
                trial = trial.min(cfg.dt_max_rel * t);
            }
            // Land on the target exactly and avoid a sliver step after it.
            let hit = trial >= remaining || trial > 0.999 * remaining;
            if hit {
                trial = remaining;
            } else if trial > 0.5 * remaining {
                trial = 0.5 * remaining;
            }
            let mut results = Vec::with_capacity(fields.len());
            let mut failed = None;
            for (f, (op, _)) in fields.iter().zip(&ops) {
                match step_with(op, f, trial, cfg)? {
                    StepOutcome::Accepted { u, iterations } => results.push((u, iterations)),
                    StepOutcome::Rejected { residual } => {
                        failed = Some(residual);
                        break;
                    }
                }
            }
            if let Some(residual) = failed {
                stats.rejected += 1;
                dt = 0.5 * trial;
                if dt < cfg.dt_min {
                    return Err(Error::NewtonDivergence(format!(
                        "step size fell below {} at t = {t} (last update {residual:e})",
                        cfg.dt_min
                    )));
                }
                continue;
            }
            let t_new = if hit { target } else { t + trial };
            let mut worst = 0;
            for ((f, (u, its)), (_, m)) in fields.iter_mut().zip(results).zip(&ops) {
                let elapsed = t_new - f.t_origin;
                if elapsed > 0.0 {
                    stats.ab_excess = stats.ab_excess.max(ab_excess(&f.u, &u, trial, elapsed, *m));
                }
                stats.min_u = u.iter().copied().fold(stats.min_u, Real::min);
                stats.newton_iterations += its;
                worst = worst.max(its);
                f.u = u;
                f.t = t_new;
            }
            stats.steps += 1;
            if !hit {
                dt = trial;
            }
            if worst <= 3 {
                dt *= cfg.growth;
            } else if 4 * worst >= 3 * cfg.newton_max {
                dt *= 0.7;
            }
            dt = dt.max(cfg.dt_min);
        }
        on_sample(k, fields)?;
    }
    Ok(stats)
}

/// Evolves `field` to `t_end`.
pub fn evolve(field: RadialField, cfg: &EvolveConfig, t_end: Real) -> Result<(RadialField, EvolveStats)> {
    let mut fields = [field];
    let stats = evolve_lockstep(&mut fields, cfg, &[t_end], |_, _| Ok(()))?;
    let [field] = fields;
    Ok((field, stats))
}

/// Evolves `field` through `times`, handing each intermediate state to `on_sample`.
pub fn evolve_sampled<F>(field: RadialField, cfg: &EvolveConfig, times: &[Real], mut on_sample: F) -> Result<(RadialField, EvolveStats)>
where
    F: FnMut(&RadialField) -> Result<()>,
{
    let mut fields = [field];
    let stats = evolve_lockstep(&mut fields, cfg, times, |_, f| on_sample(&f[0]))?;
    let [field] = fields;
    Ok((field, stats))
}
