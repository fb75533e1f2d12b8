use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use fdx::asymptotics::{expansion_check, f_ode_residual, inversion_check, origin_series_check, wbar_ode_residual};
use fdx::params::{derive_expansion_constants, derive_fp_constants, ParamSet};
use fdx::pde::{
    contraction_experiment, convergence_experiment, evolve_sampled, log_bump, random_sandwiched_pair, self_similar_value,
    Boundary, ConvergenceSetup, EvolveConfig, LogGrid, PerturbationSpec, RadialField, SandwichFamily,
};
use fdx::profile::{build_profile, solve_for_eta, Profile, ProfileConfig};
use fdx::weight::{build_weight, weighted_l1, BumpSpec, L1Mode, WeightFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{load_file, output_dir, profile_config, resolve_params, CommonArgs, FileConfig, ParamArgs, ResolvedParams};
use crate::output::{csv, Artifacts};
use crate::CliError;

type Run = Result<(PathBuf, Artifacts), CliError>;

const WEIGHT_TOL: f64 = 1e-11;

#[derive(Debug, Serialize)]
struct Constants {
    alpha: f64,
    beta: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
    c5: f64,
    eps1: f64,
    b0: f64,
    b1: f64,
    a1: f64,
    a2: f64,
    a3: f64,
    mu: f64,
    a4: f64,
    a5: f64,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: &'static str,
    version: &'static str,
    params: ResolvedParams,
    constants: Constants,
    settings: Value,
}

fn default_mu(n: usize) -> f64 {
    (n as f64 - 2.0) / 2.0
}

fn manifest(command: &'static str, params: &ResolvedParams, mu: Option<f64>, settings: Value) -> Result<Manifest, CliError> {
    let p = params.param_set()?;
    let fp = derive_fp_constants(&p, params.eta_inf, params.b1_margin)?;
    let ec = derive_expansion_constants(&p)?;
    let mu = mu.unwrap_or_else(|| default_mu(params.n));
    let w = build_weight(BumpSpec::new(mu, params.n)?, WEIGHT_TOL)?;
    Ok(Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        params: *params,
        constants: Constants {
            alpha: p.alpha(),
            beta: p.beta(),
            c1: fp.c1,
            c2: fp.c2,
            c3: fp.c3,
            c4: fp.c4,
            c5: fp.c5,
            eps1: fp.eps1,
            b0: fp.b0,
            b1: fp.b1,
            a1: ec.a1,
            a2: ec.a2,
            a3: ec.a3,
            mu,
            a4: w.a4(),
            a5: w.a5(),
        },
        settings,
    })
}

struct Setup {
    params: ResolvedParams,
    p: ParamSet<f64>,
    file: FileConfig,
    dir: PathBuf,
}

fn setup(common: &CommonArgs, flags: &ParamArgs) -> Result<Setup, CliError> {
    let file = load_file(common.config.as_deref())?;
    let params = resolve_params(flags, &file)?;
    let p = params.param_set()?;
    let dir = output_dir(common, &file);
    Ok(Setup { params, p, file, dir })
}

fn make_profile(s: &Setup, eta: Option<f64>) -> Result<(Profile, ProfileConfig), CliError> {
    let cfg = profile_config(&s.params, &s.file);
    let prof = match eta {
        Some(target) => solve_for_eta(&s.p, target, &cfg)?,
        None => build_profile(&s.p, s.params.eta_inf, &cfg)?,
    };
    Ok((prof, cfg))
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Target coefficient of r^{-γ} at the origin; without it the profile is built from --eta-inf.
    #[arg(long)]
    eta: Option<f64>,
}

pub fn profile(a: ProfileArgs) -> Run {
    let s = setup(&a.common, &a.params)?;
    let (prof, cfg) = make_profile(&s, a.eta)?;
    let rows = prof
        .s_grid()
        .into_iter()
        .zip(prof.r_grid())
        .zip(prof.h().iter().zip(prof.wt()))
        .zip(prof.f().into_iter().zip(prof.rfr_over_f()))
        .map(|(((s, r), (&h, wt)), (f, q))| vec![s, r, h, wt, f, q]);
    let mut out = Artifacts::default();
    out.text("profile.csv", csv(&[], &["s", "r", "h", "wt", "f", "rfr_over_f"], rows));
    out.json(
        "summary.json",
        &json!({
            "eta_origin": prof.eta_origin(),
            "eta_origin_error": prof.eta_origin_error(),
            "eta_inf": prof.eta_inf(),
            "lambda": prof.lambda(),
            "fp_residual": prof.fp_residual(),
            "ode_residual_max": f_ode_residual(&prof),
            "iterations": prof.iterations(),
            "contraction_ratios": prof.contraction_ratios(),
            "s_min": prof.s_min(),
            "s_max": prof.s_max(),
        }),
    )?;
    let settings = json!({ "eta": a.eta, "profile": format!("{cfg:?}") });
    out.json("manifest.json", &manifest("profile", &s.params, None, settings)?)?;
    Ok((s.dir, out))
}

#[derive(Debug, Clone, Args)]
pub struct ExpansionArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Origin coefficient of the checked profile.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

pub fn expansion(a: ExpansionArgs) -> Run {
    let s = setup(&a.common, &a.params)?;
    let (prof, _) = make_profile(&s, Some(a.eta))?;
    let ec = derive_expansion_constants(&s.p)?;
    let exp = expansion_check(&prof, &ec)?;
    let inv = inversion_check(&prof)?;
    let series = origin_series_check(&prof, &ec, exp.eta)?;
    let mut out = Artifacts::default();
    out.json(
        "expansion.json",
        &json!({
            "expansion": exp,
            "inversion": inv,
            "origin_series": series,
            "f_residual_max": f_ode_residual(&prof),
            "wbar_residual_max": wbar_ode_residual(&prof, &ec),
        }),
    )?;
    out.json("manifest.json", &manifest("expansion", &s.params, None, json!({ "eta": a.eta }))?)?;
    Ok((s.dir, out))
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Quadrature tolerance for the tabulated part.
    #[arg(long, default_value_t = WEIGHT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 100.0)]
    r_max: f64,
    /// Number of output radii, uniform in ln r on [0.5, r_max].
    #[arg(long, default_value_t = 1000)]
    points: usize,
}

fn weight_header(w: &WeightFunction<f64>) -> String {
    let spec = w.spec();
    format!("a4={:.16e} a5={:.16e} mu={:.16e} n={}", w.a4(), w.a5(), spec.mu, spec.n)
}

pub fn weight(a: WeightArgs) -> Run {
    let file = load_file(a.common.config.as_deref())?;
    let n = a.n.or(file.params.n).ok_or_else(|| CliError::Config("missing required parameter --n".into()))?;
    let mu = a.mu.ok_or_else(|| CliError::Config("missing required parameter --mu".into()))?;
    if !(a.r_max > 0.5) || a.points < 2 {
        return Err(CliError::Config("need --r-max > 0.5 and --points >= 2".into()));
    }
    let dir = output_dir(&a.common, &file);
    let w = build_weight(BumpSpec::new(mu, n)?, a.tol)?;
    let lo: f64 = 0.5;
    let step = (a.r_max / lo).ln() / (a.points - 1) as f64;
    let rows = (0..a.points).map(|i| {
        let r = if i + 1 == a.points { a.r_max } else { lo * (step * i as f64).exp() };
        let (p, dp) = w.eval(r);
        vec![r, p, dp]
    });
    let mut out = Artifacts::default();
    out.text("weight.csv", csv(&[weight_header(&w)], &["r", "phi", "dphi"], rows));
    out.json(
        "manifest.json",
        &json!({
            "command": "weight",
            "version": env!("CARGO_PKG_VERSION"),
            "settings": { "mu": mu, "n": n, "tol": a.tol, "r_max": a.r_max, "points": a.points },
            "constants": { "a4": w.a4(), "a5": w.a5(), "r0": w.r0() },
        }),
    )?;
    Ok((dir, out))
}

#[derive(Debug, Clone, Args)]
pub struct EvolveFlags {
    #[arg(long, default_value_t = 400)]
    cells: usize,
    #[arg(long, default_value_t = 1e-3)]
    r_in: f64,
    #[arg(long, default_value_t = 1e3)]
    r_out: f64,
    #[arg(long)]
    dt_init: Option<f64>,
    #[arg(long)]
    dt_max_rel: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Weight exponent; defaults to (n-2)/2.
    #[arg(long)]
    mu: Option<f64>,
}

impl EvolveFlags {
    fn config(&self) -> EvolveConfig {
        let d = EvolveConfig::default();
        EvolveConfig {
            dt_init: self.dt_init.unwrap_or(d.dt_init),
            dt_max_rel: self.dt_max_rel.unwrap_or(d.dt_max_rel),
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            ..d
        }
    }

    fn grid(&self) -> Result<LogGrid, CliError> {
        Ok(LogGrid::new(self.r_in, self.r_out, self.cells)?)
    }

    fn weight(&self, n: usize) -> Result<(f64, WeightFunction<f64>), CliError> {
        let mu = self.mu.unwrap_or_else(|| default_mu(n));
        Ok((mu, build_weight(BumpSpec::new(mu, n)?, WEIGHT_TOL)?))
    }
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| a + (b - a) * k as f64 / count as f64).collect()
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    pde: EvolveFlags,
    /// Origin coefficient of the underlying profile.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long, default_value_t = 2.0)]
    t_end: f64,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    /// Amplitude of a bump on 1 < r < 4 multiplying the initial data.
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
}

pub fn evolve(a: EvolveArgs) -> Run {
    let s = setup(&a.common, &a.params)?;
    if !(a.t_end > a.t0 && a.t0 > 0.0) || a.samples == 0 {
        return Err(CliError::Config("need 0 < --t0 < --t-end and --samples >= 1".into()));
    }
    let (prof, _) = make_profile(&s, Some(a.eta))?;
    let prof = Arc::new(prof);
    let grid = a.pde.grid()?;
    let cfg = a.pde.config();
    let (mu, w) = a.pde.weight(s.params.n)?;
    let radii = grid.radii();
    let u0 = radii
        .iter()
        .map(|&r| self_similar_value(&prof, a.lambda, r, a.t0).map(|v| v * (1.0 + a.perturb * log_bump(r, 1.0, 4.0))))
        .collect::<Result<Vec<_>, _>>()?;
    let bc = Boundary::SelfSimilar { profile: prof.clone(), lambda: a.lambda };
    let mut field = RadialField::new(s.params.n, s.params.m, grid.clone(), u0, a.t0, bc)?;
    if a.perturb == 0.0 {
        field = field.with_origin(0.0)?;
    }
    let exact_at = |t: f64| radii.iter().map(|&r| self_similar_value(&prof, a.lambda, r, t)).collect::<Result<Vec<_>, _>>();
    let zero = vec![0.0; radii.len()];
    let mut rows = Vec::new();
    let mut measure = |f: &RadialField| -> fdx::Result<()> {
        let exact = exact_at(f.t)?;
        let l1 = weighted_l1(&w, &radii, &f.u, &exact, L1Mode::Abs)? / weighted_l1(&w, &radii, &exact, &zero, L1Mode::Abs)?;
        let sup = radii
            .iter()
            .zip(f.u.iter().zip(&exact))
            .filter(|(&r, _)| (0.1..=10.0).contains(&r))
            .map(|(_, (u, e))| (u - e).abs() / e)
            .fold(0.0, f64::max);
        rows.push(vec![f.t, f.t.ln(), l1, sup]);
        Ok(())
    };
    measure(&field)?;
    let (field, stats) = evolve_sampled(field, &cfg, &linspace(a.t0, a.t_end, a.samples), &mut measure)?;
    let exact = exact_at(field.t)?;
    let mut out = Artifacts::default();
    out.text("evolve.csv", csv(&[], &["t", "tau", "dist_L1w", "dist_sup_compact"], rows));
    out.text(
        "field.csv",
        csv(&[format!("t={:.16e}", field.t)], &["r", "u", "exact"], radii.iter().zip(&field.u).zip(&exact).map(|((r, u), e)| vec![*r, *u, *e])),
    );
    out.json("summary.json", &json!({ "stats": stats, "t_final": field.t }))?;
    let settings = json!({
        "eta": a.eta, "lambda": a.lambda, "t0": a.t0, "t_end": a.t_end, "samples": a.samples,
        "perturb": a.perturb, "grid": grid, "evolve": cfg,
    });
    out.json("manifest.json", &manifest("evolve", &s.params, Some(mu), settings)?)?;
    Ok((s.dir, out))
}

#[derive(Debug, Clone, Args)]
pub struct SandwichFlags {
    #[arg(long, default_value_t = 1.0)]
    a0: f64,
    #[arg(long, default_value_t = 0.5)]
    a1: f64,
    #[arg(long, default_value_t = 2.0)]
    a2: f64,
}

fn family(s: &Setup, f: &SandwichFlags) -> Result<SandwichFamily, CliError> {
    let (prof, _) = make_profile(s, Some(1.0))?;
    Ok(SandwichFamily::new(Arc::new(prof), f.a0, f.a1, f.a2)?)
}

#[derive(Debug, Clone, Args)]
pub struct ContractArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    pde: EvolveFlags,
    #[command(flatten)]
    sandwich: SandwichFlags,
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    t_end: f64,
    #[arg(long, default_value_t = 12)]
    samples: usize,
}

pub fn contract(a: ContractArgs) -> Run {
    let s = setup(&a.common, &a.params)?;
    if !(a.t_end > 1.0) || a.samples == 0 || a.pairs == 0 {
        return Err(CliError::Config("need --t-end > 1, --samples >= 1 and --pairs >= 1".into()));
    }
    let fam = family(&s, &a.sandwich)?;
    let grid = a.pde.grid()?;
    let cfg = a.pde.config();
    let (mu, w) = a.pde.weight(s.params.n)?;
    let times = linspace(1.0, a.t_end, a.samples);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for k in 0..a.pairs {
        let (u, v) = random_sandwiched_pair(&fam, &grid, 1.0, &mut rng)?;
        let rep = contraction_experiment(u, v, &w, &fam, &times, &cfg)?;
        for i in 0..rep.times.len() {
            rows.push(vec![k as f64, rep.times[i], rep.dist_abs[i], rep.dist_pos[i]]);
        }
        summaries.push(json!({
            "pair": k,
            "worst_increase": rep.worst_increase(),
            "min_sandwich_margin": rep.min_sandwich_margin,
            "stats": rep.stats,
        }));
    }
    let mut out = Artifacts::default();
    out.text("contract.csv", csv(&[], &["pair", "t", "dist_abs", "dist_pos"], rows));
    out.json("summary.json", &summaries)?;
    let settings = json!({
        "a0": a.sandwich.a0, "a1": a.sandwich.a1, "a2": a.sandwich.a2, "lambdas": fam.lambdas,
        "pairs": a.pairs, "seed": a.seed, "t_end": a.t_end, "samples": a.samples, "grid": grid, "evolve": cfg,
    });
    out.json("manifest.json", &manifest("contract", &s.params, Some(mu), settings)?)?;
    Ok((s.dir, out))
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    pde: EvolveFlags,
    #[command(flatten)]
    sandwich: SandwichFlags,
    /// Amplitude of the bump on 1 < r < 4 multiplying the initial data (0 for none).
    #[arg(long, default_value_t = 0.3)]
    perturb: f64,
    #[arg(long, default_value_t = 3.0)]
    tau_max: f64,
    #[arg(long, default_value_t = 0.1)]
    tau_step: f64,
}

pub fn converge(a: ConvergeArgs) -> Run {
    let s = setup(&a.common, &a.params)?;
    if !(a.tau_max > 0.0 && a.tau_step > 0.0) {
        return Err(CliError::Config("need positive --tau-max and --tau-step".into()));
    }
    let fam = family(&s, &a.sandwich)?;
    let (mu, w) = a.pde.weight(s.params.n)?;
    let cfg = a.pde.config();
    let count = (a.tau_max / a.tau_step).round().max(1.0) as usize;
    let tau_grid: Vec<f64> = (0..=count).map(|k| a.tau_max * k as f64 / count as f64).collect();
    let setup = ConvergenceSetup {
        family: fam,
        grid: a.pde.grid()?,
        t0: 1.0,
        perturbation: (a.perturb != 0.0).then_some(PerturbationSpec { amplitude: a.perturb, ..PerturbationSpec::default() }),
        tau_grid,
        compact: (0.1, 10.0),
    };
    let rep = convergence_experiment(&setup, &w, &cfg)?;
    let rows = (0..rep.t.len()).map(|i| vec![rep.t[i], rep.tau[i], rep.dist_l1w[i], rep.dist_sup_compact[i]]);
    let mut out = Artifacts::default();
    out.text("converge.csv", csv(&[], &["t", "tau", "dist_L1w", "dist_sup_compact"], rows));
    out.json(
        "summary.json",
        &json!({
            "initial_l1w": rep.initial_l1w,
            "y_range": rep.y_range,
            "min_sandwich_margin": rep.min_sandwich_margin,
            "final_over_initial": rep.dist_l1w[rep.dist_l1w.len() - 1] / rep.dist_l1w[0],
            "stats": rep.stats,
        }),
    )?;
    let settings = json!({
        "a0": a.sandwich.a0, "a1": a.sandwich.a1, "a2": a.sandwich.a2, "lambdas": setup.family.lambdas,
        "perturb": a.perturb, "tau_max": a.tau_max, "tau_step": a.tau_step, "grid": setup.grid, "evolve": cfg,
    });
    out.json("manifest.json", &manifest("converge", &s.params, Some(mu), settings)?)?;
    Ok((s.dir, out))
}
