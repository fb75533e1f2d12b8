//! End-to-end acceptance checks at the reference point
//! `(n, m, γ, ρ₁, η∞) = (3, 0.2, 4, 1, 1)`. Prints one line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use fdx::asymptotics::{expansion_check, f_ode_residual, inversion_check, wbar_ode_residual};
use fdx::params::{derive_expansion_constants, derive_fp_constants, ParamSet, DEFAULT_B1_MARGIN};
use fdx::pde::{
    contraction_experiment, convergence_experiment, evolve, make_self_similar_field, random_sandwiched_pair,
    self_similar_value, Barenblatt, Boundary, ConvergenceSetup, EvolveConfig, EvolveStats, LogGrid, PerturbationSpec,
    RadialField, SandwichFamily,
};
use fdx::profile::{build_profile, default_s_max, picard_solve, solve_for_eta, Profile, ProfileConfig};
use fdx::weight::{build_weight, BumpSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference() -> ParamSet<f64> {
    ParamSet::new(3, 0.2, 4.0, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn constants() -> Outcome {
    let p = reference();
    let fp = derive_fp_constants(&p, 1.0, DEFAULT_B1_MARGIN).map_err(|e| e.to_string())?;
    let ec = derive_expansion_constants(&p).map_err(|e| e.to_string())?;
    let pairs = [
        ("alpha", p.alpha(), -10.0 / 3.0),
        ("beta", p.beta(), -5.0 / 6.0),
        ("C1", fp.c1, 1.0),
        ("C2", fp.c2, 2.0),
        ("C3", fp.c3, 31.0 / 60.0),
        ("a1", ec.a1, 0.5),
        ("a2", ec.a2, -25.0 / 36.0),
        ("a3", ec.a3, 5.0 / 9.0),
    ];
    let worst = pairs.iter().map(|(_, a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let bad: Vec<_> = pairs.iter().filter(|(_, a, b)| rel(*a, *b) > 1e-14).map(|(n, _, _)| *n).collect();
    check(bad.is_empty(), format!("max relative deviation {worst:.1e}, failing {bad:?}"))
}

fn contraction(p: &ParamSet<f64>) -> Outcome {
    let fp = derive_fp_constants(p, 1.0, DEFAULT_B1_MARGIN).map_err(|e| e.to_string())?;
    let tol = 1e-12;
    let sol = picard_solve(p, &fp, default_s_max(&fp, tol), tol, 200).map_err(|e| e.to_string())?;
    let worst = sol.contraction_ratios().into_iter().fold(0.0, f64::max);
    check(
        worst <= 0.25 && sol.fp_residual <= 1e-10,
        format!("max update ratio {worst:.4}, fixed-point residual {:.1e}, {} iterations", sol.fp_residual, sol.iterations),
    )
}

fn global_bounds(prof: &Profile) -> Outcome {
    let c1 = prof.fp_constants().c1;
    let p = prof.params();
    let h_bad = prof.h().iter().filter(|&&h| !(h > 0.0 && h < c1)).count();
    let margin_bad = prof.rfr_over_f_margins().iter().filter(|&&(lo, hi)| !(lo > 0.0 && hi > 0.0)).count();
    let ratio_bad = prof
        .rfr_over_f()
        .iter()
        .filter(|&&v| !(v >= -p.far_exponent() && v < -p.gamma()))
        .count();
    check(
        h_bad + margin_bad + ratio_bad == 0,
        format!("{} nodes on s in [{:.2}, {:.2}], violations: h {h_bad}, ratio {}", prof.len(), prof.s_min(), prof.s_max(), margin_bad + ratio_bad),
    )
}

fn endpoints(prof: &Profile) -> Outcome {
    let lv = prof.eta_levels();
    let k = lv.len();
    let spread = rel(lv[k - 1], lv[k - 2]);
    let fp = prof.fp_constants();
    let far_err = (prof.far_field_value() - prof.eta_inf()).abs();
    let budget = (-fp.c2 * (prof.s_max() - fp.b1)).exp() + 1e-8;
    check(
        spread <= 1e-4 && far_err <= budget,
        format!("eta_origin {:.12} (level spread {spread:.1e}), far-field error {far_err:.1e} <= {budget:.1e}", prof.eta_origin()),
    )
}

fn expansion(prof_eta1: &Profile) -> Outcome {
    let ec = derive_expansion_constants(prof_eta1.params()).map_err(|e| e.to_string())?;
    let rep = expansion_check(prof_eta1, &ec).map_err(|e| e.to_string())?;
    check(
        rep.ref_err1 <= 1e-2 && rep.ref_err2 <= 2e-2,
        format!(
            "eta {:.10}: wbar_rho(0) {:.6} vs {:.6} ({:.1e}), wbar_rhorho(0) {:.6} vs {:.6} ({:.1e})",
            rep.eta, rep.d1, rep.d1_ref, rep.ref_err1, rep.d2, rep.d2_ref, rep.ref_err2
        ),
    )
}

fn residuals(prof_eta1: &Profile) -> Outcome {
    let ec = derive_expansion_constants(prof_eta1.params()).map_err(|e| e.to_string())?;
    let f_res = f_ode_residual(prof_eta1);
    let w_res = wbar_ode_residual(prof_eta1, &ec);
    let inv = inversion_check(prof_eta1).map_err(|e| e.to_string())?;
    check(
        f_res <= 1e-5 && w_res <= 1e-5 && inv.residual_max <= 1e-5 && inv.double_inversion_error <= 1e-8,
        format!(
            "f {f_res:.1e}, wbar {w_res:.1e}, inverted {:.1e}, double inversion {:.1e}",
            inv.residual_max, inv.double_inversion_error
        ),
    )
}

fn weight() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (mu, n) in [(0.5, 3), (1.0, 4)] {
        let spec = BumpSpec::new(mu, n).map_err(|e| e.to_string())?;
        let tol = 1e-10;
        let a = build_weight(spec, tol).map_err(|e| e.to_string())?;
        let b = build_weight(spec, tol / 2.0).map_err(|e| e.to_string())?;
        let stab = rel(a.a4(), b.a4());
        let (p_table, _) = a.eval(2.0);
        let (p_closed, _) = a.closed_form(2.0);
        let join = (p_table - p_closed).abs();
        let lap = [1e-2, 1e-3].iter().map(|&h| a.max_discrete_laplacian(h, 50.0)).fold(f64::NEG_INFINITY, f64::max);
        ok &= stab <= 1e-8 && join <= tol && lap <= 1e-8;
        lines.push(format!("mu={mu} n={n}: a4 {:.10} (halving {stab:.1e}), join {join:.1e}, max laplacian {lap:.1e}", a.a4()));
    }
    check(ok, lines.join("; "))
}

fn max_rel_err(f: &RadialField, exact: impl Fn(f64) -> f64) -> f64 {
    f.radii().iter().zip(&f.u).map(|(&r, u)| ((u - exact(r)) / exact(r)).abs()).fold(0.0, f64::max)
}

fn exactness(prof: &Arc<Profile>, ab: &mut EvolveStats) -> Outcome {
    let b = Barenblatt::new(3, 0.2, 1.0, 1.0).map_err(|e| e.to_string())?;
    let mut bb = Vec::new();
    let mut vl = Vec::new();
    for (l, n) in [128usize, 256, 512].into_iter().enumerate() {
        let steps = 20 * 4usize.pow(l as u32);
        let f = b.field(LogGrid::new(1e-2, 1e2, n).unwrap(), 0.1).map_err(|e| e.to_string())?;
        let (f, st) = evolve(f, &EvolveConfig::fixed(0.2 / steps as f64), 0.3).map_err(|e| e.to_string())?;
        ab.merge(&st);
        bb.push(max_rel_err(&f, |r| b.value(r, 0.3)));

        let f = make_self_similar_field(prof.clone(), 1.0, 1.0, LogGrid::new(1e-3, 1e3, n).unwrap()).map_err(|e| e.to_string())?;
        let (f, st) = evolve(f, &EvolveConfig::fixed(1.0 / steps as f64), 2.0).map_err(|e| e.to_string())?;
        ab.merge(&st);
        vl.push(max_rel_err(&f, |r| self_similar_value(prof, 1.0, r, 2.0).unwrap()));
    }
    let orders = |e: &[f64]| [(e[0] / e[1]).log2(), (e[1] / e[2]).log2()];
    let (ob, ov) = (orders(&bb), orders(&vl));
    let in_range = ob.iter().chain(&ov).all(|o| (1.7..=2.3).contains(o));

    let grid = LogGrid::new(1e-3, 1e3, 128).unwrap();
    let c = RadialField::new(3, 0.2, grid.clone(), vec![2.5; grid.len()], 1.0, Boundary::Fixed { inner: 2.5, outer: 2.5 })
        .map_err(|e| e.to_string())?;
    let cfg = EvolveConfig::default();
    let (c, st) = evolve(c, &cfg, 5.0).map_err(|e| e.to_string())?;
    ab.merge(&st);
    let drift = c.u.iter().map(|u| (u - 2.5).abs() / 2.5).fold(0.0, f64::max);
    check(
        in_range && drift <= cfg.newton_tol,
        format!(
            "Barenblatt orders {:.3}, {:.3}; V_lambda orders {:.3}, {:.3}; constant state drift {drift:.1e}",
            ob[0], ob[1], ov[0], ov[1]
        ),
    )
}

fn family(prof: &Arc<Profile>) -> SandwichFamily {
    SandwichFamily::new(prof.clone(), 1.0, 0.5, 2.0).unwrap()
}

fn contraction_pairs(prof: &Arc<Profile>, ab: &mut EvolveStats) -> Outcome {
    let fam = family(prof);
    let grid = LogGrid::new(1e-3, 1e3, 400).unwrap();
    let w = build_weight(BumpSpec::new(0.5, 3).unwrap(), 1e-11).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (1..=12).map(|k| 1.0 + k as f64 / 6.0).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut first_last = Vec::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v) = random_sandwiched_pair(&fam, &grid, 1.0, &mut rng).map_err(|e| e.to_string())?;
        let rep = contraction_experiment(u, v, &w, &fam, &times, &EvolveConfig::default()).map_err(|e| e.to_string())?;
        ab.merge(&rep.stats);
        worst = worst.max(rep.worst_increase());
        first_last.push(format!("{:.3}->{:.3}", rep.dist_abs[0], rep.dist_abs[rep.dist_abs.len() - 1]));
    }
    check(
        worst <= 1e-6,
        format!("5 pairs x {} samples, largest relative increase {worst:.1e}; |u-v| distances {}", times.len(), first_last.join(", ")),
    )
}

fn convergence(prof: &Arc<Profile>, ab: &mut EvolveStats) -> Outcome {
    let fam = family(prof);
    let w = build_weight(BumpSpec::new(0.5, 3).unwrap(), 1e-11).map_err(|e| e.to_string())?;
    let tau_grid: Vec<f64> = (0..=30).map(|k| 0.1 * k as f64).collect();
    let mut setup = ConvergenceSetup {
        family: fam,
        grid: LogGrid::new(1e-3, 1e3, 400).unwrap(),
        t0: 1.0,
        perturbation: None,
        tau_grid: tau_grid.clone(),
        compact: (0.1, 10.0),
    };
    let cfg = EvolveConfig::default();
    let exact = convergence_experiment(&setup, &w, &cfg).map_err(|e| e.to_string())?;
    ab.merge(&exact.stats);
    let drift = exact.dist_l1w.iter().copied().fold(0.0, f64::max);

    setup.perturbation = Some(PerturbationSpec::default());
    let pert = convergence_experiment(&setup, &w, &cfg).map_err(|e| e.to_string())?;
    ab.merge(&pert.stats);
    let d = &pert.dist_l1w;
    let monotone = d
        .windows(2)
        .zip(&pert.tau)
        .filter(|(_, &tau)| tau >= 0.5 - 1e-12)
        .all(|(w, _)| w[1] <= w[0]);
    let ratio = d[d.len() - 1] / d[0];
    check(
        drift <= 5e-3 && monotone && ratio <= 0.1,
        format!(
            "self-similar max relative distance {drift:.1e}; perturbed {:.2e} -> {:.2e} (ratio {ratio:.3}), monotone after tau 0.5: {monotone}",
            d[0],
            d[d.len() - 1]
        ),
    )
}

fn aronson_benilan(ab: &EvolveStats) -> Outcome {
    check(
        ab.ab_excess <= 1e-6,
        format!("largest relative excess {:.3e} over {} steps (criteria 8-10)", ab.ab_excess, ab.steps),
    )
}

fn with<T>(r: &Result<T, String>, f: impl FnOnce(&T) -> Outcome) -> Outcome {
    r.as_ref().map_err(|e| format!("profile construction failed: {e}")).and_then(f)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let p = reference();
    let base = build_profile(&p, 1.0, &ProfileConfig::default()).map_err(|e| e.to_string());
    let unit = solve_for_eta(&p, 1.0, &ProfileConfig::default()).map(Arc::new).map_err(|e| e.to_string());

    let mut ab = EvolveStats::default();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("constants", constants()),
        ("contraction", contraction(&p)),
        ("global bounds", with(&base, global_bounds)),
        ("profile endpoints", with(&base, endpoints)),
        ("origin expansion", with(&unit, |u| expansion(u))),
        ("consistency residuals", with(&unit, |u| residuals(u))),
        ("weight", weight()),
        ("PDE exactness", with(&unit, |u| exactness(u, &mut ab))),
        ("weighted L1 contraction", with(&unit, |u| contraction_pairs(u, &mut ab))),
        ("large-time convergence", with(&unit, |u| convergence(u, &mut ab))),
    ];
    // Collects the step statistics of every evolution above.
    results.push(("Aronson-Benilan bound", aronson_benilan(&ab)));

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed in {:.1?}", results.len() - failed, results.len(), start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
