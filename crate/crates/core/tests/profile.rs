use fdx::numerics::{quad_adaptive, Tolerances};
use fdx::params::{derive_fp_constants, ParamSet, DEFAULT_B1_MARGIN};
use fdx::profile::{
    build_profile, default_s_max, lambda_for_eta, picard_solve, profile_rhs, rescale_profile, solve_for_eta, tail_norm,
    ProfileConfig, TailSolution,
};
use fdx::Error;

fn reference() -> ParamSet<f64> {
    ParamSet::new(3, 0.2, 4.0, 1.0).unwrap()
}

fn tail(p: &ParamSet<f64>, eta_inf: f64, tol: f64) -> TailSolution {
    let fp = derive_fp_constants(p, eta_inf, DEFAULT_B1_MARGIN).unwrap();
    picard_solve(p, &fp, default_s_max(&fp, tol), tol, 200).unwrap()
}

/// Four-point Lagrange interpolation on a uniform grid.
fn lagrange(s0: f64, ds: f64, y: &[f64], s: f64) -> f64 {
    let u = (s - s0) / ds;
    let i = (u.floor() as isize - 1).clamp(0, y.len() as isize - 4) as usize;
    let t = u - i as f64;
    let w = [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ];
    (0..4).map(|k| w[k] * y[i + k]).sum()
}

#[test]
fn tail_is_a_fixed_point_of_the_integral_map() {
    // Apply the map with adaptive quadrature on interpolants of the computed
    // tail and compare in the weighted norm.
    let p = reference();
    let sol = tail(&p, 1.0, 1e-12);
    let fp = sol.fp;
    let (s0, ds) = (sol.s0, sol.ds);
    let s_end = sol.s_max();
    let (n2, bp, m) = (1.0, p.beta_p(), p.m());
    // Smooth, order-one quantities to interpolate.
    let lw: Vec<f64> = sol.s().iter().zip(&sol.wt).map(|(s, w)| w.ln() + fp.c1 * s).collect();
    let hs: Vec<f64> = sol.s().iter().zip(&sol.h).map(|(s, h)| h * (fp.c2 * s).exp()).collect();
    let w_at = |s: f64| (lagrange(s0, ds, &lw, s) - fp.c1 * s).exp();
    let h_at = |s: f64| lagrange(s0, ds, &hs, s) * (-fp.c2 * s).exp();
    let q = |s: f64| (-s / bp).exp() * w_at(s).powf(1.0 - m);
    let g = |s: f64| bp * fp.c1 * q(s) + m * h_at(s).powi(2);
    let tol = Tolerances::uniform(1e-15, 100_000).unwrap();
    let h_last = *sol.h.last().unwrap();
    let (mut dw, mut dh, mut at) = (Vec::new(), Vec::new(), Vec::new());
    let step = sol.h.len() / 40;
    for i in (0..sol.h.len() - 1).step_by(step) {
        let s = s0 + ds * i as f64;
        let int_h = quad_adaptive(h_at, s, s_end, &tol).unwrap().value + h_last / fp.c2;
        let w_new = fp.eta_inf * (-int_h - fp.c1 * s).exp();
        let kernel = |t: f64| {
            let qi = quad_adaptive(q, s, t, &tol).unwrap().value;
            (-bp * qi - n2 * (t - s)).exp() * g(t)
        };
        let decay = quad_adaptive(q, s, s_end, &tol).unwrap().value;
        let closure = (-bp * decay - n2 * (s_end - s)).exp() * g(s_end) / (n2 + bp * q(s_end) + fp.c2);
        let h_new = quad_adaptive(kernel, s, s_end, &tol).unwrap().value + closure;
        dw.push(w_new - sol.wt[i]);
        dh.push(h_new - sol.h[i]);
        at.push(s);
    }
    let res = tail_norm(&fp, &at, &dw, &dh);
    assert!(res <= 1e-10, "weighted residual {res:e}");
}

#[test]
fn picard_contracts_at_reference_point() {
    let sol = tail(&reference(), 1.0, 1e-12);
    assert!(sol.fp_residual <= 1e-10);
    for r in sol.contraction_ratios() {
        assert!(r <= 0.25, "ratio {r}");
    }
}

#[test]
fn fixed_point_is_reproducible_at_tighter_tolerance() {
    let p = reference();
    let a = tail(&p, 1.0, 1e-11);
    let b = tail(&p, 1.0, 1e-12);
    let len = a.h.len().min(b.h.len());
    let s = &a.s()[..len];
    let dw: Vec<f64> = (0..len).map(|i| a.wt[i] - b.wt[i]).collect();
    let dh: Vec<f64> = (0..len).map(|i| a.h[i] - b.h[i]).collect();
    assert!(tail_norm(&a.fp, s, &dw, &dh) <= 1e-10);
}

#[test]
fn iteration_cap_and_short_range_are_reported() {
    let p = reference();
    let fp = derive_fp_constants(&p, 1.0, DEFAULT_B1_MARGIN).unwrap();
    assert!(matches!(picard_solve(&p, &fp, fp.b1 + 1.0, 1e-12, 50), Err(Error::Range(_))));
    assert!(matches!(picard_solve(&p, &fp, default_s_max(&fp, 1e-12), 1e-14, 2), Err(Error::Tolerance(_))));
}

#[test]
fn global_bounds_hold_on_the_whole_profile() {
    for (n, m, g) in [(3, 0.2, 4.0), (3, 0.2, 3.0), (4, 0.3, 4.5), (5, 0.4, 5.0)] {
        let p = ParamSet::new(n, m, g, 1.0).unwrap();
        let prof = build_profile(&p, 1.0, &ProfileConfig::default()).unwrap();
        let c1 = prof.fp_constants().c1;
        let far = p.far_exponent();
        assert!(prof.h().iter().all(|&h| h > 0.0 && h < c1), "h bounds for {n} {m} {g}");
        assert!(prof.rfr_over_f().iter().all(|&v| v >= -far && v < -g), "r f_r / f bounds for {n} {m} {g}");
        assert!(prof.rfr_over_f_margins().iter().all(|&(lo, hi)| lo > 0.0 && hi > 0.0));
    }
}

#[test]
fn endpoints_match_origin_and_far_field_coefficients() {
    let p = reference();
    let prof = build_profile(&p, 1.0, &ProfileConfig::default()).unwrap();
    let levels = prof.eta_levels();
    let k = levels.len();
    assert!((levels[k - 1] - levels[k - 2]).abs() <= 1e-4 * levels[k - 1].abs());
    let fp = prof.fp_constants();
    let budget = (-fp.c2 * (prof.s_max() - fp.b1)).exp() + 1e-8;
    assert!((prof.far_field_value() - prof.eta_inf()).abs() <= budget);
}

#[test]
fn rescaling_follows_the_scaling_law_and_orders_profiles() {
    let p = reference();
    let base = build_profile(&p, 1.0, &ProfileConfig::default()).unwrap();
    let k = p.scaling_exponent();
    for lam in [0.5, 2.0] {
        let r = rescale_profile(&base, lam).unwrap();
        let want_inf = base.eta_inf() * lam.powf(k - p.far_exponent());
        let want_origin = base.eta_origin() * lam.powf(k - p.gamma());
        assert!((r.eta_inf() - want_inf).abs() <= 1e-12 * want_inf);
        assert!((r.eta_origin() - want_origin).abs() <= 1e-9 * want_origin);
        for x in [1e-3, 0.1, 1.0, 10.0, 1e3] {
            let direct = lam.powf(k) * base.f_at(lam * x).unwrap();
            assert!((r.f_at(x).unwrap() - direct).abs() <= 1e-10 * direct);
        }
    }
    let (small, big) = (rescale_profile(&base, 0.5).unwrap(), rescale_profile(&base, 2.0).unwrap());
    for x in [1e-2, 0.1, 1.0, 10.0, 100.0] {
        assert!(big.f_at(x).unwrap() < small.f_at(x).unwrap());
    }
}

#[test]
fn target_origin_coefficient_is_reached() {
    let p = reference();
    let prof = solve_for_eta(&p, 1.0, &ProfileConfig::default()).unwrap();
    assert!((prof.eta_origin() - 1.0).abs() < 1e-9);
    let lam = lambda_for_eta(&p, 2.0, 1.0);
    assert!((lam.powf(p.scaling_exponent() - p.gamma()) - 0.5).abs() < 1e-14);
}

#[test]
fn ode_residual_separates_solution_from_perturbation() {
    let p = reference();
    let prof = build_profile(&p, 1.0, &ProfileConfig::default()).unwrap();
    let c1 = prof.fp_constants().c1;
    let rhs = profile_rhs(&p, c1);
    let ds = prof.ds();
    let s = prof.s_grid();
    let residual = |h: &[f64]| {
        let mut worst: f64 = 0.0;
        for i in 2..h.len() - 2 {
            let dh = (h[i - 2] - 8.0 * h[i - 1] + 8.0 * h[i + 1] - h[i + 2]) / (12.0 * ds);
            let mut d = [0.0; 2];
            rhs(s[i], &[h[i], prof.log_wt()[i]], &mut d);
            worst = worst.max((dh - d[0]).abs() / (c1 + d[0].abs()));
        }
        worst
    };
    assert!(residual(prof.h()) < 1e-6);
    let bumped: Vec<f64> = prof
        .h()
        .iter()
        .zip(&s)
        .map(|(h, x)| h * (1.0 + 0.2 * (-(x + 1.0) * (x + 1.0)).exp()))
        .collect();
    assert!(residual(&bumped) >= 1e-2);
}
