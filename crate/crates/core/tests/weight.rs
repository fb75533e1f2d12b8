use fdx::numerics::{quad_adaptive, Tolerances};
use fdx::weight::{build_weight, smooth_ramp, sphere_area, weighted_l1, BumpSpec, L1Mode, WeightFunction};
use proptest::prelude::*;

fn tol(v: f64) -> Tolerances<f64> {
    Tolerances::uniform(v, 100_000).unwrap()
}

/// `∫₁^r s^{1−n} I(s) ds` with `I(s) = ∫₁^s ρ^{n−1}η₁`, by nested quadrature
/// on `[1, min(r, 2)]` and the exact tail integral beyond 2.
fn nested_oracle(spec: BumpSpec<f64>, r: f64) -> (f64, f64) {
    let n = spec.n as i32;
    let nf = n as f64;
    let mu = spec.mu;
    let inner = |s: f64| quad_adaptive(|x: f64| x.powi(n - 1) * spec.eta1(x), 1.0, s, &tol(1e-14)).unwrap().value;
    let top = r.min(2.0);
    let head = quad_adaptive(|s: f64| s.powi(1 - n) * inner(s), 1.0, top, &tol(1e-13)).unwrap().value;
    let a5 = inner(2.0);
    // Beyond 2, I(s) = a5 + μ(s^{n−2−μ} − 2^{n−2−μ}).
    let c = a5 - mu * 2f64.powf(nf - 2.0 - mu);
    let tail = |b: f64| c * (2f64.powf(2.0 - nf) - b.powf(2.0 - nf)) / (nf - 2.0) + 2f64.powf(-mu) - b.powf(-mu);
    let total = head + tail(f64::INFINITY);
    let partial = if r > 2.0 { head + tail(r) } else { head };
    (partial, total)
}

fn cases() -> Vec<BumpSpec<f64>> {
    vec![BumpSpec::new(0.5, 3).unwrap(), BumpSpec::new(1.0, 4).unwrap(), BumpSpec::new(1.5, 5).unwrap()]
}

#[test]
fn normalisation_matches_nested_quadrature() {
    for spec in cases() {
        let w = build_weight(spec, 1e-11).unwrap();
        let (_, total) = nested_oracle(spec, f64::INFINITY);
        assert!((w.a4() * total - 1.0).abs() < 1e-9, "{spec:?}: a4 = {}, oracle {}", w.a4(), 1.0 / total);
    }
}

#[test]
fn values_match_nested_quadrature() {
    for spec in cases() {
        let w = build_weight(spec, 1e-11).unwrap();
        for r in [1.1, 1.5, 1.9, 2.0, 3.0, 10.0] {
            let (j, _) = nested_oracle(spec, r);
            let want = 1.0 - w.a4() * j;
            assert!((w.phi(r) - want).abs() < 1e-9, "{spec:?} r={r}: {} vs {want}", w.phi(r));
        }
    }
}

#[test]
fn normalisation_stable_under_tolerance_halving() {
    for spec in cases() {
        let a = build_weight(spec, 1e-10).unwrap().a4();
        let b = build_weight(spec, 5e-11).unwrap().a4();
        assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
    }
}

#[test]
fn table_meets_closed_form_at_two() {
    for spec in cases() {
        let w = build_weight(spec, 1e-11).unwrap();
        let (p, dp) = w.closed_form(2.0);
        let (q, dq) = w.eval(2.0 - 1e-12);
        assert!((p - q).abs() < 1e-10 && (dp - dq).abs() < 1e-9, "{spec:?}");
    }
}

#[test]
fn discretely_superharmonic() {
    for spec in cases() {
        let w = build_weight(spec, 1e-11).unwrap();
        for h in [1e-2, 3e-3, 1e-3] {
            let lap = w.max_discrete_laplacian(h, 20.0);
            assert!(lap <= 1e-8, "{spec:?} h={h}: {lap}");
        }
    }
}

#[test]
fn power_law_tails_hold_beyond_r0() {
    for spec in cases() {
        let w = build_weight(spec, 1e-11).unwrap();
        let mu = spec.mu;
        for k in 0..200 {
            let r = w.r0() * (1.0 + 0.1 * k as f64).powi(2);
            let (p, dp) = w.eval(r);
            let base = w.a4() * r.powf(-mu);
            assert!(p > 0.5 * base && p < 2.0 * base);
            assert!(dp > -2.0 * mu * base / r && dp < -0.5 * mu * base / r);
        }
    }
}

#[test]
fn power_law_distance_matches_quadrature() {
    let spec = BumpSpec::new(0.5, 3).unwrap();
    let w: WeightFunction<f64> = build_weight(spec, 1e-12).unwrap();
    let (a, b) = (0.5f64, 20.0f64);
    let nodes = 200_001;
    let dx = (b / a).ln() / (nodes - 1) as f64;
    let r: Vec<f64> = (0..nodes).map(|i| a * (dx * i as f64).exp()).collect();
    let u: Vec<f64> = r.iter().map(|x| 2.0 * x.powf(-2.5)).collect();
    let v: Vec<f64> = r.iter().map(|x| x.powf(-2.5)).collect();
    let got = weighted_l1(&w, &r, &u, &v, L1Mode::Abs).unwrap();
    let pos = weighted_l1(&w, &r, &v, &u, L1Mode::PositivePart).unwrap();
    let area: f64 = sphere_area(3);
    let want = area
        * [(a, 1.0), (1.0, 2.0), (2.0, b)]
            .iter()
            .map(|&(lo, hi)| quad_adaptive(|x: f64| x.powf(-2.5) * w.phi(x) * x * x, lo, hi, &tol(1e-13)).unwrap().value)
            .sum::<f64>();
    assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
    assert_eq!(pos, 0.0);
}

proptest! {
    #[test]
    fn weight_is_a_decreasing_fraction(r1 in 0.0f64..50.0, dr in 0.0f64..50.0) {
        let w = build_weight(BumpSpec::new(1.0, 4).unwrap(), 1e-10).unwrap();
        let (p1, d1) = w.eval(r1);
        let (p2, _) = w.eval(r1 + dr);
        prop_assert!(p1 > 0.0 && p1 <= 1.0 && d1 <= 0.0);
        prop_assert!(p2 <= p1);
    }

    #[test]
    fn ramp_is_monotone_in_unit_interval(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(smooth_ramp(lo) <= smooth_ramp(hi));
        prop_assert!((smooth_ramp(a) + smooth_ramp(1.0 - a) - 1.0).abs() < 1e-14);
    }
}
