//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::numerics::Tolerances;
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the Kronrod nodes with odd index.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    /// Estimated absolute error.
    pub error: T,
    pub evaluations: usize,
}

/// Asymptotic behaviour of the integrand used to close a semi-infinite range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel<T> {
    /// `f(s) ~ c·exp(-rate·s)`.
    Exponential { rate: T },
    /// `f(s) ~ c·s^(-exponent)` with `exponent > 1`.
    Power { exponent: T },
}

fn gk15<T: Scalar, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let lit = T::lit;
    let c = (a + b) * lit(0.5);
    let hl = (b - a) * lit(0.5);
    let fc = f(c);
    let mut kron = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = hl * lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        kron = kron + lit(WGK[j]) * s;
        if j % 2 == 1 {
            gauss = gauss + lit(WG[j / 2]) * s;
        }
    }
    (kron * hl, ((kron - gauss) * hl).abs())
}

/// Integrates `f` over the finite interval `[a, b]`.
///
/// Subdivides the interval with the largest error estimate until the total
/// estimate is below `max(abs_tol, rel_tol·|value|)`. `max_steps` caps the
/// number of subintervals.
pub fn quad_adaptive<T, F>(mut f: F, a: T, b: T, tol: &Tolerances<T>) -> Result<QuadResult<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Range("quad_adaptive needs finite limits; use quad_semi_infinite".into()));
    }
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: T::zero(), evaluations: 0 });
    }
    let mut evals = 15;
    let (v0, e0) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v0, e0)];
    loop {
        let value: T = parts.iter().map(|p| p.2).sum();
        let error: T = parts.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if error <= tol.abs_tol.max(tol.rel_tol * value.abs()) {
            return Ok(QuadResult { value, error, evaluations: evals });
        }
        if parts.len() >= tol.max_steps {
            return Err(Error::Quadrature(format!(
                "error estimate {error} after {} subintervals on [{a}, {b}]",
                parts.len()
            )));
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -T::one()), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = (lo + hi) * T::lit(0.5);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            return Err(Error::Quadrature(format!("interval around {mid} cannot be split further")));
        }
        let (vl, el) = gk15(&mut f, lo, mid);
        let (vr, er) = gk15(&mut f, mid, hi);
        evals += 30;
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
    }
}

/// Integrates `f` over `[a, ∞)`.
///
/// The range is cut at a point `b` that moves outward until the truncated
/// integral plus the tail predicted by `tail` stops changing; the predicted
/// tail is included in the returned value.
pub fn quad_semi_infinite<T, F>(mut f: F, a: T, tail: TailModel<T>, tol: &Tolerances<T>) -> Result<QuadResult<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let two = T::lit(2.0);
    let (mut step, model_ok) = match tail {
        TailModel::Exponential { rate } => ((T::one() / rate).max(T::one()), rate > T::zero()),
        TailModel::Power { exponent } => (a.abs().max(T::one()), exponent > T::one()),
    };
    if !model_ok {
        return Err(Error::Range("tail model does not describe an integrable decay".into()));
    }
    let tail_at = |fb: T, b: T| match tail {
        TailModel::Exponential { rate } => fb / rate,
        TailModel::Power { exponent } => fb * b / (exponent - T::one()),
    };
    let inner = Tolerances { abs_tol: tol.abs_tol / T::lit(4.0), rel_tol: tol.rel_tol / T::lit(4.0), max_steps: tol.max_steps };
    let mut b = a + step;
    let mut head = quad_adaptive(&mut f, a, b, &inner)?;
    let mut total = head.value + tail_at(f(b), b);
    let mut evals = head.evaluations + 1;
    for _ in 0..200 {
        let b_next = b + step;
        let piece = quad_adaptive(&mut f, b, b_next, &inner)?;
        evals += piece.evaluations + 1;
        head.value = head.value + piece.value;
        head.error = head.error + piece.error;
        let next = head.value + tail_at(f(b_next), b_next);
        let change = (next - total).abs();
        total = next;
        b = b_next;
        step = step * two;
        if change <= tol.abs_tol.max(tol.rel_tol * total.abs()) / two {
            return Ok(QuadResult { value: total, error: head.error + change, evaluations: evals });
        }
    }
    Err(Error::Quadrature(format!("tail from {a} did not settle")))
}
