//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.
//!
//! Global adaptive bisection: the interval with the largest error estimate
//! is split until the summed estimate drops below tolerance. Each interval
//! carries its bisection depth and is frozen once it reaches `max_depth`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

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

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Absolute error target for the whole integral.
    pub abs_tol: f64,
    /// Relative error target; the looser of the two targets applies.
    pub rel_tol: f64,
    /// Maximum bisection depth of any single interval.
    pub max_depth: u32,
    /// Hard cap on the number of live intervals.
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_depth: 20,
            max_intervals: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64, depth: u32) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.norm() * WGK[7];
    let mut fv = [(Complex64::default(), Complex64::default()); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = (f1, f2);
        res_k += (f1 + f2) * WGK[j];
        res_abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            res_g += (f1 + f2) * WG[j / 2];
        }
    }
    // QUADPACK-style error scaling.
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j].0 - mean).norm() + (fv[j].1 - mean).norm());
    }
    let value = res_k * half;
    res_asc *= half.abs();
    res_abs *= half.abs();
    let mut error = ((res_k - res_g) * half).norm();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.re.is_finite() || !value.im.is_finite() {
        error = f64::INFINITY;
    }
    Segment {
        lo,
        hi,
        value,
        error,
        depth,
    }
}

/// Integrates `f` over `[lo, hi]`, starting from the given interior breakpoints.
///
/// Breakpoints outside `(lo, hi)` are ignored; they should mark kinks or
/// oscillation periods so the initial partition is already well adapted.
pub fn integrate<F>(f: F, lo: f64, hi: f64, breaks: &[f64], opts: &QuadOptions) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain(format!(
            "quadrature bounds must be finite, got [{lo}, {hi}]"
        )));
    }
    if lo == hi {
        return Ok(Complex64::default());
    }
    let (lo, hi, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };

    let mut points = Vec::with_capacity(breaks.len() + 2);
    points.push(lo);
    points.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    points.push(hi);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut heap = BinaryHeap::with_capacity(points.len() * 2);
    for w in points.windows(2) {
        heap.push(kronrod(&f, w[0], w[1], 0));
    }
    let mut frozen_value = Complex64::default();
    let mut frozen_error = 0.0;
    let mut live_value: Complex64 = heap.iter().map(|s| s.value).sum();
    let mut live_error: f64 = heap.iter().map(|s| s.error).sum();
    let mut steps = 0usize;

    loop {
        steps += 1;
        if live_error + frozen_error <= opts.abs_tol.max(opts.rel_tol * (live_value + frozen_value).norm())
            || steps % 256 == 0
        {
            // Refresh the running sums so cancellation drift cannot fake convergence.
            live_value = heap.iter().map(|s| s.value).sum();
            live_error = heap.iter().map(|s| s.error).sum();
        }
        let total_error = live_error + frozen_error;
        let total = live_value + frozen_value;
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_error <= tol {
            return Ok(total * sign);
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::Quadrature {
                estimate: total * sign,
                error_bound: total_error,
            });
        };
        live_value -= worst.value;
        live_error -= worst.error;
        if heap.len() + 2 > opts.max_intervals {
            return Err(Error::Quadrature {
                estimate: total * sign,
                error_bound: total_error,
            });
        }
        if worst.depth >= opts.max_depth {
            frozen_value += worst.value;
            frozen_error += worst.error;
            if frozen_error > opts.abs_tol.max(opts.rel_tol * total.norm()) {
                return Err(Error::Quadrature {
                    estimate: total * sign,
                    error_bound: total_error,
                });
            }
            continue;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        for seg in [
            kronrod(&f, worst.lo, mid, worst.depth + 1),
            kronrod(&f, mid, worst.hi, worst.depth + 1),
        ] {
            live_value += seg.value;
            live_error += seg.error;
            heap.push(seg);
        }
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: F, lo: f64, hi: f64, breaks: &[f64], opts: &QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate(|x| Complex64::new(f(x), 0.0), lo, hi, breaks, opts).map(|v| v.re)
}
