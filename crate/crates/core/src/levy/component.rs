//! Parametric and tabulated densities that make up the continuous part of a
//! Lévy measure (or of a deterministic base measure).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{phi1, phi2};
use crate::quad::{self, QuadOptions};

/// Which half-line a one-sided family lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "+")]
    Pos,
    #[serde(rename = "-")]
    Neg,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Pos => 1.0,
            Side::Neg => -1.0,
        }
    }

    /// Maps a signed window `[a, b]` to the corresponding window of `|x|` on this side.
    fn abs_window(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            Side::Pos => (a.max(0.0), b),
            Side::Neg => ((-b).max(0.0), -a),
        }
    }
}

mod cutoff_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }

    pub fn infinite() -> f64 {
        f64::INFINITY
    }
}

/// One continuous piece of a measure on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DensityComponent {
    /// Constant density `height` on `[lo, hi]`.
    Uniform { lo: f64, hi: f64, height: f64 },
    /// `scale * exp(-rate * |x|)` on one half-line.
    Exponential { rate: f64, scale: f64, side: Side },
    /// `c * |x|^(-1-p)` on `0 < |x| < cutoff` on one side; requires `0 < p < 2`.
    /// A missing or `null` cutoff in JSON means no cutoff.
    Power {
        p: f64,
        c: f64,
        #[serde(with = "cutoff_serde", default = "cutoff_serde::infinite")]
        cutoff: f64,
        side: Side,
    },
    /// Piecewise-linear density through `(nodes[i], values[i])`, zero outside.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

/// Hints that let the quadrature pick a good substitution and partition.
#[derive(Debug, Clone, Copy)]
pub struct IntegrandShape {
    /// `f(x) = O(|x|^zero_order)` as `x -> 0`.
    pub zero_order: f64,
    /// Angular frequency of oscillation in `x`, zero if the integrand does not oscillate.
    pub freq: f64,
}

impl DensityComponent {
    /// Structural problems with the parameters; empty when the component is usable.
    pub fn problems(&self, levy: bool) -> Vec<String> {
        let mut out = Vec::new();
        let finite = |v: f64| v.is_finite();
        match *self {
            DensityComponent::Uniform { lo, hi, height } => {
                if !(finite(lo) && finite(hi) && lo < hi) {
                    out.push(format!("uniform needs finite lo < hi, got [{lo}, {hi}]"));
                }
                if !(height >= 0.0 && finite(height)) {
                    out.push(format!("uniform height must be nonnegative, got {height}"));
                }
            }
            DensityComponent::Exponential { rate, scale, .. } => {
                if !(rate > 0.0 && finite(rate)) {
                    out.push(format!("exponential rate must be positive, got {rate}"));
                }
                if !(scale >= 0.0 && finite(scale)) {
                    out.push(format!("exponential scale must be nonnegative, got {scale}"));
                }
            }
            DensityComponent::Power { p, c, cutoff, .. } => {
                if !(p > 0.0 && p < 2.0) {
                    out.push(format!(
                        "power exponent p = {p} outside (0, 2): Lévy integrability \
                         ∫min(x², 1) ν(dx) < ∞ fails"
                    ));
                }
                if !(c >= 0.0 && finite(c)) {
                    out.push(format!("power scale c must be nonnegative, got {c}"));
                }
                if !(cutoff > 0.0) {
                    out.push(format!("power cutoff must be positive, got {cutoff}"));
                }
            }
            DensityComponent::Tabulated {
                ref nodes,
                ref values,
            } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    out.push(format!(
                        "tabulated density needs >= 2 nodes and one value per node ({} nodes, {} values)",
                        nodes.len(),
                        values.len()
                    ));
                }
                if !nodes.iter().all(|x| x.is_finite()) || nodes.windows(2).any(|w| w[0] >= w[1]) {
                    out.push("tabulated nodes must be finite and strictly increasing".into());
                }
                if levy && nodes.iter().any(|&x| x == 0.0) {
                    out.push("tabulated node at zero".into());
                }
                if values.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    out.push("tabulated values must be finite and nonnegative".into());
                }
            }
        }
        out
    }

    /// Whether the component has finite total mass.
    pub fn is_finite_mass(&self) -> bool {
        !matches!(self, DensityComponent::Power { c, .. } if *c > 0.0)
    }

    /// Density at `x` (`+∞` is never returned; the power family is singular only at 0).
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            DensityComponent::Uniform { lo, hi, height } => {
                if x >= lo && x <= hi {
                    height
                } else {
                    0.0
                }
            }
            DensityComponent::Exponential { rate, scale, side } => {
                if x * side.sign() > 0.0 {
                    scale * (-rate * x.abs()).exp()
                } else {
                    0.0
                }
            }
            DensityComponent::Power { p, c, cutoff, side } => {
                let y = x * side.sign();
                if y > 0.0 && y < cutoff {
                    c * y.powf(-1.0 - p)
                } else {
                    0.0
                }
            }
            DensityComponent::Tabulated {
                ref nodes,
                ref values,
            } => interp(nodes, values, x),
        }
    }

    pub fn scaled(&self, k: f64) -> DensityComponent {
        let mut out = self.clone();
        match &mut out {
            DensityComponent::Uniform { height, .. } => *height *= k,
            DensityComponent::Exponential { scale, .. } => *scale *= k,
            DensityComponent::Power { c, .. } => *c *= k,
            DensityComponent::Tabulated { values, .. } => values.iter_mut().for_each(|v| *v *= k),
        }
        out
    }

    /// True when the component carries no mass at all.
    pub fn is_null(&self) -> bool {
        match self {
            DensityComponent::Uniform { height, .. } => *height == 0.0,
            DensityComponent::Exponential { scale, .. } => *scale == 0.0,
            DensityComponent::Power { c, .. } => *c == 0.0,
            DensityComponent::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Identifies components that differ only by an overall multiplicative scale.
    pub(crate) fn shape_key(&self) -> (u8, Vec<u64>) {
        match self {
            DensityComponent::Uniform { lo, hi, .. } => (0, vec![lo.to_bits(), hi.to_bits()]),
            DensityComponent::Exponential { rate, side, .. } => {
                (1, vec![rate.to_bits(), (*side == Side::Pos) as u64])
            }
            DensityComponent::Power { p, cutoff, side, .. } => (
                2,
                vec![p.to_bits(), cutoff.to_bits(), (*side == Side::Pos) as u64],
            ),
            DensityComponent::Tabulated { nodes, .. } => {
                (3, nodes.iter().map(|x| x.to_bits()).collect())
            }
        }
    }

    /// The overall scales of two same-shape components, as comparable vectors.
    pub(crate) fn scale_vector(&self) -> Vec<f64> {
        match self {
            DensityComponent::Uniform { height, .. } => vec![*height],
            DensityComponent::Exponential { scale, .. } => vec![*scale],
            DensityComponent::Power { c, .. } => vec![*c],
            DensityComponent::Tabulated { values, .. } => values.clone(),
        }
    }

    /// Adds the scale of `other` into `self`; both must share a shape key.
    pub(crate) fn absorb(&mut self, other: &DensityComponent) {
        match (self, other) {
            (DensityComponent::Uniform { height, .. }, DensityComponent::Uniform { height: h, .. }) => {
                *height += h
            }
            (
                DensityComponent::Exponential { scale, .. },
                DensityComponent::Exponential { scale: s, .. },
            ) => *scale += s,
            (DensityComponent::Power { c, .. }, DensityComponent::Power { c: k, .. }) => *c += k,
            (
                DensityComponent::Tabulated { values, .. },
                DensityComponent::Tabulated { values: v, .. },
            ) => values.iter_mut().zip(v).for_each(|(a, b)| *a += b),
            _ => unreachable!("absorb called on components of different shapes"),
        }
    }

    /// Mass on the signed interval `[a, b]` (bounds may be infinite), in closed form.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        match *self {
            DensityComponent::Uniform { lo, hi, height } => {
                let (l, h) = (lo.max(a), hi.min(b));
                if h > l {
                    height * (h - l)
                } else {
                    0.0
                }
            }
            DensityComponent::Exponential { rate, scale, side } => {
                let (ya, yb) = side.abs_window(a, b);
                if yb <= ya {
                    return 0.0;
                }
                scale / rate * ((-rate * ya).exp() - (-rate * yb).exp())
            }
            DensityComponent::Power { p, c, cutoff, side } => {
                let (ya, yb) = side.abs_window(a, b);
                let yb = yb.min(cutoff);
                if yb <= ya || c == 0.0 {
                    return 0.0;
                }
                if ya == 0.0 {
                    return f64::INFINITY;
                }
                c / p * (ya.powf(-p) - if yb.is_finite() { yb.powf(-p) } else { 0.0 })
            }
            DensityComponent::Tabulated {
                ref nodes,
                ref values,
            } => cells(nodes, values, a, b)
                .map(|(x0, x1, d0, d1)| 0.5 * (x1 - x0) * (d0 + d1))
                .sum(),
        }
    }

    /// `∫_a^b x ρ(x) dx` in closed form; infinite where it diverges.
    pub fn moment1_between(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        match *self {
            DensityComponent::Uniform { lo, hi, height } => {
                let (l, h) = (lo.max(a), hi.min(b));
                if h > l {
                    0.5 * height * (h * h - l * l)
                } else {
                    0.0
                }
            }
            DensityComponent::Exponential { rate, scale, side } => {
                let (ya, yb) = side.abs_window(a, b);
                if yb <= ya {
                    return 0.0;
                }
                // antiderivative of y e^{-βy}: -e^{-βy}(βy + 1)/β²
                let anti = |y: f64| {
                    if y.is_infinite() {
                        0.0
                    } else {
                        -(-rate * y).exp() * (rate * y + 1.0) / (rate * rate)
                    }
                };
                side.sign() * scale * (anti(yb) - anti(ya))
            }
            DensityComponent::Power { p, c, cutoff, side } => {
                let (ya, yb) = side.abs_window(a, b);
                let yb = yb.min(cutoff);
                if yb <= ya || c == 0.0 {
                    return 0.0;
                }
                // ∫ y^{-p} dy
                let v = if (p - 1.0).abs() < 1e-15 {
                    if ya == 0.0 || yb.is_infinite() {
                        f64::INFINITY
                    } else {
                        (yb / ya).ln()
                    }
                } else if p < 1.0 {
                    if yb.is_infinite() {
                        f64::INFINITY
                    } else {
                        (yb.powf(1.0 - p) - ya.powf(1.0 - p)) / (1.0 - p)
                    }
                } else if ya == 0.0 {
                    f64::INFINITY
                } else {
                    let top = if yb.is_infinite() { 0.0 } else { yb.powf(1.0 - p) };
                    (ya.powf(1.0 - p) - top) / (p - 1.0)
                };
                side.sign() * c * v
            }
            DensityComponent::Tabulated {
                ref nodes,
                ref values,
            } => cells(nodes, values, a, b)
                .map(|(x0, x1, d0, d1)| {
                    // exact for a linear density on [x0, x1]
                    (x1 - x0) / 6.0 * (d0 * (2.0 * x0 + x1) + d1 * (x0 + 2.0 * x1))
                })
                .sum(),
        }
    }

    /// `∫_a^b e^{irx} ρ(x) dx` in closed form; `None` for the power family.
    pub fn fourier_between(&self, a: f64, b: f64, r: f64) -> Option<Complex64> {
        if !(a < b) {
            return Some(Complex64::default());
        }
        let i = Complex64::i();
        match *self {
            DensityComponent::Uniform { lo, hi, height } => {
                let (l, h) = (lo.max(a), hi.min(b));
                if h <= l {
                    return Some(Complex64::default());
                }
                let len = h - l;
                Some((i * r * l).exp() * phi1(i * r * len) * (height * len))
            }
            DensityComponent::Exponential { rate, scale, side } => {
                let (ya, yb) = side.abs_window(a, b);
                if yb <= ya {
                    return Some(Complex64::default());
                }
                // ∫_{ya}^{yb} s e^{(i r σ - β) y} dy
                let w = Complex64::new(-rate, r * side.sign());
                let top = if yb.is_infinite() {
                    Complex64::default()
                } else {
                    (w * yb).exp()
                };
                if yb.is_finite() {
                    let len = yb - ya;
                    Some((w * ya).exp() * phi1(w * len) * (scale * len))
                } else {
                    Some((top - (w * ya).exp()) / w * scale)
                }
            }
            DensityComponent::Power { .. } => None,
            DensityComponent::Tabulated {
                ref nodes,
                ref values,
            } => Some(
                cells(nodes, values, a, b)
                    .map(|(x0, x1, d0, d1)| {
                        let len = x1 - x0;
                        let w = i * r * len;
                        (i * r * x0).exp() * (phi1(w) * (d0 * len) + phi2(w) * ((d1 - d0) * len))
                    })
                    .sum(),
            ),
        }
    }

    /// `∫_{[a,b]} f(x) ρ(x) dx` by adaptive quadrature.
    ///
    /// The power family is integrated in the variable `t = ln|x|`, which turns
    /// the algebraic singularity at the origin into exponential decay.
    pub fn integrate<F>(
        &self,
        f: &F,
        shape: IntegrandShape,
        window: (f64, f64),
        opts: &QuadOptions,
    ) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64,
    {
        let (a, b) = window;
        if !(a < b) || self.is_null() {
            return Ok(Complex64::default());
        }
        match *self {
            DensityComponent::Uniform { lo, hi, height } => {
                let (l, h) = (lo.max(a), hi.min(b));
                if h <= l {
                    return Ok(Complex64::default());
                }
                plain(&|x| f(x) * height, l, h, shape.freq, opts)
            }
            DensityComponent::Tabulated {
                ref nodes,
                ref values,
            } => {
                let mut acc = Complex64::default();
                for (x0, x1, d0, d1) in cells(nodes, values, a, b) {
                    let slope = (d1 - d0) / (x1 - x0);
                    acc += plain(&|x| f(x) * (d0 + slope * (x - x0)), x0, x1, shape.freq, opts)?;
                }
                Ok(acc)
            }
            DensityComponent::Exponential { rate, scale, side } => {
                let (ya, yb) = side.abs_window(a, b);
                let horizon = (40.0 + (scale / rate).max(1.0).ln()) / rate;
                let yb = yb.min(ya.max(0.0) + horizon);
                if yb <= ya {
                    return Ok(Complex64::default());
                }
                let s = side.sign();
                plain(
                    &|y| f(s * y) * (scale * (-rate * y).exp()),
                    ya,
                    yb,
                    shape.freq,
                    opts,
                )
            }
            DensityComponent::Power { p, c, cutoff, side } => {
                let (ya, yb) = side.abs_window(a, b);
                let yb = yb.min(cutoff);
                if yb <= ya {
                    return Ok(Complex64::default());
                }
                power_integral(f, p, c, side.sign(), ya, yb, shape, opts)
            }
        }
    }
}

fn interp(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    if nodes.is_empty() || x < nodes[0] || x > nodes[nodes.len() - 1] {
        return 0.0;
    }
    let k = nodes.partition_point(|&n| n <= x).clamp(1, nodes.len() - 1);
    let (x0, x1) = (nodes[k - 1], nodes[k]);
    let t = (x - x0) / (x1 - x0);
    values[k - 1] * (1.0 - t) + values[k] * t
}

/// Cells of a piecewise-linear density clipped to `[a, b]`, as `(x0, x1, ρ(x0), ρ(x1))`.
pub(crate) fn cells<'a>(
    nodes: &'a [f64],
    values: &'a [f64],
    a: f64,
    b: f64,
) -> impl Iterator<Item = (f64, f64, f64, f64)> + 'a {
    nodes.windows(2).filter_map(move |w| {
        let (x0, x1) = (w[0].max(a), w[1].min(b));
        if x1 <= x0 {
            None
        } else {
            Some((x0, x1, interp(nodes, values, x0), interp(nodes, values, x1)))
        }
    })
}

/// Adaptive quadrature on a finite interval with breakpoints at the compensator
/// kinks `{-1, 0, 1}` and, for oscillatory integrands, at every period.
fn plain<G>(g: &G, lo: f64, hi: f64, freq: f64, opts: &QuadOptions) -> Result<Complex64>
where
    G: Fn(f64) -> Complex64,
{
    let mut breaks = vec![-1.0, 0.0, 1.0];
    if freq > 0.0 {
        let period = 2.0 * PI / freq;
        let count = ((hi - lo) / period).ceil().min(4000.0) as usize;
        let step = (hi - lo) / count.max(1) as f64;
        breaks.extend((1..count).map(|k| lo + k as f64 * step));
    }
    quad::integrate(g, lo, hi, &breaks, opts)
}

#[allow(clippy::too_many_arguments)]
fn power_integral<F>(
    f: &F,
    p: f64,
    c: f64,
    sign: f64,
    ya: f64,
    yb: f64,
    shape: IntegrandShape,
    opts: &QuadOptions,
) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    // integrand in t = ln y: c e^{-pt} f(σ e^t)
    let in_log = |t: f64| {
        let fx = f(sign * t.exp());
        if fx == Complex64::default() {
            fx
        } else {
            fx * (c * (-p * t).exp())
        }
    };
    let tol = opts.abs_tol;
    let mut total = Complex64::default();

    // Near-origin piece (0, y_sw] in log variables.
    let mut lower = ya;
    if ya == 0.0 {
        let k = shape.zero_order;
        if k <= p {
            return Err(Error::Divergent(format!(
                "integrand of order |x|^{k} against |x|^(-1-{p}) near the origin"
            )));
        }
        let mut y_sw = yb.min(1.0);
        if shape.freq > 0.0 {
            y_sw = y_sw.min(1.0 / shape.freq);
        }
        let t_hi = y_sw.ln();
        let y0 = y_sw * 1e-4;
        let mut kconst = f(sign * y0).norm() / y0.powf(k);
        if !(kconst > 0.0 && kconst.is_finite()) {
            kconst = 1.0;
        }
        let gap = k - p;
        let mut t_lo = ((1e-3 * tol * gap) / (c * kconst)).ln() / gap;
        t_lo = t_lo.max(-300.0).min(t_hi - 1.0);
        let piece = quad::integrate(in_log, t_lo, t_hi, &[], opts)?;
        // Leading-order remainder on (0, e^{t_lo}).
        let y_min = t_lo.exp();
        let rest = f(sign * y_min) * (c * (-p * t_lo).exp() / gap);
        total += piece + rest;
        lower = y_sw;
    }
    if lower >= yb {
        return Ok(total);
    }

    // Away from the origin.
    if shape.freq > 0.0 {
        if yb.is_infinite() {
            return Err(Error::Domain(
                "oscillatory integrand over an untruncated power tail".into(),
            ));
        }
        let g = |y: f64| f(sign * y) * (c * y.powf(-1.0 - p));
        total += plain(&g, lower, yb, shape.freq, opts)?;
        return Ok(total);
    }
    let t_lo = lower.ln();
    if yb.is_finite() {
        total += quad::integrate(in_log, t_lo, yb.ln(), &[0.0], opts)?;
        return Ok(total);
    }
    let probe = [1.0, 10.0, 30.0]
        .iter()
        .map(|d| f(sign * (t_lo + d).exp()).norm())
        .fold(1e-300, f64::max);
    let t_hi = (t_lo + 1.0).max(((c * probe) / (p * 1e-3 * tol)).ln() / p);
    total += quad::integrate(in_log, t_lo, t_hi, &[0.0], opts)?;
    total += f(sign * t_hi.exp()) * (c * (-p * t_hi).exp() / p);
    Ok(total)
}
