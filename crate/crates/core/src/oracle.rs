//! Monte Carlo ground truth.
//!
//! Random-matrix models whose spectra approach the free laws (GOE for the
//! semicircle, sums of random rank-one projections for free compound Poisson,
//! Haar-rotated sums for free convolution), and a scalar sampler for
//! classical infinitely divisible laws.
//!
//! Randomness comes from ChaCha8 seeded with the user seed; every matrix,
//! rotation and scalar replicate draws from its own stream, so results do not
//! depend on thread scheduling.

use std::fmt::Write as _;

use faer::{Mat, Side as MatSide};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcrm::{classical_counterpart_law, FcrmModel, RegionSet};
use crate::levy::{cells, CharTriplet, DensityComponent, Kind, LevyMeasure};

/// Jumps below this size are dropped (and their mean compensated) when the
/// Lévy measure has infinite mass.
pub const DEFAULT_TRUNCATION: f64 = 1e-4;

/// Upper bound on the expected number of random terms one call may draw.
const MAX_TERMS: f64 = 2e8;

/// Sorted samples: eigenvalues of one matrix or pooled scalar replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    pub values: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub model_tag: String,
}

impl EmpiricalSpectrum {
    pub fn new(mut values: Vec<f64>, seed: u64, model_tag: impl Into<String>) -> Self {
        values.sort_by(f64::total_cmp);
        EmpiricalSpectrum {
            n: values.len(),
            values,
            seed,
            model_tag: model_tag.into(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n as f64
    }

    /// `(1/n) Σ vᵏ`.
    pub fn moment(&self, k: i32) -> f64 {
        self.values.iter().map(|v| v.powi(k)).sum::<f64>() / self.n as f64
    }

    /// Fraction of values with `|v| ≤ tol`.
    pub fn fraction_near_zero(&self, tol: f64) -> f64 {
        self.values.iter().filter(|v| v.abs() <= tol).count() as f64 / self.n as f64
    }

    /// CSV with header `value`, one sample per row, then `# model_tag,n,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value\n");
        for v in &self.values {
            let _ = writeln!(out, "{v:.16e}");
        }
        let _ = writeln!(out, "# {},{},{}", self.model_tag, self.n, self.seed);
        out
    }
}

/// A random-matrix model of a free infinitely divisible law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixModelSpec {
    /// Semicircle of variance `a`.
    Goe { a: f64 },
    /// Free compound Poisson with rate `lambda` and jump law `jump` restricted
    /// to `|x| ≥ floor`, normalized.
    CompoundFreePoisson {
        lambda: f64,
        jump: LevyMeasure,
        #[serde(default)]
        floor: f64,
    },
    /// `c · I`.
    Shift { c: f64 },
    /// Sum of independently rotated parts.
    Sum { parts: Vec<MatrixModelSpec> },
}

impl MatrixModelSpec {
    /// Matrix model for a free triplet: GOE for `a`, compound free Poisson
    /// for the jumps of size at least `truncation` (all jumps when `ν` is
    /// finite), and a shift absorbing the compensator.
    pub fn from_free_triplet(t: &CharTriplet, truncation: f64) -> Result<Self> {
        if t.kind != Kind::Free {
            return Err(Error::MixedKinds("matrix models realize free triplets".into()));
        }
        t.validate()?;
        let (floor, shift, rate) = jump_split(&t.nu, truncation)?;
        let mut parts = Vec::new();
        if t.a > 0.0 {
            parts.push(MatrixModelSpec::Goe { a: t.a });
        }
        if rate > 0.0 {
            parts.push(MatrixModelSpec::CompoundFreePoisson {
                lambda: rate,
                jump: t.nu.clone(),
                floor,
            });
        }
        parts.push(MatrixModelSpec::Shift { c: t.eta - shift });
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            MatrixModelSpec::Sum { parts }
        })
    }

    fn tag(&self) -> String {
        match self {
            MatrixModelSpec::Goe { a } => format!("goe(a={a})"),
            MatrixModelSpec::CompoundFreePoisson { lambda, .. } => format!("cfp(lambda={lambda})"),
            MatrixModelSpec::Shift { c } => format!("shift({c})"),
            MatrixModelSpec::Sum { parts } => {
                let inner: Vec<String> = parts.iter().map(|p| p.tag()).collect();
                format!("sum[{}]", inner.join("+"))
            }
        }
    }

    fn flatten(&self, leaves: &mut Vec<MatrixModelSpec>, shift: &mut f64) {
        match self {
            MatrixModelSpec::Sum { parts } => {
                for p in parts {
                    p.flatten(leaves, shift);
                }
            }
            MatrixModelSpec::Shift { c } => *shift += c,
            other => leaves.push(other.clone()),
        }
    }
}

/// `(floor, ∫_{floor≤|x|≤1} x ν, ν(|x| ≥ floor))`; the floor is 0 for finite `ν`.
fn jump_split(nu: &LevyMeasure, truncation: f64) -> Result<(f64, f64, f64)> {
    let floor = if nu.total_mass().is_finite() { 0.0 } else { truncation };
    if !(floor >= 0.0) || (floor == 0.0 && !nu.total_mass().is_finite()) {
        return Err(Error::Precondition(
            "infinite jump activity needs a positive truncation level".into(),
        ));
    }
    let comp = if floor == 0.0 {
        nu.compensator()
    } else {
        nu.moment1_between(-1.0, -floor) + nu.moment1_between(floor, 1.0)
    };
    Ok((floor, comp, nu.tail_mass(floor)))
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Invalid(format!("Poisson mean must be positive, got {mean}")));
    }
    let d = Poisson::new(mean).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(d.sample(rng) as usize)
}

fn eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    let mut v = m
        .self_adjoint_eigenvalues(MatSide::Lower)
        .map_err(|e| Error::Divergent(format!("symmetric eigensolver failed: {e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn require_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Invalid(format!("matrix size must be >= 2, got {n}")));
    }
    Ok(())
}

fn goe_matrix(a: f64, n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let off = (a / n as f64).sqrt();
    let diag = (2.0 * a / n as f64).sqrt();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let g = normal(rng);
            if i == j {
                m[(i, i)] = diag * g;
            } else {
                m[(i, j)] = off * g;
                m[(j, i)] = off * g;
            }
        }
    }
    m
}

/// Eigenvalues of a GOE matrix whose spectrum approaches the semicircle of variance `a`.
pub fn sample_goe(a: f64, n: usize, seed: u64) -> Result<EmpiricalSpectrum> {
    require_size(n)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Invalid(format!("GOE scale must be positive, got {a}")));
    }
    let m = goe_matrix(a, n, &mut stream_rng(seed, 0));
    Ok(EmpiricalSpectrum::new(eigenvalues(&m)?, seed, format!("goe(a={a})")))
}

/// Jump sizes and unit vectors of a compound free Poisson matrix.
fn cfp_terms(
    lambda: f64,
    sampler: &JumpSampler,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Mat<f64>)> {
    let mean = lambda * n as f64;
    if mean * n as f64 > MAX_TERMS * 10.0 {
        return Err(Error::Invalid(format!(
            "compound free Poisson with rate {lambda} at n = {n} needs too many rank-one terms; \
             raise the truncation level"
        )));
    }
    let p = poisson_count(rng, mean)?;
    let mut xs = Vec::with_capacity(p);
    let mut v = Mat::<f64>::zeros(n, p);
    for k in 0..p {
        xs.push(sampler.sample(rng));
        let mut norm2 = 0.0;
        for i in 0..n {
            let g = normal(rng);
            v[(i, k)] = g;
            norm2 += g * g;
        }
        let s = norm2.sqrt().recip();
        for i in 0..n {
            v[(i, k)] *= s;
        }
    }
    Ok((xs, v))
}

fn cfp_matrix(xs: &[f64], v: &Mat<f64>) -> Mat<f64> {
    let scaled = Mat::<f64>::from_fn(v.nrows(), v.ncols(), |i, k| v[(i, k)] * xs[k]);
    &scaled * v.transpose()
}

/// Eigenvalues of `Σ_{i≤P} xᵢ vᵢvᵢᵀ` with `P ~ Poisson(λn)`, `xᵢ` drawn from
/// the normalized jump law and `vᵢ` uniform unit vectors.
pub fn sample_compound_free_poisson(
    lambda: f64,
    jump: &LevyMeasure,
    n: usize,
    seed: u64,
) -> Result<EmpiricalSpectrum> {
    require_size(n)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Invalid(format!("rate must be positive, got {lambda}")));
    }
    let sampler = JumpSampler::new(jump, 0.0)?;
    let mut rng = stream_rng(seed, 0);
    let (xs, v) = cfp_terms(lambda, &sampler, n, &mut rng)?;
    let tag = format!("cfp(lambda={lambda})");
    let p = xs.len();
    if p < n && xs.iter().all(|&x| x > 0.0) {
        // nonzero spectrum of V D Vᵀ equals that of D^{1/2} VᵀV D^{1/2}
        let b = Mat::<f64>::from_fn(n, p, |i, k| v[(i, k)] * xs[k].sqrt());
        let gram = b.transpose() * &b;
        let mut vals = if p > 0 { eigenvalues(&gram)? } else { Vec::new() };
        vals.extend(std::iter::repeat(0.0).take(n - p));
        return Ok(EmpiricalSpectrum::new(vals, seed, tag));
    }
    Ok(EmpiricalSpectrum::new(eigenvalues(&cfp_matrix(&xs, &v))?, seed, tag))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal moved into `Q`.
fn haar_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let mut g = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            g[(i, j)] = normal(rng);
        }
    }
    let qr = g.qr();
    let r = qr.R();
    let signs: Vec<f64> = (0..n).map(|j| if r[(j, j)] < 0.0 { -1.0 } else { 1.0 }).collect();
    let q = qr.compute_Q();
    Mat::<f64>::from_fn(n, n, |i, j| q[(i, j)] * signs[j])
}

fn leaf_matrix(spec: &MatrixModelSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Mat<f64>> {
    match spec {
        MatrixModelSpec::Goe { a } => {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(Error::Invalid(format!("GOE scale must be positive, got {a}")));
            }
            Ok(goe_matrix(*a, n, rng))
        }
        MatrixModelSpec::CompoundFreePoisson { lambda, jump, floor } => {
            if !(*lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Invalid(format!("rate must be positive, got {lambda}")));
            }
            let sampler = JumpSampler::new(jump, *floor)?;
            let (xs, v) = cfp_terms(*lambda, &sampler, n, rng)?;
            Ok(cfp_matrix(&xs, &v))
        }
        MatrixModelSpec::Shift { .. } | MatrixModelSpec::Sum { .. } => {
            unreachable!("flattened before sampling")
        }
    }
}

/// Eigenvalues of `A₁ + U₂A₂U₂ᵀ + … + c·I` with independent Haar rotations
/// `Uₖ`; the spectrum approaches the free convolution of the parts.
pub fn free_add_oracle(specs: &[MatrixModelSpec], n: usize, seed: u64) -> Result<EmpiricalSpectrum> {
    require_size(n)?;
    let mut leaves = Vec::new();
    let mut shift = 0.0;
    for s in specs {
        s.flatten(&mut leaves, &mut shift);
    }
    let tag = format!(
        "free_add[{}]",
        specs.iter().map(MatrixModelSpec::tag).collect::<Vec<_>>().join("+")
    );
    if leaves.is_empty() {
        return Ok(EmpiricalSpectrum::new(vec![shift; n], seed, tag));
    }
    let mut total = Mat::<f64>::zeros(n, n);
    for (k, leaf) in leaves.iter().enumerate() {
        let m = leaf_matrix(leaf, n, &mut stream_rng(seed, 2 * k as u64))?;
        if k == 0 {
            total += &m;
        } else {
            let u = haar_orthogonal(n, &mut stream_rng(seed, 2 * k as u64 + 1));
            let rotated = &u * &m * u.transpose();
            // symmetrize away rounding
            total += Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (rotated[(i, j)] + rotated[(j, i)]));
        }
    }
    let vals = eigenvalues(&total)?.into_iter().map(|v| v + shift).collect();
    Ok(EmpiricalSpectrum::new(vals, seed, tag))
}

/// `reps` independent draws from the classical law with triplet `t`:
/// drift, `√a·Z` and the jumps of size at least the truncation level, with
/// the mean of the dropped jumps compensated. Truncation applies only to
/// infinite `ν`, and is then mandatory.
pub fn sample_classical_triplet(
    t: &CharTriplet,
    reps: usize,
    seed: u64,
    truncation: Option<f64>,
) -> Result<EmpiricalSpectrum> {
    Ok(EmpiricalSpectrum::new(classical_draws(t, reps, seed, truncation)?, seed, "classical"))
}

/// Draws in replicate order (unsorted).
pub(crate) fn classical_draws(
    t: &CharTriplet,
    reps: usize,
    seed: u64,
    truncation: Option<f64>,
) -> Result<Vec<f64>> {
    if t.kind != Kind::Classical {
        return Err(Error::MixedKinds("scalar sampler needs a classical triplet".into()));
    }
    t.validate()?;
    if !t.nu.total_mass().is_finite() && truncation.is_none() {
        return Err(Error::Precondition(
            "Lévy measure has infinite mass: set a truncation level (--truncation)".into(),
        ));
    }
    let (floor, comp, rate) = jump_split(&t.nu, truncation.unwrap_or(DEFAULT_TRUNCATION))?;
    if rate * reps as f64 > MAX_TERMS {
        return Err(Error::Invalid(format!(
            "{reps} replicates with {rate:.3e} expected jumps each is too many; raise the truncation level"
        )));
    }
    let sampler = if rate > 0.0 { Some(JumpSampler::new(&t.nu, floor)?) } else { None };
    let base = t.eta - comp;
    let sd = t.a.sqrt();
    (0..reps)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let mut x = base;
            if sd > 0.0 {
                x += sd * normal(&mut rng);
            }
            if let Some(s) = &sampler {
                for _ in 0..poisson_count(&mut rng, rate)? {
                    x += s.sample(&mut rng);
                }
            }
            Ok(x)
        })
        .collect()
}

/// Samples of `α(E) + L(E)`, with `L` the classical Poisson integral of the model.
pub fn sample_classical_l(
    model: &FcrmModel,
    e: &RegionSet,
    reps: usize,
    seed: u64,
    truncation: Option<f64>,
) -> Result<EmpiricalSpectrum> {
    let t = classical_counterpart_law(model, e)?;
    let mut s = sample_classical_triplet(&t, reps, seed, truncation)?;
    s.model_tag = format!("classical_L({e})");
    Ok(s)
}

#[derive(Debug, Clone)]
enum Piece {
    Atom(f64),
    /// Linear density from `f0` at `x0` to `f1` at `x1`.
    Linear { x0: f64, x1: f64, f0: f64, f1: f64 },
    /// `e^{-rate·y}` on `y ≥ start`, `x = sign·y`.
    Exp { start: f64, rate: f64, sign: f64 },
    /// `y^{-1-p}` on `[lo, hi)`, `x = sign·y`.
    Power { lo: f64, hi: f64, p: f64, sign: f64 },
}

impl Piece {
    fn draw(&self, u: f64) -> f64 {
        match *self {
            Piece::Atom(x) => x,
            Piece::Linear { x0, x1, f0, f1 } => {
                let t = u * (f0 + f1) / (f0 + (f0 * f0 + u * (f1 * f1 - f0 * f0)).sqrt());
                x0 + t.clamp(0.0, 1.0) * (x1 - x0)
            }
            Piece::Exp { start, rate, sign } => sign * (start - (-u).ln_1p() / rate),
            Piece::Power { lo, hi, p, sign } => {
                let a = lo.powf(-p);
                let b = if hi.is_finite() { hi.powf(-p) } else { 0.0 };
                sign * (a - u * (a - b)).powf(-1.0 / p)
            }
        }
    }
}

/// Draws from `ν` restricted to `|x| ≥ floor`, normalized.
struct JumpSampler {
    cumulative: Vec<f64>,
    pieces: Vec<Piece>,
}

impl JumpSampler {
    fn new(nu: &LevyMeasure, floor: f64) -> Result<Self> {
        let mut weighted: Vec<(f64, Piece)> = Vec::new();
        for &(x, w) in &nu.atoms {
            if x.abs() >= floor && w > 0.0 {
                weighted.push((w, Piece::Atom(x)));
            }
        }
        let windows = [(f64::NEG_INFINITY, -floor), (floor, f64::INFINITY)];
        for d in &nu.densities {
            match d {
                DensityComponent::Uniform { lo, hi, height } => {
                    let nodes = [*lo, *hi];
                    let values = [*height, *height];
                    for (a, b) in windows {
                        linear_pieces(&nodes, &values, a, b, &mut weighted);
                    }
                }
                DensityComponent::Tabulated { nodes, values } => {
                    for (a, b) in windows {
                        linear_pieces(nodes, values, a, b, &mut weighted);
                    }
                }
                DensityComponent::Exponential { rate, scale, side } => {
                    let w = scale / rate * (-rate * floor).exp();
                    if w > 0.0 {
                        weighted.push((w, Piece::Exp { start: floor, rate: *rate, sign: side.sign() }));
                    }
                }
                DensityComponent::Power { p, c, cutoff, side } => {
                    if *c == 0.0 || *cutoff <= floor {
                        continue;
                    }
                    if floor == 0.0 {
                        return Err(Error::Precondition(
                            "power-law jumps have infinite mass; a truncation level is required".into(),
                        ));
                    }
                    let hi_term = if cutoff.is_finite() { cutoff.powf(-p) } else { 0.0 };
                    let w = c / p * (floor.powf(-p) - hi_term);
                    weighted.push((w, Piece::Power { lo: floor, hi: *cutoff, p: *p, sign: side.sign() }));
                }
            }
        }
        if weighted.is_empty() {
            return Err(Error::Invalid("jump law has no mass above the truncation level".into()));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(weighted.len());
        let mut pieces = Vec::with_capacity(weighted.len());
        for (w, p) in weighted {
            acc += w;
            cumulative.push(acc);
            pieces.push(p);
        }
        Ok(JumpSampler { cumulative, pieces })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let total = *self.cumulative.last().expect("nonempty");
        let pick: f64 = rng.random::<f64>() * total;
        let k = self
            .cumulative
            .partition_point(|&c| c <= pick)
            .min(self.pieces.len() - 1);
        self.pieces[k].draw(rng.random::<f64>())
    }
}

fn linear_pieces(nodes: &[f64], values: &[f64], a: f64, b: f64, out: &mut Vec<(f64, Piece)>) {
    for (x0, x1, f0, f1) in cells(nodes, values, a, b) {
        let w = 0.5 * (x1 - x0) * (f0 + f1);
        if w > 0.0 {
            out.push((w, Piece::Linear { x0, x1, f0, f1 }));
        }
    }
}
