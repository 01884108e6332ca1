//! Lévy measures and characteristic triplets.
//!
//! A [`CharTriplet`] `(a, η, ν)` describes an infinitely divisible law in
//! either the classical or the free world. Both worlds use the same
//! compensator `x·1{|x| ≤ 1}`, so one set of data serves both and the
//! Bercovici–Pata map only changes the [`Kind`] tag.

mod component;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use component::{DensityComponent, IntegrandShape, Side};
pub(crate) use component::cells;

use crate::error::{Error, Result};
use crate::quad::QuadOptions;

/// Atom locations closer than this are treated as the same point.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// A Lévy measure: finitely many atoms plus density components.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LevyMeasure {
    /// `(location, weight)` pairs.
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default)]
    pub densities: Vec<DensityComponent>,
}

impl LevyMeasure {
    pub fn empty() -> Self {
        LevyMeasure::default()
    }

    /// `weight · δ_location`.
    pub fn atom(location: f64, weight: f64) -> Self {
        LevyMeasure {
            atoms: vec![(location, weight)],
            densities: Vec::new(),
        }
    }

    pub fn from_density(component: DensityComponent) -> Self {
        LevyMeasure {
            atoms: Vec::new(),
            densities: vec![component],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.densities.is_empty()
    }

    pub fn has_densities(&self) -> bool {
        !self.densities.is_empty()
    }

    /// Total mass ν(ℝ); infinite for the power family.
    pub fn total_mass(&self) -> f64 {
        self.mass_between(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// ν([a, b]) in closed form.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|(x, _)| *x >= a && *x <= b)
            .map(|(_, w)| w)
            .sum();
        atoms + self.densities.iter().map(|d| d.mass_between(a, b)).sum::<f64>()
    }

    /// `ν({|x| ≥ r})`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|(x, _)| x.abs() >= r)
            .map(|(_, w)| w)
            .sum();
        atoms
            + self
                .densities
                .iter()
                .map(|d| d.mass_between(f64::NEG_INFINITY, -r) + d.mass_between(r, f64::INFINITY))
                .sum::<f64>()
    }

    /// `∫_{[a,b]} x ν(dx)` in closed form (infinite where it diverges).
    pub fn moment1_between(&self, a: f64, b: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|(x, _)| *x >= a && *x <= b)
            .map(|(x, w)| x * w)
            .sum();
        atoms + self.densities.iter().map(|d| d.moment1_between(a, b)).sum::<f64>()
    }

    /// The compensator drift `∫_{|x| ≤ 1} x ν(dx)`.
    pub fn compensator(&self) -> f64 {
        self.moment1_between(-1.0, 1.0)
    }

    /// `∫_{[a,b]} f dν`: atoms exactly, densities by adaptive quadrature.
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
        let mut acc: Complex64 = self
            .atoms
            .iter()
            .filter(|(x, _)| *x >= window.0 && *x <= window.1)
            .map(|&(x, w)| f(x) * w)
            .sum();
        for d in &self.densities {
            acc += d.integrate(f, shape, window, opts)?;
        }
        Ok(acc)
    }

    /// `k · ν`. A zero factor yields the empty measure.
    pub fn scaled(&self, k: f64) -> LevyMeasure {
        if k == 0.0 {
            return LevyMeasure::empty();
        }
        LevyMeasure {
            atoms: self.atoms.iter().map(|&(x, w)| (x, w * k)).collect(),
            densities: self.densities.iter().map(|d| d.scaled(k)).collect(),
        }
        .normalized()
    }

    /// `ν₁ + ν₂`, normalized.
    pub fn add(&self, other: &LevyMeasure) -> LevyMeasure {
        let mut out = self.clone();
        out.atoms.extend_from_slice(&other.atoms);
        out.densities.extend(other.densities.iter().cloned());
        out.normalized()
    }

    /// Canonical form: atoms sorted with coincident locations merged, density
    /// components of identical shape merged, null pieces dropped.
    pub fn normalized(&self) -> LevyMeasure {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if (last.0 - x).abs() <= ATOM_MERGE_TOL => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        merged.retain(|(_, w)| *w != 0.0);

        let mut comps: Vec<DensityComponent> = Vec::new();
        for d in &self.densities {
            match comps.iter_mut().find(|c| c.shape_key() == d.shape_key()) {
                Some(c) => c.absorb(d),
                None => comps.push(d.clone()),
            }
        }
        comps.retain(|c| !c.is_null());
        comps.sort_by(|a, b| a.shape_key().cmp(&b.shape_key()));
        LevyMeasure {
            atoms: merged,
            densities: comps,
        }
    }
}

/// Classical (`∗`) or free (`⊞`) infinite divisibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Classical,
    Free,
}

impl Kind {
    pub fn flipped(self) -> Kind {
        match self {
            Kind::Classical => Kind::Free,
            Kind::Free => Kind::Classical,
        }
    }
}

/// Characteristic triplet `(a, η, ν)`: Gaussian part, drift and Lévy measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharTriplet {
    pub kind: Kind,
    pub a: f64,
    pub eta: f64,
    #[serde(default)]
    pub nu: LevyMeasure,
}

impl CharTriplet {
    pub fn new(kind: Kind, a: f64, eta: f64, nu: LevyMeasure) -> Self {
        CharTriplet { kind, a, eta, nu }
    }

    pub fn free(a: f64, eta: f64, nu: LevyMeasure) -> Self {
        CharTriplet::new(Kind::Free, a, eta, nu)
    }

    pub fn classical(a: f64, eta: f64, nu: LevyMeasure) -> Self {
        CharTriplet::new(Kind::Classical, a, eta, nu)
    }

    /// The triplet `(0, 0, ∅)` of `δ_0`.
    pub fn zero(kind: Kind) -> Self {
        CharTriplet::new(kind, 0.0, 0.0, LevyMeasure::empty())
    }

    /// `(0, c, ∅)`, the triplet of `δ_c` in either world.
    pub fn point_mass(kind: Kind, c: f64) -> Self {
        CharTriplet::new(kind, 0.0, c, LevyMeasure::empty())
    }

    /// `(0, λ, λδ_1)`: Poisson (classical) or Marchenko–Pastur (free) with rate λ.
    pub fn poisson(kind: Kind, rate: f64) -> Self {
        CharTriplet::new(kind, 0.0, rate, LevyMeasure::atom(1.0, rate))
    }

    /// True when the law is a point mass (no Gaussian part, no jumps).
    pub fn is_degenerate(&self) -> bool {
        self.a == 0.0 && self.nu.normalized().is_empty()
    }

    /// Drift with the compensator removed, `η - ∫_{|x|≤1} x ν(dx)`.
    /// Infinite when ν has an infinite small-jump mean.
    pub fn decompensated_drift(&self) -> f64 {
        let comp = self.nu.compensator();
        if comp.is_finite() {
            self.eta - comp
        } else {
            f64::NAN
        }
    }

    /// Checks `a ≥ 0`, a finite drift and an admissible Lévy measure.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.a >= 0.0 && self.a.is_finite()) {
            problems.push(format!("Gaussian part a must be finite and >= 0, got {}", self.a));
        }
        if !self.eta.is_finite() {
            problems.push(format!("drift must be finite, got {}", self.eta));
        }
        let report = validate_levy(&self.nu);
        problems.extend(report.messages);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(problems.join("; ")))
        }
    }

    /// Free-regular check: `a = 0`, ν on `(0, ∞)` with finite small-jump mean,
    /// and nonnegative decompensated drift.
    pub fn free_regular_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.a != 0.0 {
            out.push(format!("free-regular law needs a = 0, got {}", self.a));
        }
        if !positive_support(&self.nu) {
            out.push("free-regular law needs a Lévy measure supported on (0, ∞)".into());
        }
        let d = self.decompensated_drift();
        if !(d >= -1e-12) {
            out.push(format!("free-regular law needs decompensated drift >= 0, got {d}"));
        }
        out
    }

    /// Same data with the kind tag replaced.
    pub fn with_kind(&self, kind: Kind) -> CharTriplet {
        CharTriplet {
            kind,
            ..self.clone()
        }
    }

    pub fn normalized(&self) -> CharTriplet {
        CharTriplet {
            nu: self.nu.normalized(),
            ..self.clone()
        }
    }

    /// Largest relative discrepancy between two triplets after normalization;
    /// infinite if the kinds or the shapes of their measures differ.
    pub fn discrepancy(&self, other: &CharTriplet) -> f64 {
        if self.kind != other.kind {
            return f64::INFINITY;
        }
        let rel = |x: f64, y: f64| {
            let d = (x - y).abs();
            if d == 0.0 {
                0.0
            } else {
                d / x.abs().max(y.abs()).max(1.0)
            }
        };
        let (p, q) = (self.nu.normalized(), other.nu.normalized());
        if p.atoms.len() != q.atoms.len() || p.densities.len() != q.densities.len() {
            return f64::INFINITY;
        }
        let mut worst = rel(self.a, other.a).max(rel(self.eta, other.eta));
        for (x, y) in p.atoms.iter().zip(&q.atoms) {
            if (x.0 - y.0).abs() > ATOM_MERGE_TOL {
                return f64::INFINITY;
            }
            worst = worst.max(rel(x.1, y.1));
        }
        for (x, y) in p.densities.iter().zip(&q.densities) {
            if x.shape_key() != y.shape_key() {
                return f64::INFINITY;
            }
            for (s, t) in x.scale_vector().iter().zip(y.scale_vector()) {
                worst = worst.max(rel(*s, t));
            }
        }
        worst
    }

    /// Equality after normalization, up to relative tolerance `tol`.
    pub fn approx_eq(&self, other: &CharTriplet, tol: f64) -> bool {
        self.discrepancy(other) <= tol
    }
}

fn positive_support(nu: &LevyMeasure) -> bool {
    nu.atoms.iter().all(|(x, _)| *x > 0.0)
        && nu.densities.iter().all(|d| match d {
            DensityComponent::Uniform { lo, .. } => *lo >= 0.0,
            DensityComponent::Exponential { side, .. } | DensityComponent::Power { side, .. } => {
                *side == Side::Pos
            }
            DensityComponent::Tabulated { nodes, values } => nodes
                .iter()
                .zip(values)
                .all(|(x, v)| *x > 0.0 || *v == 0.0),
        })
}

/// Whether ν is carried by `(0, ∞)`.
pub fn is_positive_measure(nu: &LevyMeasure) -> bool {
    positive_support(nu)
}

/// Outcome of [`validate_levy`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    /// `∫ min(x², 1) ν(dx)`, NaN when structural checks failed.
    pub min_x2_integral: f64,
    /// `∫_{|x| ≤ 1} |x| ν(dx)`; may be infinite.
    pub small_jump_abs_mean: f64,
    pub messages: Vec<String>,
}

/// Structural and integrability checks on a Lévy measure. Never fails; problems
/// are listed in the report.
pub fn validate_levy(nu: &LevyMeasure) -> ValidationReport {
    let mut messages = Vec::new();
    for &(x, w) in &nu.atoms {
        if x == 0.0 {
            messages.push("atom at zero".to_string());
        } else if !x.is_finite() {
            messages.push(format!("atom location must be finite, got {x}"));
        }
        if !(w > 0.0 && w.is_finite()) {
            messages.push(format!("atom weight must be positive, got {w} at {x}"));
        }
    }
    let mut locs: Vec<f64> = nu.atoms.iter().map(|a| a.0).collect();
    locs.sort_by(f64::total_cmp);
    if locs.windows(2).any(|w| w[0] == w[1]) {
        messages.push("duplicate atom location".to_string());
    }
    for d in &nu.densities {
        messages.extend(d.problems(true));
    }
    if !messages.is_empty() {
        return ValidationReport {
            ok: false,
            min_x2_integral: f64::NAN,
            small_jump_abs_mean: f64::NAN,
            messages,
        };
    }

    let opts = QuadOptions::default();
    let whole = (f64::NEG_INFINITY, f64::INFINITY);
    let min_x2 = nu.integrate(
        &|x: f64| Complex64::new((x * x).min(1.0), 0.0),
        IntegrandShape { zero_order: 2.0, freq: 0.0 },
        whole,
        &opts,
    );
    let min_x2_integral = match min_x2 {
        Ok(v) if v.re.is_finite() => v.re,
        Ok(_) | Err(_) => {
            messages.push("Lévy integrability ∫min(x², 1) ν(dx) < ∞ fails".to_string());
            f64::INFINITY
        }
    };
    let small_jump_abs_mean = match nu.integrate(
        &|x: f64| Complex64::new(x.abs(), 0.0),
        IntegrandShape { zero_order: 1.0, freq: 0.0 },
        (-1.0, 1.0),
        &opts,
    ) {
        Ok(v) => v.re,
        Err(_) => f64::INFINITY,
    };
    ValidationReport {
        ok: messages.is_empty(),
        min_x2_integral,
        small_jump_abs_mean,
        messages,
    }
}

/// Componentwise sum `(a₁ + a₂, η₁ + η₂, ν₁ + ν₂)`: the triplet of `μ₁ ⊞ μ₂`
/// (free) or `μ₁ ∗ μ₂` (classical).
pub fn triplet_add(t1: &CharTriplet, t2: &CharTriplet) -> Result<CharTriplet> {
    if t1.kind != t2.kind {
        return Err(Error::MixedKinds(format!(
            "mixed kinds: {:?} + {:?}",
            t1.kind, t2.kind
        )));
    }
    Ok(CharTriplet {
        kind: t1.kind,
        a: t1.a + t2.a,
        eta: t1.eta + t2.eta,
        nu: t1.nu.add(&t2.nu),
    })
}

/// Convolution with `δ_c`: `(a, η + c, ν)`.
pub fn triplet_shift(t: &CharTriplet, c: f64) -> CharTriplet {
    CharTriplet {
        eta: t.eta + c,
        ..t.clone()
    }
}
