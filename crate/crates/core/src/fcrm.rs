//! Free completely random measures on the line.
//!
//! A model is `G(E) = α(E) + H(E) + J(E)`: a deterministic measure `α`, a
//! free Poisson integral `H` with intensity `ν_E ⊗ ν_B`, and fixed atoms
//! carrying free-regular laws. Every law computation happens on free
//! characteristic triplets, so additivity over disjoint regions is exact up
//! to rounding in the region masses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::{free_density, ks_between, GridSpec};
use crate::levy::{
    is_positive_measure, triplet_add, triplet_shift, validate_levy, CharTriplet, DensityComponent,
    Kind, LevyMeasure,
};
use crate::oracle::{free_add_oracle, MatrixModelSpec, DEFAULT_TRUNCATION};

/// Relative tolerance for triplet equality in additivity checks.
pub const ADDITIVITY_TOL: f64 = 1e-9;

/// A finite union of half-open intervals `[lo, hi)`, kept sorted, disjoint
/// and with touching pieces merged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct RegionSet {
    intervals: Vec<(f64, f64)>,
}

impl RegionSet {
    pub fn empty() -> Self {
        RegionSet::default()
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        RegionSet::from_intervals(vec![(lo, hi)])
    }

    /// Normalizes arbitrary (possibly overlapping) intervals.
    pub fn from_intervals(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &intervals {
            if lo.is_nan() || hi.is_nan() || !(lo < hi) {
                return Err(Error::Invalid(format!("interval needs lo < hi, got [{lo},{hi})")));
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match out.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        Ok(RegionSet { intervals: out })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= x && x < hi)
    }

    pub fn union(&self, other: &RegionSet) -> RegionSet {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        RegionSet::from_intervals(all).expect("normalized inputs")
    }

    pub fn intersects(&self, other: &RegionSet) -> bool {
        self.intervals
            .iter()
            .any(|&(a, b)| other.intervals.iter().any(|&(c, d)| a < d && c < b))
    }

    /// Whether every point of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &RegionSet) -> bool {
        self.intervals.iter().all(|&(a, b)| {
            other
                .intervals
                .iter()
                .any(|&(c, d)| c <= a && b <= d)
        })
    }

    /// Total length (Lebesgue measure).
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

impl TryFrom<Vec<(f64, f64)>> for RegionSet {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        RegionSet::from_intervals(v)
    }
}

impl From<RegionSet> for Vec<(f64, f64)> {
    fn from(r: RegionSet) -> Self {
        r.intervals
    }
}

/// `[a,b)+[c,d)`, whitespace ignored, endpoints strictly increasing.
/// `∅`, `{}` and the empty string denote the empty set.
impl FromStr for RegionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() || s == "∅" || s == "{}" {
            return Ok(RegionSet::empty());
        }
        let mut intervals = Vec::new();
        let mut prev = f64::NEG_INFINITY;
        for piece in s.split('+') {
            let inner = piece
                .strip_prefix('[')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| Error::Parse(format!("region piece {piece:?} must look like [a,b)")))?;
            let (a, b) = inner
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("region piece {piece:?} needs two endpoints")))?;
            let num = |t: &str| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| Error::Parse(format!("bad region endpoint {t:?}")))
            };
            let (a, b) = (num(a)?, num(b)?);
            if !(a < b) || (!intervals.is_empty() && !(prev < a)) {
                return Err(Error::Parse(format!("region endpoints must increase strictly: {s}")));
            }
            prev = b;
            intervals.push((a, b));
        }
        RegionSet::from_intervals(intervals)
    }
}

impl fmt::Display for RegionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("∅");
        }
        for (k, (a, b)) in self.intervals.iter().enumerate() {
            if k > 0 {
                f.write_str("+")?;
            }
            write!(f, "[{a},{b})")?;
        }
        Ok(())
    }
}

/// A nonnegative measure on the line: weighted atoms plus density components.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BaseMeasure {
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default)]
    pub densities: Vec<DensityComponent>,
}

impl BaseMeasure {
    pub fn zero() -> Self {
        BaseMeasure::default()
    }

    /// Lebesgue measure restricted to `[lo, hi]`, times `height`.
    pub fn uniform(lo: f64, hi: f64, height: f64) -> Self {
        BaseMeasure {
            atoms: Vec::new(),
            densities: vec![DensityComponent::Uniform { lo, hi, height }],
        }
    }

    pub fn with_atom(mut self, location: f64, weight: f64) -> Self {
        self.atoms.push((location, weight));
        self
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for &(x, w) in &self.atoms {
            if !x.is_finite() {
                out.push(format!("atom location must be finite, got {x}"));
            }
            if !(w >= 0.0 && w.is_finite()) {
                out.push(format!("atom weight must be finite and >= 0, got {w} at {x}"));
            }
        }
        for d in &self.densities {
            out.extend(d.problems(false));
        }
        out
    }
}

/// `m(E)`: atoms in `E` plus the density mass over `E` (possibly infinite).
pub fn region_mass(m: &BaseMeasure, e: &RegionSet) -> f64 {
    let atoms: f64 = m.atoms.iter().filter(|(x, _)| e.contains(*x)).map(|a| a.1).sum();
    let dens: f64 = e
        .intervals()
        .iter()
        .map(|&(lo, hi)| m.densities.iter().map(|d| d.mass_between(lo, hi)).sum::<f64>())
        .sum();
    atoms + dens
}

/// A fixed atom of the random measure: location plus a free-regular law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedAtom {
    pub location: f64,
    pub triplet: CharTriplet,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FcrmModel {
    #[serde(default)]
    pub alpha: BaseMeasure,
    #[serde(default, rename = "nu_E")]
    pub nu_e: BaseMeasure,
    #[serde(default, rename = "nu_B")]
    pub nu_b: LevyMeasure,
    #[serde(default)]
    pub fixed_atoms: Vec<FixedAtom>,
}

impl FcrmModel {
    /// Deterministic model `G = α`.
    pub fn deterministic(alpha: BaseMeasure) -> Self {
        FcrmModel {
            alpha,
            ..FcrmModel::default()
        }
    }

    /// Every violated invariant, prefixed by the offending field.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        out.extend(self.alpha.problems().into_iter().map(|m| format!("alpha: {m}")));
        out.extend(self.nu_e.problems().into_iter().map(|m| format!("nu_E: {m}")));
        let report = validate_levy(&self.nu_b);
        out.extend(report.messages.iter().map(|m| format!("nu_B: {m}")));
        if report.ok {
            if !is_positive_measure(&self.nu_b) {
                out.push("nu_B: must be supported on (0, ∞)".into());
            }
            if !report.small_jump_abs_mean.is_finite() {
                out.push("nu_B: needs ∫_{|x|≤1} |x| ν_B(dx) < ∞".into());
            }
        }
        let mut locs = Vec::new();
        for (k, atom) in self.fixed_atoms.iter().enumerate() {
            let t = &atom.triplet;
            if !atom.location.is_finite() {
                out.push(format!("fixed_atoms[{k}]: location must be finite"));
            }
            if t.kind != Kind::Free {
                out.push(format!("fixed_atoms[{k}]: triplet must be free"));
            }
            if let Err(e) = t.validate() {
                out.push(format!("fixed_atoms[{k}]: {e}"));
            } else {
                out.extend(t.free_regular_problems().into_iter().map(|m| format!("fixed_atoms[{k}]: {m}")));
            }
            locs.push(atom.location);
        }
        locs.sort_by(f64::total_cmp);
        if locs.windows(2).any(|w| w[0] == w[1]) {
            out.push("fixed_atoms: locations must be distinct".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(p.join("; ")))
        }
    }

    pub fn has_fixed_atoms(&self) -> bool {
        !self.fixed_atoms.is_empty()
    }
}

/// Law of `H(E)`: with `λ = ν_E(E)`, the triplet `(0, λ∫_{|x|≤1} x ν_B, λν_B)`.
///
/// The cumulant transform of `H(E)` is the uncompensated integral
/// `λ∫(1/(1-zx) - 1) ν_B(dx)`; moving the compensator into the drift gives
/// the triplet form, which needs a finite small-jump mean.
pub fn h_law(model: &FcrmModel, e: &RegionSet) -> Result<CharTriplet> {
    let lambda = region_mass(&model.nu_e, e);
    if !lambda.is_finite() {
        return Err(Error::Domain(format!("ν_E({e}) is infinite")));
    }
    if lambda == 0.0 {
        return Ok(CharTriplet::zero(Kind::Free));
    }
    let report = validate_levy(&model.nu_b);
    if !report.small_jump_abs_mean.is_finite() {
        return Err(Error::Precondition(
            "the Poisson integral H(E) needs ∫_{|x|≤1} |x| ν_B(dx) < ∞".into(),
        ));
    }
    Ok(CharTriplet::free(
        0.0,
        lambda * model.nu_b.compensator(),
        model.nu_b.scaled(lambda),
    ))
}

/// Law of `J(E)`: free convolution of the fixed-atom laws located in `E`.
pub fn j_law(model: &FcrmModel, e: &RegionSet) -> Result<CharTriplet> {
    model
        .fixed_atoms
        .iter()
        .filter(|a| e.contains(a.location))
        .try_fold(CharTriplet::zero(Kind::Free), |acc, a| triplet_add(&acc, &a.triplet))
}

/// Law of `G(E) = α(E) + H(E) + J(E)`.
pub fn g_law(model: &FcrmModel, e: &RegionSet) -> Result<CharTriplet> {
    let alpha = region_mass(&model.alpha, e);
    if !alpha.is_finite() {
        return Err(Error::Domain(format!("α({e}) is infinite")));
    }
    let sum = triplet_add(&h_law(model, e)?, &j_law(model, e)?)?;
    Ok(triplet_shift(&sum, alpha))
}

/// Classical law of `α(E) + L(E)` with `L` the classical Poisson integral of
/// the same intensity. Its data coincide with [`g_law`]; only the kind differs.
pub fn classical_counterpart_law(model: &FcrmModel, e: &RegionSet) -> Result<CharTriplet> {
    if model.has_fixed_atoms() {
        return Err(Error::Precondition(
            "the classical counterpart exists only for models without fixed atoms".into(),
        ));
    }
    Ok(g_law(model, e)?.with_kind(Kind::Classical))
}

/// Matrix-oracle settings for [`check_additivity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSettings {
    pub n: usize,
    pub seed: u64,
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub union: String,
    pub union_law: CharTriplet,
    pub parts_sum: CharTriplet,
    pub discrepancy: f64,
    pub exact: bool,
    /// KS distance between the union's free density and the spectrum of the
    /// rotated sum of the parts' matrix models.
    pub oracle_ks: Option<f64>,
}

/// Checks `law(G(∪Eᵢ)) = ⊞ᵢ law(G(Eᵢ))` on triplets, optionally against a
/// random-matrix realization of the free sum.
pub fn check_additivity(
    model: &FcrmModel,
    parts: &[RegionSet],
    oracle: Option<OracleSettings>,
) -> Result<AdditivityReport> {
    for (i, p) in parts.iter().enumerate() {
        for q in &parts[i + 1..] {
            if p.intersects(q) {
                return Err(Error::Invalid(format!("parts {p} and {q} overlap")));
            }
        }
    }
    let union = parts.iter().fold(RegionSet::empty(), |acc, p| acc.union(p));
    let union_law = g_law(model, &union)?;
    let part_laws: Vec<CharTriplet> = parts.iter().map(|p| g_law(model, p)).collect::<Result<_>>()?;
    let parts_sum = part_laws
        .iter()
        .try_fold(CharTriplet::zero(Kind::Free), |acc, t| triplet_add(&acc, t))?;
    let discrepancy = union_law.discrepancy(&parts_sum);

    let oracle_ks = match oracle {
        None => None,
        Some(s) => {
            let specs: Vec<MatrixModelSpec> = part_laws
                .iter()
                .map(|t| MatrixModelSpec::from_free_triplet(t, DEFAULT_TRUNCATION))
                .collect::<Result<_>>()?;
            let spectrum = free_add_oracle(&specs, s.n, s.seed)?;
            let grid = match s.grid {
                Some(g) => g,
                None => GridSpec::around(&union_law, 801)?,
            };
            Some(ks_between(&free_density(&union_law, &grid)?, &spectrum))
        }
    };

    Ok(AdditivityReport {
        union: union.to_string(),
        union_law,
        parts_sum,
        discrepancy,
        exact: discrepancy <= ADDITIVITY_TOL,
        oracle_ks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementReport {
    /// Per coarse set: its law, the sum over its refining sets and their discrepancy.
    pub rows: Vec<(String, CharTriplet, CharTriplet, f64)>,
    pub consistent: bool,
}

/// For a refinement `fine` of `coarse` (each coarse set is a union of fine
/// sets), checks that each coarse law is the free convolution of the laws of
/// the fine sets inside it.
pub fn check_refinement(
    model: &FcrmModel,
    coarse: &[RegionSet],
    fine: &[RegionSet],
) -> Result<RefinementReport> {
    for (i, p) in fine.iter().enumerate() {
        if fine[i + 1..].iter().any(|q| p.intersects(q)) {
            return Err(Error::Invalid(format!("refining set {p} overlaps another")));
        }
    }
    let mut rows = Vec::new();
    for c in coarse {
        let inside: Vec<&RegionSet> = fine.iter().filter(|f| f.is_subset_of(c)).collect();
        let cover = inside.iter().fold(RegionSet::empty(), |acc, f| acc.union(f));
        if (cover.length() - c.length()).abs() > 1e-12 * c.length().max(1.0) || !c.is_subset_of(&cover) {
            return Err(Error::Invalid(format!("{c} is not a union of refining sets")));
        }
        let law = g_law(model, c)?;
        let sum = inside
            .iter()
            .try_fold(CharTriplet::zero(Kind::Free), |acc, f| triplet_add(&acc, &g_law(model, f)?))?;
        let d = law.discrepancy(&sum);
        rows.push((c.to_string(), law, sum, d));
    }
    let consistent = rows.iter().all(|r| r.3 <= ADDITIVITY_TOL);
    Ok(RefinementReport { rows, consistent })
}
