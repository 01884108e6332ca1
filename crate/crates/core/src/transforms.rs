//! Analytic transforms of laws and triplets.
//!
//! * [`cauchy_transform`]: `G_μ(z) = ∫ 1/(z - t) μ(dt)` for a concrete law.
//! * [`free_cumulant_transform`]: the free Lévy–Khintchine integral
//!   `ηz + az² + ∫ (1/(1 - xz) - 1 - xz·1{|x|≤1}) ν(dx)` on the lower half-plane.
//! * [`classical_exponent`]: `ψ(r)` with `E e^{irX} = exp ψ(r)`.
//! * [`drift_cumulant_transform`] and [`poisson_integral_transform`]: the
//!   uncompensated Poisson-integral forms, used to cross-check the triplet
//!   bookkeeping of the `fcrm` module.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::inversion::DensityTable;
use crate::levy::{validate_levy, CharTriplet, DensityComponent, IntegrandShape, Kind, LevyMeasure, Side};
use crate::numeric::{cis_m1, cis_m1_mi, trapezoid};
use crate::quad::QuadOptions;

/// A complex argument or value.
pub type ComplexPoint = Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A probability measure given by atoms and an optional tabulated density.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteLaw {
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<(Vec<f64>, Vec<f64>)>,
}

impl ConcreteLaw {
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let law = ConcreteLaw { atoms, density };
        if law.atoms.iter().any(|(x, m)| !(x.is_finite() && *m >= 0.0)) {
            return Err(Error::Invalid("atoms need finite locations and nonnegative masses".into()));
        }
        if let Some((xs, rho)) = &law.density {
            if xs.len() != rho.len() || xs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid("density grid must be strictly increasing".into()));
            }
            if rho.iter().any(|r| !(*r >= 0.0)) {
                return Err(Error::Invalid("density values must be nonnegative".into()));
            }
        }
        let mass = law.total_mass();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("total mass {mass} is not 1")));
        }
        Ok(law)
    }

    /// `δ_c`.
    pub fn point_mass(c: f64) -> Self {
        ConcreteLaw {
            atoms: vec![(c, 1.0)],
            density: None,
        }
    }

    /// The law described by a recovered table (atoms plus the piecewise-linear
    /// density), renormalized to unit mass.
    pub fn from_table(table: &DensityTable) -> Result<Self> {
        let total = table.atom_mass() + trapezoid(&table.xs, &table.rho);
        if !(total > 0.0) {
            return Err(Error::Invalid("table carries no mass".into()));
        }
        ConcreteLaw::new(
            table.atoms.iter().map(|&(x, m)| (x, m / total)).collect(),
            Some((table.xs.clone(), table.rho.iter().map(|r| r / total).collect())),
        )
    }

    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.1).sum();
        atoms
            + self
                .density
                .as_ref()
                .map_or(0.0, |(xs, rho)| trapezoid(xs, rho))
    }
}

fn require_upper(z: Complex64, what: &str) -> Result<()> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires Im z > 0, got {z}")))
    }
}

fn require_kind(t: &CharTriplet, kind: Kind) -> Result<()> {
    if t.kind == kind {
        Ok(())
    } else {
        Err(Error::MixedKinds(format!("expected a {kind:?} triplet, got {:?}", t.kind)))
    }
}

/// Cauchy transform `G_μ(z)` for `Im z > 0`: atoms summed exactly, the density
/// integrated by the trapezoid rule on its own grid.
pub fn cauchy_transform(mu: &ConcreteLaw, z: ComplexPoint) -> Result<ComplexPoint> {
    require_upper(z, "Cauchy transform")?;
    let mut g: Complex64 = mu.atoms.iter().map(|&(c, m)| m / (z - c)).sum();
    if let Some((xs, rho)) = &mu.density {
        let vals: Vec<Complex64> = xs.iter().zip(rho).map(|(&t, &r)| r / (z - t)).collect();
        for k in 1..xs.len() {
            g += (vals[k - 1] + vals[k]) * (0.5 * (xs[k] - xs[k - 1]));
        }
    }
    Ok(g)
}

/// Free cumulant transform of a free triplet at `z` with `Im z < 0`.
pub fn free_cumulant_transform(t: &CharTriplet, z: ComplexPoint) -> Result<ComplexPoint> {
    require_kind(t, Kind::Free)?;
    free_cumulant_with(t, z, &QuadOptions::default())
}

pub(crate) fn free_cumulant_with(t: &CharTriplet, z: Complex64, opts: &QuadOptions) -> Result<Complex64> {
    if !(z.im < 0.0) {
        return Err(Error::Domain(format!(
            "free cumulant transform requires Im z < 0, got {z}"
        )));
    }
    let jumps = t.nu.integrate(
        &|x: f64| free_lk_integrand(x, z),
        IntegrandShape { zero_order: 2.0, freq: 0.0 },
        (f64::NEG_INFINITY, f64::INFINITY),
        opts,
    )?;
    Ok(z * t.eta + z * z * t.a + jumps)
}

/// `1/(1 - xz) - 1 - xz·1{|x|≤1}`, written without cancellation.
#[inline]
pub(crate) fn free_lk_integrand(x: f64, z: Complex64) -> Complex64 {
    let xz = z * x;
    let denom = Complex64::new(1.0, 0.0) - xz;
    if x.abs() <= 1.0 {
        xz * xz / denom
    } else {
        xz / denom
    }
}

/// Classical Lévy–Khintchine exponent
/// `ψ(r) = iηr - (a/2)r² + ∫ (e^{irx} - 1 - irx·1{|x|≤1}) ν(dx)`.
pub fn classical_exponent(t: &CharTriplet, r: f64) -> Result<ComplexPoint> {
    require_kind(t, Kind::Classical)?;
    classical_exponent_with(t, r, &QuadOptions::default())
}

pub(crate) fn classical_exponent_with(t: &CharTriplet, r: f64, opts: &QuadOptions) -> Result<Complex64> {
    let base = Complex64::new(-0.5 * t.a * r * r, t.eta * r);
    Ok(base + compensated_jump_exponent(&t.nu, r, opts)?)
}

/// `∫ (e^{irx} - 1 - irx·1{|x|≤1}) ν(dx)`.
pub(crate) fn compensated_jump_exponent(nu: &LevyMeasure, r: f64, opts: &QuadOptions) -> Result<Complex64> {
    if r == 0.0 {
        return Ok(Complex64::default());
    }
    let mut acc: Complex64 = nu
        .atoms
        .iter()
        .map(|&(x, w)| {
            if x.abs() <= 1.0 {
                cis_m1_mi(r * x) * w
            } else {
                cis_m1(r * x) * w
            }
        })
        .sum();
    let all = (f64::NEG_INFINITY, f64::INFINITY);
    for d in &nu.densities {
        acc += match *d {
            DensityComponent::Power { p, c, cutoff, side } if cutoff.is_infinite() => {
                power_classical_exponent(p, c, side, r)
            }
            DensityComponent::Power { .. } => d.integrate(
                &|x: f64| {
                    if x.abs() <= 1.0 {
                        cis_m1_mi(r * x)
                    } else {
                        cis_m1(r * x)
                    }
                },
                IntegrandShape { zero_order: 2.0, freq: r.abs() },
                all,
                opts,
            )?,
            _ => {
                let ft = d.fourier_between(all.0, all.1, r).expect("closed form exists");
                ft - d.mass_between(all.0, all.1)
                    - Complex64::new(0.0, r * d.moment1_between(-1.0, 1.0))
            }
        };
    }
    Ok(acc)
}

/// `∫_0^∞ (e^{iσrx} - 1 - iσrx·1{x≤1}) c x^{-1-p} dx` for side σ, in closed form.
fn power_classical_exponent(p: f64, c: f64, side: Side, r: f64) -> Complex64 {
    let r = r * side.sign();
    let ar = r.abs();
    if (p - 1.0).abs() < 1e-12 {
        return Complex64::new(-0.5 * PI * ar, r * (1.0 - EULER_GAMMA - ar.ln())) * c;
    }
    // Γ(-p) via Γ(2 - p) / ((-p)(1 - p))
    let g = gamma(2.0 - p) / (p * (p - 1.0));
    let stable = Complex64::from_polar(g * ar.powf(p), -0.5 * PI * p * r.signum());
    let drift = if p < 1.0 { -r / (1.0 - p) } else { r / (p - 1.0) };
    (stable + Complex64::new(0.0, drift)) * c
}

/// `λ ∫ (e^{irx} - 1) ν_B(dx)`: the uncompensated cumulant transform of a
/// classical Poisson integral with intensity mass `λ` and jump measure `ν_B`.
pub fn drift_cumulant_transform(nu_e_mass: f64, nu_b: &LevyMeasure, r: f64) -> Result<ComplexPoint> {
    let report = validate_levy(nu_b);
    if !report.small_jump_abs_mean.is_finite() {
        return Err(Error::Precondition(
            "drift-type transform needs ∫_{|x|≤1} |x| ν_B(dx) < ∞".into(),
        ));
    }
    if nu_e_mass == 0.0 || r == 0.0 {
        return Ok(Complex64::default());
    }
    let opts = QuadOptions::default();
    let all = (f64::NEG_INFINITY, f64::INFINITY);
    let mut acc: Complex64 = nu_b.atoms.iter().map(|&(x, w)| cis_m1(r * x) * w).sum();
    for d in &nu_b.densities {
        acc += match *d {
            DensityComponent::Power { p, c, cutoff, side } if cutoff.is_infinite() => {
                // compensated closed form plus the compensator back
                power_classical_exponent(p, c, side, r)
                    + Complex64::new(0.0, r * d.moment1_between(-1.0, 1.0))
            }
            DensityComponent::Power { .. } => d.integrate(
                &|x: f64| cis_m1(r * x),
                IntegrandShape { zero_order: 1.0, freq: r.abs() },
                all,
                &opts,
            )?,
            _ => d.fourier_between(all.0, all.1, r).expect("closed form exists") - d.mass_between(all.0, all.1),
        };
    }
    Ok(acc * nu_e_mass)
}

/// `λ ∫ (1/(1 - zx) - 1) ν_B(dx)` for `Im z < 0`: the free cumulant transform
/// of a free Poisson integral, evaluated directly without a triplet.
pub fn poisson_integral_transform(nu_e_mass: f64, nu_b: &LevyMeasure, z: ComplexPoint) -> Result<ComplexPoint> {
    if !(z.im < 0.0) {
        return Err(Error::Domain(format!("requires Im z < 0, got {z}")));
    }
    let v = nu_b.integrate(
        &|x: f64| {
            let xz = z * x;
            xz / (Complex64::new(1.0, 0.0) - xz)
        },
        IntegrandShape { zero_order: 1.0, freq: 0.0 },
        (f64::NEG_INFINITY, f64::INFINITY),
        &QuadOptions::default(),
    )?;
    Ok(v * nu_e_mass)
}
