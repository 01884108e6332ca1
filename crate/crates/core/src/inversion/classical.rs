use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use super::{DensityTable, GridSpec};
use crate::error::{Error, Result};
use crate::levy::{CharTriplet, DensityComponent, Kind, LevyMeasure};
use crate::quad::QuadOptions;
use crate::transforms::{classical_exponent_with, compensated_jump_exponent};

const CF_FLOOR: f64 = 1e-12;
const MAX_FREQUENCIES: usize = 200_000;
const CHUNK: usize = 2048;
/// Lattice enumeration keeps at most this many support points.
const MAX_SUPPORT: usize = 200_000;

/// Density of the classical infinitely divisible law with triplet `t`.
///
/// Pure-jump laws with purely atomic, finite `ν` are discrete: their atoms are
/// enumerated exactly and the table carries a note instead of a density. When
/// `a = 0` and `ν` has finite mass, the discrete part `e^{-ν_c(ℝ)}·D` (no jumps
/// from the density components) is reported as atoms and only the remainder
/// is Fourier-inverted.
pub fn classical_density(t: &CharTriplet, g: &GridSpec) -> Result<DensityTable> {
    if t.kind != Kind::Classical {
        return Err(Error::MixedKinds("classical_density needs a classical triplet".into()));
    }
    t.validate()?;
    g.validate()?;
    let xs = g.nodes();
    let zeros = vec![0.0; xs.len()];
    if t.is_degenerate() {
        let mut table = DensityTable::assemble(xs, zeros, vec![(t.eta, 1.0)]);
        table.note = Some("point mass".into());
        return Ok(table);
    }

    let finite_jumps = t.a == 0.0 && t.nu.total_mass().is_finite();
    if finite_jumps && !t.nu.has_densities() {
        let atoms = compound_poisson_atoms(t.decompensated_drift(), &t.nu.atoms)?;
        let mut table = DensityTable::assemble(xs, zeros, atoms);
        table.note = Some("discrete law: atoms enumerated, no density".into());
        return Ok(table);
    }

    let opts = QuadOptions::default();
    // With a = 0 and finite ν, split off the discrete part e^{-λ_c}·D and the
    // single-jump term e^{-λ_c}·D∗ν_c; both are known in x-space, and what is
    // left has a continuous density whose transform decays like 1/r².
    let mut atoms = Vec::new();
    // Values on the grid and exact masses per cell.
    let mut direct: Option<(Vec<f64>, Vec<f64>)> = None;
    let cf: Box<dyn Fn(f64) -> Result<Complex64> + Sync> = if finite_jumps {
        let drift0 = t.decompensated_drift();
        let cont = LevyMeasure {
            atoms: Vec::new(),
            densities: t.nu.densities.clone(),
        };
        let lambda_c = cont.total_mass();
        let weight = (-lambda_c).exp();
        let discrete = compound_poisson_atoms(drift0, &t.nu.atoms)?;
        atoms = discrete
            .iter()
            .map(|&(x, m)| (x, m * weight))
            .filter(|a| a.1 > 1e-15)
            .collect();
        let single_jump = |f: &dyn Fn(&DensityComponent, f64) -> f64| -> f64 {
            weight
                * discrete
                    .iter()
                    .map(|&(c, m)| m * cont.densities.iter().map(|d| f(d, c)).sum::<f64>())
                    .sum::<f64>()
        };
        let values = xs.iter().map(|&x| single_jump(&|d, c| d.density(x - c))).collect();
        let cells = xs
            .windows(2)
            .map(|w| single_jump(&|d, c| d.mass_between(w[0] - c, w[1] - c)))
            .collect();
        direct = Some((values, cells));
        let jumps = t.nu.atoms.clone();
        let cont_m1 = cont.moment1_between(-1.0, 1.0);
        Box::new(move |r: f64| {
            let psi_d: Complex64 = jumps
                .iter()
                .map(|&(x, w)| (Complex64::new(0.0, r * x).exp() - 1.0) * w)
                .sum::<Complex64>()
                + Complex64::new(0.0, r * drift0);
            let fc = compensated_jump_exponent(&cont, r, &opts)?
                + Complex64::new(lambda_c, r * cont_m1);
            Ok((psi_d - lambda_c).exp() * exp_tail2(fc))
        })
    } else {
        Box::new(move |r: f64| Ok(classical_exponent_with(t, r, &opts)?.exp()))
    };

    let (_, radius) = super::support_hint(t)?;
    let period = 2.0 * (g.hi - g.lo) + 8.0 * radius.max(g.spacing());
    let dr = 2.0 * PI / period;
    let r_max = 50.0 * PI / g.spacing();
    let phis = sample_cf(&*cf, dr, r_max)?;

    let remainder: Vec<f64> = xs.par_iter().map(|&x| invert_at(&phis, dr, x)).collect();
    let mut table = match direct {
        Some((values, cells)) => {
            let rho = remainder.iter().zip(&values).map(|(r, d)| r + d).collect();
            let rem_cells: Vec<f64> = xs
                .windows(2)
                .zip(remainder.windows(2))
                .map(|(x, r)| 0.5 * (x[1] - x[0]) * (r[0] + r[1]))
                .collect();
            let mut table = DensityTable::assemble(xs, rho, atoms);
            table.set_cell_masses(rem_cells.iter().zip(cells).map(|(r, d)| r + d).enumerate());
            table
        }
        None => DensityTable::assemble(xs, remainder, atoms),
    };
    if phis.len() >= MAX_FREQUENCIES || (phis.len() as f64) * dr >= r_max {
        if phis.last().map_or(false, |p| p.norm() > 1e-6) {
            table.note = Some("characteristic function decays slowly; density is smoothed".into());
        }
    }
    Ok(table)
}

/// `e^w - 1 - w` without cancellation.
fn exp_tail2(w: Complex64) -> Complex64 {
    if w.norm() < 0.1 {
        let mut term = w * w * 0.5;
        let mut sum = term;
        for k in 3..12 {
            term = term * w / k as f64;
            sum += term;
        }
        sum
    } else {
        w.exp() - 1.0 - w
    }
}

/// `φ(k·dr)` for `k = 0, 1, …` until `|φ|` stays below the floor.
fn sample_cf(cf: &(dyn Fn(f64) -> Result<Complex64> + Sync), dr: f64, r_max: f64) -> Result<Vec<Complex64>> {
    let limit = ((r_max / dr).ceil() as usize).clamp(2, MAX_FREQUENCIES);
    let mut out: Vec<Complex64> = Vec::new();
    while out.len() < limit {
        let start = out.len();
        let end = (start + CHUNK).min(limit);
        let chunk: Result<Vec<Complex64>> = (start..end).into_par_iter().map(|k| cf(k as f64 * dr)).collect();
        let chunk = chunk?;
        let tail_small = chunk.iter().rev().take(64).all(|p| p.norm() < CF_FLOOR);
        out.extend(chunk);
        if tail_small {
            while out.len() > 2 && out[out.len() - 1].norm() < CF_FLOOR {
                out.pop();
            }
            break;
        }
    }
    Ok(out)
}

/// Trapezoid rule for `(1/π)∫_0^∞ Re(e^{-irx} φ(r)) dr`.
fn invert_at(phis: &[Complex64], dr: f64, x: f64) -> f64 {
    let step = Complex64::from_polar(1.0, -dr * x);
    let mut w = Complex64::new(1.0, 0.0);
    let mut acc = 0.5 * phis[0].re;
    for (k, p) in phis.iter().enumerate().skip(1) {
        if k % 512 == 0 {
            w = Complex64::from_polar(1.0, -dr * x * k as f64);
        } else {
            w *= step;
        }
        acc += (w * p).re;
    }
    acc * dr / PI
}

/// Law of `drift + Σ_{i≤N} Y_i` with `N ~ Poisson(Σw)` and `Y` drawn from the
/// normalized atoms, as merged `(location, mass)` pairs.
pub(crate) fn compound_poisson_atoms(drift: f64, jumps: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let lambda: f64 = jumps.iter().map(|j| j.1).sum();
    if lambda == 0.0 {
        return Ok(vec![(drift, 1.0)]);
    }
    let q: Vec<(f64, f64)> = jumps.iter().map(|&(x, w)| (x, w / lambda)).collect();
    let mut acc: Vec<(f64, f64)> = Vec::new();
    let mut conv = vec![(0.0, 1.0)];
    let mut k = 0usize;
    let mut covered = 0.0;
    loop {
        let pk = (-lambda + k as f64 * lambda.ln() - ln_gamma(k as f64 + 1.0)).exp();
        covered += pk;
        if pk > 0.0 {
            acc.extend(conv.iter().map(|&(x, m)| (drift + x, m * pk)));
        }
        if k as f64 > lambda && (1.0 - covered < 1e-15 || pk < 1e-18) {
            break;
        }
        let mut next = Vec::with_capacity(conv.len() * q.len());
        for &(x, m) in &conv {
            for &(y, w) in &q {
                next.push((x + y, m * w));
            }
        }
        conv = merge(next, 1e-18);
        acc = merge(acc, 0.0);
        if acc.len() > MAX_SUPPORT || conv.len() > MAX_SUPPORT {
            return Err(Error::Divergent(
                "compound Poisson support too large to enumerate".into(),
            ));
        }
        k += 1;
    }
    Ok(merge(acc, 1e-16))
}

fn merge(mut pts: Vec<(f64, f64)>, floor: f64) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (x, m) in pts {
        match out.last_mut() {
            Some(last) if (x - last.0).abs() <= 1e-10 * x.abs().max(1.0) => last.1 += m,
            _ => out.push((x, m)),
        }
    }
    out.retain(|p| p.1 > floor);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::DensityComponent;
    use approx::assert_abs_diff_eq;

    #[test]
    fn standard_normal() {
        let t = CharTriplet::classical(1.0, 0.0, LevyMeasure::empty());
        let g = GridSpec::new(-6.0, 6.0, 241).unwrap();
        let table = classical_density(&t, &g).unwrap();
        for (x, r) in table.xs.iter().zip(&table.rho) {
            let exact = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
            assert_abs_diff_eq!(*r, exact, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(table.density_at(0.0), 0.398_942_280_401_432_7, epsilon = 1e-9);
    }

    #[test]
    fn poisson_lattice() {
        let t = CharTriplet::poisson(Kind::Classical, 1.0);
        let g = GridSpec::new(-1.0, 10.0, 12).unwrap();
        let table = classical_density(&t, &g).unwrap();
        assert!(table.note.is_some());
        let mut fact = 1.0;
        for (k, &(x, m)) in table.atoms.iter().enumerate().take(10) {
            if k > 0 {
                fact *= k as f64;
            }
            assert_abs_diff_eq!(x, k as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(m, (-1.0f64).exp() / fact, epsilon = 1e-14);
        }
        assert!(table.mass_deficit < 1e-12);
    }

    #[test]
    fn zero_triplet_is_point_mass() {
        let t = CharTriplet::zero(Kind::Classical);
        let table = classical_density(&t, &GridSpec::new(-1.0, 1.0, 5).unwrap()).unwrap();
        assert_eq!(table.atoms, vec![(0.0, 1.0)]);
    }

    #[test]
    fn gaussian_plus_poisson_is_mixture() {
        let t = CharTriplet::classical(0.25, 2.0, LevyMeasure::atom(1.0, 2.0));
        let g = GridSpec::new(-3.0, 10.0, 261).unwrap();
        let table = classical_density(&t, &g).unwrap();
        let sd = 0.5f64;
        let exact = |x: f64| {
            let mut s = 0.0;
            let mut pk = (-2.0f64).exp();
            for k in 0..40 {
                if k > 0 {
                    pk *= 2.0 / k as f64;
                }
                let z = (x - k as f64) / sd;
                s += pk * (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt());
            }
            s
        };
        for (x, r) in table.xs.iter().zip(&table.rho) {
            assert_abs_diff_eq!(*r, exact(*x), epsilon = 1e-8);
        }
    }

    #[test]
    fn exponential_jumps_split_atom() {
        let nu = LevyMeasure::from_density(DensityComponent::Exponential {
            rate: 1.0,
            scale: 1.0,
            side: crate::levy::Side::Pos,
        });
        let t = CharTriplet::classical(0.0, nu.moment1_between(-1.0, 1.0), nu);
        let g = GridSpec::new(-2.0, 30.0, 641).unwrap();
        let table = classical_density(&t, &g).unwrap();
        assert_eq!(table.atoms.len(), 1);
        assert_abs_diff_eq!(table.atoms[0].0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table.atoms[0].1, (-1.0f64).exp(), epsilon = 1e-12);
        assert!((table.total_mass() - 1.0).abs() < 5e-3, "{}", table.total_mass());
    }
}
