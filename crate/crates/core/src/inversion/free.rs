use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{richardson, DensityTable, GridSpec};
use crate::error::{Error, Result};
use crate::levy::{CharTriplet, Kind};
use crate::quad::QuadOptions;
use crate::transforms::free_cumulant_with;

const MAX_ITERATIONS: usize = 500;
const PICARD_ITERATIONS: usize = 60;
/// `ε·(-Im G)` above this marks an atom.
const ATOM_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solves `u + φ(u) = ζ` for `u = F(ζ)` in the upper half-plane, so that
/// `G(ζ) = 1/u`.
pub fn solve_f(t: &CharTriplet, zeta: Complex64) -> Result<(Complex64, SolveDiagnostics)> {
    if t.kind != Kind::Free {
        return Err(Error::MixedKinds("solve_f needs a free triplet".into()));
    }
    if !(zeta.im > 0.0) {
        return Err(Error::Domain(format!("solve_f requires Im ζ > 0, got {zeta}")));
    }
    t.validate()?;
    Solver::new(t).solve(zeta)
}

pub(crate) struct Solver<'a> {
    t: &'a CharTriplet,
    opts: QuadOptions,
}

impl<'a> Solver<'a> {
    pub(crate) fn new(t: &'a CharTriplet) -> Self {
        Solver {
            t,
            opts: QuadOptions::with_tol(1e-12),
        }
    }

    /// Voiculescu transform `φ(u) = u·C(1/u)`.
    fn phi(&self, u: Complex64) -> Result<Complex64> {
        Ok(u * free_cumulant_with(self.t, u.inv(), &self.opts)?)
    }

    /// `d/du (u + φ(u))` by a central difference along the real axis.
    fn derivative(&self, u: Complex64) -> Result<Complex64> {
        let h = 1e-4 * u.im.min(u.norm()).max(1e-300);
        let d = (self.phi(u + h)? - self.phi(u - h)?) / (2.0 * h);
        Ok(d + 1.0)
    }

    pub(crate) fn solve(&self, zeta: Complex64) -> Result<(Complex64, SolveDiagnostics)> {
        let tol = 1e-10 * zeta.norm().max(1.0);
        let mut iterations = 0usize;

        let (u, res) = self.picard(zeta, zeta, tol, PICARD_ITERATIONS, &mut iterations)?;
        if res <= tol {
            return Ok(done(u, res, iterations));
        }
        let (u, res) = self.newton(zeta, u, tol, 40, &mut iterations)?;
        if res <= tol {
            return Ok(done(u, res, iterations));
        }
        self.continuation(zeta, tol, &mut iterations)
    }

    /// Damped Picard iteration `u ← ζ - φ(u)`; returns the best iterate and its residual.
    fn picard(
        &self,
        zeta: Complex64,
        start: Complex64,
        tol: f64,
        max_steps: usize,
        iterations: &mut usize,
    ) -> Result<(Complex64, f64)> {
        let mut u = start;
        let mut best = (u, f64::INFINITY);
        let mut prev = f64::INFINITY;
        let mut damped = false;
        let mut slow = 0;
        for _ in 0..max_steps {
            let g = zeta - self.phi(u)?;
            *iterations += 1;
            let res = (u - g).norm();
            if res < best.1 {
                best = (u, res);
            }
            if res <= tol {
                break;
            }
            if res > prev {
                damped = true;
            }
            slow = if res > 0.5 * prev { slow + 1 } else { 0 };
            prev = res;
            u = if damped { (u + g) * 0.5 } else { g };
            debug_assert!(u.im >= zeta.im * (1.0 - 1e-9), "iterate left the half-plane");
            if slow >= 3 {
                break;
            }
        }
        Ok(best)
    }

    /// Newton on `h(u) = u + φ(u) - ζ` with backtracking that keeps `Im u ≥ Im ζ`.
    fn newton(
        &self,
        zeta: Complex64,
        start: Complex64,
        tol: f64,
        max_steps: usize,
        iterations: &mut usize,
    ) -> Result<(Complex64, f64)> {
        let mut u = start;
        let mut h = u + self.phi(u)? - zeta;
        for _ in 0..max_steps {
            if h.norm() <= tol || *iterations >= MAX_ITERATIONS {
                break;
            }
            *iterations += 1;
            let step = -h / self.derivative(u)?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = u + step * lambda;
                if cand.im >= zeta.im {
                    let hc = cand + self.phi(cand)? - zeta;
                    if hc.norm() < h.norm() * (1.0 - 1e-4 * lambda) {
                        u = cand;
                        h = hc;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok((u, h.norm()))
    }

    /// Tracks the solution from far above the axis down to `ζ`.
    fn continuation(
        &self,
        zeta: Complex64,
        tol: f64,
        iterations: &mut usize,
    ) -> Result<(Complex64, SolveDiagnostics)> {
        let top = (10.0 * (1.0 + zeta.norm())).max(10.0 * zeta.im);
        let steps = (top / zeta.im).log2().ceil().max(1.0) as usize;
        let mut u = Complex64::new(zeta.re, top);
        let mut res = f64::INFINITY;
        for k in 0..=steps {
            let y = top * (zeta.im / top).powf(k as f64 / steps as f64);
            let z = Complex64::new(zeta.re, if k == steps { zeta.im } else { y });
            let level_tol = if k == steps { tol } else { 1e-8 * z.norm().max(1.0) };
            let (mut cand, mut r) = self.newton(z, u, level_tol, 30, iterations)?;
            if r > level_tol {
                let (p, pr) = self.picard(z, cand, level_tol, 40, iterations)?;
                let (n, nr) = self.newton(z, p, level_tol, 30, iterations)?;
                if nr < r.min(pr) {
                    (cand, r) = (n, nr);
                } else if pr < r {
                    (cand, r) = (p, pr);
                }
            }
            u = cand;
            res = r;
            if *iterations >= MAX_ITERATIONS {
                break;
            }
        }
        if res <= tol {
            Ok(done(u, res, *iterations))
        } else {
            Err(Error::NoConvergence {
                iterations: *iterations,
                residual: res,
            })
        }
    }

    /// `G(ζ) = 1/F(ζ)`.
    pub(crate) fn cauchy(&self, zeta: Complex64) -> Result<Complex64> {
        Ok(self.solve(zeta)?.0.inv())
    }
}

fn done(u: Complex64, residual: f64, iterations: usize) -> (Complex64, SolveDiagnostics) {
    (
        u,
        SolveDiagnostics {
            iterations,
            residual,
            converged: true,
        },
    )
}

/// Density of the free law with triplet `t` on the grid, by Stieltjes inversion.
pub fn free_density(t: &CharTriplet, grid: &GridSpec) -> Result<DensityTable> {
    if t.kind != Kind::Free {
        return Err(Error::MixedKinds("free_density needs a free triplet".into()));
    }
    t.validate()?;
    grid.validate()?;
    let xs = grid.nodes();
    if t.is_degenerate() {
        let mut table = DensityTable::assemble(xs.clone(), vec![0.0; xs.len()], vec![(t.eta, 1.0)]);
        table.note = Some("point mass".into());
        return Ok(table);
    }
    let solver = Solver::new(t);
    let levels: Vec<f64> = (0..grid.eps_levels)
        .map(|k| grid.eps * 2f64.powi(k as i32))
        .collect();

    let samples: Vec<Option<Vec<Complex64>>> = xs
        .par_iter()
        .map(|&x| {
            levels
                .iter()
                .map(|&e| solver.cauchy(Complex64::new(x, e)).ok())
                .collect()
        })
        .collect();
    let missing = samples.iter().filter(|s| s.is_none()).count();
    if missing * 100 > xs.len() {
        return Err(Error::TooManyMissing {
            missing,
            total: xs.len(),
        });
    }

    let atoms = detect_atoms(&solver, t, grid, &xs, &levels);

    let mut rho: Vec<Option<f64>> = samples
        .iter()
        .zip(&xs)
        .map(|(s, &x)| s.as_ref().map(|gs| extrapolate(x, gs, &levels, &atoms)))
        .collect();

    let mut missing_xs = Vec::new();
    for k in 0..rho.len() {
        if rho[k].is_none() {
            missing_xs.push(xs[k]);
            let left = (0..k).rev().find_map(|j| rho[j].map(|v| (j, v)));
            let right = (k + 1..rho.len()).find_map(|j| rho[j].map(|v| (j, v)));
            rho[k] = Some(match (left, right) {
                (Some((j0, v0)), Some((j1, v1))) => {
                    v0 + (v1 - v0) * (xs[k] - xs[j0]) / (xs[j1] - xs[j0])
                }
                (Some((_, v)), None) | (None, Some((_, v))) => v,
                (None, None) => 0.0,
            });
        }
    }
    let rho = rho.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut table = DensityTable::assemble(xs, rho, atoms);
    table.missing = missing_xs;
    refine_cells(&solver, &mut table, &levels);
    Ok(table)
}

/// Richardson-extrapolated density from `G` at `x + iε` for each level, with
/// the Poisson kernels of known atoms removed first.
fn extrapolate(x: f64, gs: &[Complex64], levels: &[f64], atoms: &[(f64, f64)]) -> f64 {
    let vals: Vec<f64> = gs
        .iter()
        .zip(levels)
        .map(|(g, &e)| {
            let smeared: f64 = atoms
                .iter()
                .map(|&(c, m)| m * e / ((x - c).powi(2) + e * e))
                .sum();
            (-g.im - smeared) / PI
        })
        .collect();
    richardson(&vals)
}

const ATOM_CELLS: f64 = 3.0;
const SUBDIVISIONS: usize = 32;
const CURVATURE_TOL: f64 = 1e-7;
const CELL_TOL: f64 = 1e-8;
const MAX_DEPTH: u32 = 12;

/// Re-integrates cells the trapezoid rule handles badly.
///
/// Next to an atom the density can rise to a peak narrower than the grid
/// spacing, so cells within a few spacings of an atom use a mesh graded
/// towards it. Elsewhere, cells whose second difference signals a sharp
/// feature (edges, near-critical peaks) are bisected adaptively.
fn refine_cells(solver: &Solver<'_>, table: &mut DensityTable, levels: &[f64]) {
    let n = table.xs.len();
    if n < 3 {
        return;
    }
    let h = table.xs[1] - table.xs[0];
    let atoms = table.atoms.clone();
    let density = |x: f64| -> Option<f64> {
        let gs: Option<Vec<Complex64>> = levels
            .iter()
            .map(|&e| solver.cauchy(Complex64::new(x, e)).ok())
            .collect();
        gs.map(|gs| extrapolate(x, &gs, levels, &atoms).max(0.0))
    };
    let rho = &table.rho;
    let bend = |j: usize| -> f64 {
        if j == 0 || j + 1 >= n {
            0.0
        } else {
            (rho[j - 1] - 2.0 * rho[j] + rho[j + 1]).abs() * h / 12.0
        }
    };
    let mut work: Vec<(usize, Cell)> = Vec::new();
    for k in 0..n - 1 {
        let (a, b) = (table.xs[k], table.xs[k + 1]);
        let near = atoms
            .iter()
            .filter(|(c, _)| *c > a - ATOM_CELLS * h && *c < b + ATOM_CELLS * h)
            .min_by(|p, q| (p.0 - 0.5 * (a + b)).abs().total_cmp(&(q.0 - 0.5 * (a + b)).abs()));
        if let Some(&(c, _)) = near {
            let pieces = if c <= a {
                vec![(a, b)]
            } else if c >= b {
                vec![(b, a)]
            } else {
                vec![(c, a), (c, b)]
            };
            work.push((k, Cell::Graded(pieces)));
        } else if bend(k).max(bend(k + 1)) > CURVATURE_TOL {
            work.push((k, Cell::Adaptive(rho[k], rho[k + 1])));
        }
    }
    let masses: Vec<(usize, Option<f64>)> = work
        .par_iter()
        .map(|(k, cell)| {
            let (a, b) = (table.xs[*k], table.xs[*k + 1]);
            let mass = match cell {
                Cell::Graded(pieces) => pieces.iter().try_fold(0.0, |acc, &(near, far)| {
                    let nodes: Vec<f64> = (0..=SUBDIVISIONS)
                        .map(|j| near + (far - near) * (j as f64 / SUBDIVISIONS as f64).powi(2))
                        .collect();
                    let vals = nodes.iter().map(|&x| density(x)).collect::<Option<Vec<f64>>>()?;
                    Some(
                        acc + nodes
                            .windows(2)
                            .zip(vals.windows(2))
                            .map(|(x, v)| 0.5 * (x[1] - x[0]).abs() * (v[0] + v[1]))
                            .sum::<f64>(),
                    )
                }),
                Cell::Adaptive(fa, fb) => bisect(&density, a, b, *fa, *fb, CELL_TOL, MAX_DEPTH),
            };
            (*k, mass)
        })
        .collect();
    table.set_cell_masses(masses.into_iter().filter_map(|(k, m)| m.map(|m| (k, m))));
}

enum Cell {
    /// `(near, far)` pieces graded towards `near`.
    Graded(Vec<(f64, f64)>),
    /// Endpoint values for adaptive bisection.
    Adaptive(f64, f64),
}

fn bisect(f: &impl Fn(f64) -> Option<f64>, a: f64, b: f64, fa: f64, fb: f64, tol: f64, depth: u32) -> Option<f64> {
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let coarse = 0.5 * (b - a) * (fa + fb);
    let fine = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
    if depth == 0 || (fine - coarse).abs() <= 3.0 * tol {
        return Some(fine + (fine - coarse) / 3.0);
    }
    Some(bisect(f, a, m, fa, fm, 0.5 * tol, depth - 1)? + bisect(f, m, b, fm, fb, 0.5 * tol, depth - 1)?)
}

/// Finds atoms as points where `ε·(-Im G(x + iε))` stays bounded away from zero.
///
/// The atom of a finite-activity law at its decompensated drift is known in
/// closed form. Other candidates are local maxima of a coarse scan at `ε`
/// equal to the grid spacing; each is moved to the pole of `G` with the
/// Newton-like update `c ← Re(ζ + G/G')` before its mass is extrapolated.
fn detect_atoms(
    solver: &Solver<'_>,
    t: &CharTriplet,
    grid: &GridSpec,
    xs: &[f64],
    levels: &[f64],
) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    // With a = 0 and finite ν, φ(u) = η₀ - ν(ℝ)·u + o(u) as u → 0, so the
    // only possible atom there sits at η₀ with mass exactly 1 - ν(ℝ).
    if t.a == 0.0 && t.nu.total_mass().is_finite() {
        let d = t.decompensated_drift();
        let m = 1.0 - t.nu.total_mass();
        if d.is_finite() && m > 1e-12 {
            atoms.push((d, m));
        }
    }
    let mut candidates = Vec::new();
    let probe_eps = grid.spacing().max(grid.eps);
    let scan: Vec<f64> = xs
        .par_iter()
        .map(|&x| {
            solver
                .cauchy(Complex64::new(x, probe_eps))
                .map(|g| -probe_eps * g.im)
                .unwrap_or(0.0)
        })
        .collect();
    for k in 0..scan.len() {
        let left = if k > 0 { scan[k - 1] } else { 0.0 };
        let right = scan.get(k + 1).copied().unwrap_or(0.0);
        if scan[k] > 0.8 * ATOM_THRESHOLD && scan[k] >= left && scan[k] > right {
            candidates.push(xs[k]);
        }
    }

    for c0 in candidates {
        let Some(c) = refine_pole(solver, c0, probe_eps, grid.eps) else {
            continue;
        };
        if atoms.iter().any(|a| (a.0 - c).abs() <= grid.spacing().max(1e-9)) {
            continue;
        }
        let masses: Option<Vec<f64>> = levels
            .iter()
            .map(|&e| solver.cauchy(Complex64::new(c, e)).ok().map(|g| -e * g.im))
            .collect();
        if let Some(ms) = masses {
            let m = richardson(&ms);
            if m > ATOM_THRESHOLD {
                atoms.push((c, m.min(1.0)));
            }
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

fn refine_pole(solver: &Solver<'_>, start: f64, coarse: f64, fine: f64) -> Option<f64> {
    let mut c = start;
    for &e in [coarse; 4].iter().chain([fine; 4].iter()) {
        let zeta = Complex64::new(c, e);
        let (u, _) = solver.solve(zeta).ok()?;
        let dh = solver.derivative(u).ok()?;
        // G/G' = -u h'(u)
        let next = (zeta - u * dh).re;
        if !next.is_finite() {
            return None;
        }
        let moved = (next - c).abs();
        c = next;
        if moved < 1e-14 * c.abs().max(1.0) {
            break;
        }
    }
    Some(c)
}
