//! Recovering distributions from characteristic triplets.
//!
//! The free side inverts the relation between the free cumulant transform and
//! the reciprocal Cauchy transform: for `Im ζ > 0`, `u = F(ζ)` is the unique
//! solution in the upper half-plane of `u + φ(u) = ζ`, where
//! `φ(u) = u·C(1/u)` is the Voiculescu transform. The density then follows
//! from Stieltjes inversion, `ρ(x) = -Im G(x + iε)/π` as `ε → 0`, with
//! Richardson extrapolation in `ε`.
//!
//! The classical side inverts the characteristic function `exp ψ(r)`
//! numerically, with discrete laws (compound Poisson with atomic jumps)
//! enumerated exactly instead.

mod classical;
mod free;
mod ks;

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

pub use classical::classical_density;
pub use free::{free_density, solve_f, SolveDiagnostics};
pub use ks::ks_between;

use crate::error::{Error, Result};
use crate::levy::{CharTriplet, IntegrandShape, Kind};
use crate::quad::QuadOptions;

/// Evaluation grid plus Stieltjes-inversion settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Smallest Stieltjes offset `ε`.
    pub eps: f64,
    /// Number of offsets `ε, 2ε, 4ε, …` combined by Richardson extrapolation.
    pub eps_levels: usize,
}

pub const DEFAULT_EPS: f64 = 1e-3;

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let g = GridSpec {
            lo,
            hi,
            n,
            eps: DEFAULT_EPS,
            eps_levels: 2,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps_levels(mut self, levels: usize) -> Result<Self> {
        self.eps_levels = levels;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Invalid(format!("grid needs lo < hi, got {}:{}", self.lo, self.hi)));
        }
        if self.n < 2 {
            return Err(Error::Invalid(format!("grid needs n >= 2, got {}", self.n)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if self.eps_levels < 1 {
            return Err(Error::Invalid("eps_levels must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses `lo:hi:n`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid must look like lo:hi:n, got {s:?}")));
        }
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad grid bound {p:?}")))
        };
        let n = parts[2]
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad grid size {:?}", parts[2])))?;
        GridSpec::new(num(parts[0])?, num(parts[1])?, n)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|k| if k + 1 == self.n { self.hi } else { self.lo + h * k as f64 })
            .collect()
    }

    /// Grid covering the bulk of the law of `t`, padded by 20%.
    pub fn around(t: &CharTriplet, n: usize) -> Result<Self> {
        let (center, radius) = support_hint(t)?;
        let half = 1.2 * radius.max(0.5);
        GridSpec::new(center - half, center + half, n)
    }
}

/// Rough location and half-width of the bulk of the law.
///
/// `q` is the smallest radius with `ν(|x| > q) ≤ 10⁻³`; jumps beyond it are rare.
/// The Gaussian part and the jumps below `q` set the spread.
pub fn support_hint(t: &CharTriplet) -> Result<(f64, f64)> {
    let nu = &t.nu;
    let q = if nu.tail_mass(1e-300) <= 1e-3 {
        0.0
    } else {
        let (mut lo, mut hi) = (-300.0_f64, 30.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if nu.tail_mass(10f64.powf(mid) * (1.0 + 1e-12)) <= 1e-3 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        10f64.powf(hi) * (1.0 + 1e-12)
    };
    let second = if q > 0.0 {
        nu.integrate(
            &|x: f64| Complex64::new(x * x, 0.0),
            IntegrandShape { zero_order: 2.0, freq: 0.0 },
            (-q, q),
            &QuadOptions::default(),
        )?
        .re
    } else {
        0.0
    };
    let drift0 = t.decompensated_drift();
    let center = if drift0.is_finite() && q > 0.0 {
        drift0 + nu.moment1_between(-q, q)
    } else if drift0.is_finite() {
        drift0
    } else {
        t.eta
    };
    let spread = (t.a + second).sqrt();
    let radius = match t.kind {
        Kind::Free => 2.0 * spread + q,
        Kind::Classical => 7.0 * spread + q,
    };
    Ok((center, radius))
}

/// A density on a grid plus detected atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityTable {
    pub xs: Vec<f64>,
    pub rho: Vec<f64>,
    /// `1 - ∫ρ - Σ atom masses`, clamped to `[0, 1]`.
    pub mass_deficit: f64,
    /// Detected atoms as `(location, mass)`.
    pub atoms: Vec<(f64, f64)>,
    /// Grid points where the solver failed (their density was interpolated).
    pub missing: Vec<f64>,
    /// Explanation when the table is not a plain density (e.g. a lattice law).
    pub note: Option<String>,
    /// Mass of each grid cell: trapezoid, except where a cell was integrated
    /// on a finer mesh (sharp peaks, edges, cells next to atoms).
    #[serde(skip)]
    cell_mass: Vec<f64>,
}

impl DensityTable {
    pub(crate) fn assemble(xs: Vec<f64>, rho: Vec<f64>, atoms: Vec<(f64, f64)>) -> Self {
        let rho: Vec<f64> = rho.into_iter().map(|r| r.max(0.0)).collect();
        let cell_mass = xs
            .windows(2)
            .zip(rho.windows(2))
            .map(|(x, r)| 0.5 * (x[1] - x[0]) * (r[0] + r[1]))
            .collect();
        let mut table = DensityTable {
            xs,
            rho,
            mass_deficit: 0.0,
            atoms,
            missing: Vec::new(),
            note: None,
            cell_mass,
        };
        table.mass_deficit = (1.0 - table.total_mass()).clamp(0.0, 1.0);
        table
    }

    /// Replaces the masses of cells `[xs[k], xs[k+1]]` by more accurate values.
    pub(crate) fn set_cell_masses(&mut self, updates: impl IntoIterator<Item = (usize, f64)>) {
        for (k, m) in updates {
            self.cell_mass[k] = m.max(0.0);
        }
        self.mass_deficit = (1.0 - self.total_mass()).clamp(0.0, 1.0);
    }

    pub fn continuous_mass(&self) -> f64 {
        self.cell_mass.iter().sum()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `∫ρ + Σ atoms`.
    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atom_mass()
    }

    /// Linear interpolation of the density (zero off-grid).
    pub fn density_at(&self, x: f64) -> f64 {
        let xs = &self.xs;
        if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
            return 0.0;
        }
        let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
        let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
        self.rho[k - 1] * (1.0 - t) + self.rho[k] * t
    }

    /// Mass strictly below `x`: trapezoid-integrated density plus atoms `< x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.0 < x).map(|a| a.1).sum();
        atoms + self.integral_to(x)
    }

    /// `∫_{lo}^{x} ρ`: whole cells by their masses, the partial last cell by
    /// the trapezoid share of its mass.
    pub(crate) fn integral_to(&self, x: f64) -> f64 {
        let xs = &self.xs;
        if xs.is_empty() || x <= xs[0] {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in 1..xs.len() {
            if x >= xs[k] {
                acc += self.cell_mass[k - 1];
            } else {
                let part = 0.5 * (x - xs[k - 1]) * (self.rho[k - 1] + self.density_at(x));
                let whole = 0.5 * (xs[k] - xs[k - 1]) * (self.rho[k - 1] + self.rho[k]);
                let share = if whole > 0.0 { part / whole } else { (x - xs[k - 1]) / (xs[k] - xs[k - 1]) };
                acc += share * self.cell_mass[k - 1];
                break;
            }
        }
        acc
    }

    /// CSV with header `x,density`, 17 significant digits, atoms appended as
    /// `# atom,<location>,<mass>` comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,density\n");
        for (x, r) in self.xs.iter().zip(&self.rho) {
            let _ = writeln!(out, "{x:.16e},{r:.16e}");
        }
        for (x, m) in &self.atoms {
            let _ = writeln!(out, "# atom,{x:.16e},{m:.16e}");
        }
        out
    }
}

/// Richardson extrapolation to `ε → 0` from values at `ε, 2ε, 4ε, …`.
pub(crate) fn richardson(values: &[f64]) -> f64 {
    let mut row = values.to_vec();
    let mut factor = 1.0;
    while row.len() > 1 {
        factor *= 2.0;
        row = row
            .windows(2)
            .map(|w| (factor * w[0] - w[1]) / (factor - 1.0))
            .collect();
    }
    row[0]
}
