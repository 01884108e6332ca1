//! The Bercovici–Pata bijection Λ between classical and free infinitely
//! divisible laws.
//!
//! Λ sends the law with classical triplet `(a, η, ν)` to the law with free
//! triplet `(a, η, ν)`, so on triplets it only retags the kind. What carries
//! content is that the free law so obtained behaves correctly: it is a
//! homomorphism from `∗` to `⊞`, and [`check_homomorphism`] tests that against
//! Monte Carlo on both sides.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inversion::{classical_density, free_density, ks_between, GridSpec};
use crate::levy::{triplet_add, CharTriplet, Kind};
use crate::oracle::{classical_draws, free_add_oracle, EmpiricalSpectrum, MatrixModelSpec, DEFAULT_TRUNCATION};

/// Λ: classical triplet to free triplet.
pub fn bp_map(t: &CharTriplet) -> Result<CharTriplet> {
    if t.kind != Kind::Classical {
        return Err(Error::MixedKinds("Λ maps classical triplets".into()));
    }
    t.validate()?;
    Ok(t.with_kind(Kind::Free))
}

/// Λ⁻¹: free triplet to classical triplet.
pub fn bp_unmap(t: &CharTriplet) -> Result<CharTriplet> {
    if t.kind != Kind::Free {
        return Err(Error::MixedKinds("Λ⁻¹ maps free triplets".into()));
    }
    t.validate()?;
    Ok(t.with_kind(Kind::Classical))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomomorphismReport {
    /// `Λ(t₁ + t₂) = Λ(t₁) + Λ(t₂)` after normalization.
    pub triplet_exact: bool,
    /// KS distance between the free density of the sum and the spectrum of
    /// the rotated matrix sum.
    pub free_density_ks: f64,
    /// KS distance between the classical density of the sum and Monte Carlo
    /// sums of independent draws.
    pub classical_density_ks: f64,
    pub details: Vec<String>,
}

/// Classical replicates used for `oracle_n` matrix size.
pub fn classical_reps(oracle_n: usize) -> usize {
    (10 * oracle_n).max(10_000)
}

/// Checks `Λ(μ₁ ∗ μ₂) = Λ(μ₁) ⊞ Λ(μ₂)` on triplets and on both densities.
pub fn check_homomorphism(
    t1: &CharTriplet,
    t2: &CharTriplet,
    grid: &GridSpec,
    oracle_n: usize,
    seed: u64,
) -> Result<HomomorphismReport> {
    let (f1, f2) = (bp_map(t1)?, bp_map(t2)?);
    let classical_sum = triplet_add(t1, t2)?;
    let free_sum = triplet_add(&f1, &f2)?;
    let mapped = bp_map(&classical_sum)?;
    let triplet_exact = mapped.normalized() == free_sum.normalized();

    let specs = [
        MatrixModelSpec::from_free_triplet(&f1, DEFAULT_TRUNCATION)?,
        MatrixModelSpec::from_free_triplet(&f2, DEFAULT_TRUNCATION)?,
    ];
    let spectrum = free_add_oracle(&specs, oracle_n, seed)?;
    let free_table = free_density(&free_sum, grid)?;
    let free_density_ks = ks_between(&free_table, &spectrum);

    let reps = classical_reps(oracle_n);
    let truncation = Some(DEFAULT_TRUNCATION);
    let d1 = classical_draws(t1, reps, seed, truncation)?;
    let d2 = classical_draws(t2, reps, seed.wrapping_add(1), truncation)?;
    let sums = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
    let sum_spectrum = EmpiricalSpectrum::new(sums, seed, "classical_sum");
    let classical_table = classical_density(&classical_sum, grid)?;
    let classical_density_ks = ks_between(&classical_table, &sum_spectrum);

    let details = vec![
        format!("free sum triplet: a={}, eta={}", free_sum.a, free_sum.eta),
        format!("matrix size {oracle_n}, classical replicates {reps}, seed {seed}"),
        format!("free mass deficit {:.3e}", free_table.mass_deficit),
        format!("classical mass deficit {:.3e}", classical_table.mass_deficit),
    ];
    Ok(HomomorphismReport {
        triplet_exact,
        free_density_ks,
        classical_density_ks,
        details,
    })
}
