#![allow(dead_code)]

use fcrm::fcrm::{BaseMeasure, FcrmModel, FixedAtom, RegionSet};
use fcrm::levy::{CharTriplet, DensityComponent, Kind, LevyMeasure, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HORIZON: f64 = 5.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// A positive jump measure from one of the supported families.
pub fn random_jump_measure(rng: &mut ChaCha8Rng, allow_power: bool) -> LevyMeasure {
    let families = if allow_power { 5 } else { 4 };
    match rng.random_range(0..families) {
        0 => {
            let k = rng.random_range(1..=3);
            let mut nu = LevyMeasure::empty();
            for _ in 0..k {
                let x = round3(rng.random_range(0.2..3.0));
                nu = nu.add(&LevyMeasure::atom(x, round3(rng.random_range(0.2..1.5))));
            }
            nu
        }
        1 => LevyMeasure::from_density(DensityComponent::Exponential {
            rate: round3(rng.random_range(0.8..3.0)),
            scale: round3(rng.random_range(0.3..2.0)),
            side: Side::Pos,
        }),
        2 => {
            let lo = round3(rng.random_range(0.1..1.0));
            LevyMeasure::from_density(DensityComponent::Uniform {
                lo,
                hi: lo + round3(rng.random_range(0.2..2.0)),
                height: round3(rng.random_range(0.3..1.5)),
            })
        }
        3 => LevyMeasure::atom(round3(rng.random_range(0.5..2.0)), round3(rng.random_range(0.3..1.0))).add(
            &LevyMeasure::from_density(DensityComponent::Exponential {
                rate: round3(rng.random_range(1.0..3.0)),
                scale: round3(rng.random_range(0.5..2.0)),
                side: Side::Pos,
            }),
        ),
        _ => LevyMeasure::from_density(DensityComponent::Power {
            p: round3(rng.random_range(0.5..0.8)),
            c: round3(rng.random_range(0.5..1.0)),
            cutoff: round3(rng.random_range(1.0..4.0)),
            side: Side::Pos,
        }),
    }
}

/// A base measure on `[0, HORIZON]`: Lebesgue with random height plus maybe an atom.
pub fn random_base(rng: &mut ChaCha8Rng, min_height: f64) -> BaseMeasure {
    let mut m = BaseMeasure::uniform(0.0, HORIZON, round3(rng.random_range(min_height..1.0)));
    if rng.random_bool(0.5) {
        m = m.with_atom(round3(rng.random_range(0.0..HORIZON)), round3(rng.random_range(0.1..1.0)));
    }
    m
}

/// A free-regular triplet: drift at least the compensator, positive jumps.
pub fn random_free_regular(rng: &mut ChaCha8Rng) -> CharTriplet {
    let nu = random_jump_measure(rng, false).scaled(round3(rng.random_range(0.3..1.0)));
    let eta = nu.compensator() + round3(rng.random_range(0.0..1.0));
    CharTriplet::new(Kind::Free, 0.0, eta, nu)
}

pub fn random_model(rng: &mut ChaCha8Rng, fixed_atoms: bool, allow_power: bool) -> FcrmModel {
    let mut m = FcrmModel {
        alpha: random_base(rng, 0.0),
        nu_e: random_base(rng, 0.3),
        nu_b: random_jump_measure(rng, allow_power),
        fixed_atoms: Vec::new(),
    };
    if fixed_atoms {
        for _ in 0..rng.random_range(1..=2) {
            let location = round3(rng.random_range(0.0..HORIZON));
            if m.fixed_atoms.iter().all(|a| a.location != location) {
                m.fixed_atoms.push(FixedAtom { location, triplet: random_free_regular(rng) });
            }
        }
    }
    m.validate().expect("generated model is valid");
    m
}

/// Sorted cut points splitting `[lo, hi)` into `k` pieces.
pub fn random_cuts(rng: &mut ChaCha8Rng, lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.random_range(lo..hi)).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

pub fn random_partition(rng: &mut ChaCha8Rng, lo: f64, hi: f64, k: usize) -> Vec<RegionSet> {
    random_cuts(rng, lo, hi, k)
        .windows(2)
        .map(|w| RegionSet::interval(w[0], w[1]).unwrap())
        .collect()
}

/// One or two intervals inside `[0, HORIZON)`.
pub fn random_region(rng: &mut ChaCha8Rng) -> RegionSet {
    let cuts = random_cuts(rng, 0.0, HORIZON, 5);
    let pieces: Vec<(f64, f64)> = cuts
        .windows(2)
        .filter(|_| rng.random_bool(0.5))
        .map(|w| (w[0], w[1]))
        .collect();
    if pieces.is_empty() {
        RegionSet::interval(cuts[0], cuts[1]).unwrap()
    } else {
        RegionSet::from_intervals(pieces).unwrap()
    }
}
