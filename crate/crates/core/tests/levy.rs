mod common;

use common::{random_jump_measure, rng};
use fcrm::levy::{
    triplet_add, triplet_shift, validate_levy, CharTriplet, DensityComponent, Kind, LevyMeasure, Side,
};
use proptest::prelude::*;
use rand::Rng;

fn random_triplet(seed: u64, kind: Kind) -> CharTriplet {
    let mut r = rng(seed);
    let nu = random_jump_measure(&mut r, true).scaled(r.random_range(0.2..2.0));
    CharTriplet::new(kind, r.random_range(0.0..2.0), r.random_range(-2.0..2.0), nu)
}

// ∫ min(x², 1) for each family, by hand.
fn uniform_min_x2(lo: f64, hi: f64, h: f64) -> f64 {
    let inner = |a: f64, b: f64| if a < b { (b.powi(3) - a.powi(3)) / 3.0 } else { 0.0 };
    h * (inner(lo.max(0.0), hi.min(1.0)) + (hi.max(1.0) - lo.max(1.0)))
}

fn exponential_min_x2(rate: f64, scale: f64) -> f64 {
    let r = rate;
    let inner = 2.0 / r.powi(3) - (-r).exp() * (1.0 / r + 2.0 / r.powi(2) + 2.0 / r.powi(3));
    scale * (inner + (-r).exp() / r)
}

fn power_min_x2(p: f64, c: f64, cutoff: f64) -> f64 {
    if cutoff <= 1.0 {
        c * cutoff.powf(2.0 - p) / (2.0 - p)
    } else {
        c / (2.0 - p) + c * (1.0 - cutoff.powf(-p)) / p
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn add_is_commutative(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (t1, t2) = (random_triplet(s1, Kind::Free), random_triplet(s2, Kind::Free));
        let a = triplet_add(&t1, &t2).unwrap();
        let b = triplet_add(&t2, &t1).unwrap();
        prop_assert!(a.approx_eq(&b, 1e-12), "{a:?} vs {b:?}");
    }

    #[test]
    fn add_is_associative(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let t: Vec<_> = [s1, s2, s3].iter().map(|&s| random_triplet(s, Kind::Classical)).collect();
        let left = triplet_add(&triplet_add(&t[0], &t[1]).unwrap(), &t[2]).unwrap();
        let right = triplet_add(&t[0], &triplet_add(&t[1], &t[2]).unwrap()).unwrap();
        prop_assert!(left.approx_eq(&right, 1e-12));
    }

    #[test]
    fn zero_is_neutral_and_shift_moves_drift(s in any::<u64>(), c in -5.0..5.0f64) {
        let t = random_triplet(s, Kind::Free);
        let z = triplet_add(&t, &CharTriplet::zero(Kind::Free)).unwrap();
        prop_assert!(z.approx_eq(&t, 0.0));
        let shifted = triplet_shift(&t, c);
        prop_assert_eq!(shifted.eta, t.eta + c);
        prop_assert_eq!(shifted.a, t.a);
    }

    #[test]
    fn min_x2_integral_is_additive(s1 in any::<u64>(), s2 in any::<u64>()) {
        let nu1 = random_jump_measure(&mut rng(s1), true);
        let nu2 = random_jump_measure(&mut rng(s2), true);
        let whole = validate_levy(&nu1.add(&nu2)).min_x2_integral;
        let parts = validate_levy(&nu1).min_x2_integral + validate_levy(&nu2).min_x2_integral;
        prop_assert!((whole - parts).abs() <= 1e-9, "{whole} vs {parts}");
    }

    #[test]
    fn uniform_closed_form(lo in 0.01..3.0f64, w in 0.01..3.0f64, h in 0.1..2.0f64) {
        let nu = LevyMeasure::from_density(DensityComponent::Uniform { lo, hi: lo + w, height: h });
        let got = validate_levy(&nu).min_x2_integral;
        prop_assert!((got - uniform_min_x2(lo, lo + w, h)).abs() <= 1e-8);
    }

    #[test]
    fn exponential_closed_form(rate in 0.2..5.0f64, scale in 0.1..3.0f64, neg in any::<bool>()) {
        let side = if neg { Side::Neg } else { Side::Pos };
        let nu = LevyMeasure::from_density(DensityComponent::Exponential { rate, scale, side });
        let got = validate_levy(&nu).min_x2_integral;
        prop_assert!((got - exponential_min_x2(rate, scale)).abs() <= 1e-8);
    }

    #[test]
    fn power_closed_form(p in 0.05..1.95f64, c in 0.1..2.0f64, cutoff in prop_oneof![0.2..8.0f64, Just(f64::INFINITY)]) {
        let nu = LevyMeasure::from_density(DensityComponent::Power { p, c, cutoff, side: Side::Pos });
        let got = validate_levy(&nu).min_x2_integral;
        let want = power_min_x2(p, c, cutoff);
        prop_assert!((got - want).abs() <= 1e-8 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn atom_at_zero_is_reported() {
    let report = validate_levy(&LevyMeasure::atom(0.0, 1.0));
    assert!(!report.ok);
    assert!(report.messages.iter().any(|m| m.contains("atom at zero")));
}

#[test]
fn power_exponent_outside_range_fails_integrability() {
    let nu = LevyMeasure::from_density(DensityComponent::Power {
        p: 2.5,
        c: 1.0,
        cutoff: f64::INFINITY,
        side: Side::Pos,
    });
    let report = validate_levy(&nu);
    assert!(!report.ok);
    assert!(report.messages.iter().any(|m| m.contains("integrability")), "{:?}", report.messages);
}

#[test]
fn mixing_kinds_is_refused() {
    let f = CharTriplet::poisson(Kind::Free, 1.0);
    let c = CharTriplet::poisson(Kind::Classical, 1.0);
    assert!(matches!(triplet_add(&f, &c), Err(fcrm::Error::MixedKinds(_))));
}

#[test]
fn triplet_json_roundtrip() {
    let t = random_triplet(11, Kind::Free);
    let text = serde_json::to_string(&t).unwrap();
    let back: CharTriplet = serde_json::from_str(&text).unwrap();
    assert_eq!(back, t);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["kind"], "free");
}
