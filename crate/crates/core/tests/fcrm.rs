mod common;

use common::{random_cuts, random_model, random_partition, random_region, rng, HORIZON};
use fcrm::bijection::bp_map;
use fcrm::fcrm::{
    check_additivity, check_refinement, classical_counterpart_law, g_law, h_law, region_mass, BaseMeasure,
    FcrmModel, OracleSettings, RegionSet,
};
use fcrm::levy::{CharTriplet, Kind, LevyMeasure};
use fcrm::transforms::{free_cumulant_transform, poisson_integral_transform};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn intervals() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-10.0..10.0f64, 0.01..3.0f64).prop_map(|(a, w)| (a, a + w)), 0..5)
}

fn region() -> impl Strategy<Value = RegionSet> {
    intervals().prop_map(|v| RegionSet::from_intervals(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn regions_are_normalized(r in region()) {
        let iv = r.intervals();
        prop_assert!(iv.iter().all(|(a, b)| a < b));
        prop_assert!(iv.windows(2).all(|w| w[0].1 < w[1].0));
    }

    #[test]
    fn region_text_roundtrip(r in region()) {
        let back: RegionSet = r.to_string().parse().unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn union_is_commutative_and_contains_parts(a in region(), b in region()) {
        let u = a.union(&b);
        prop_assert_eq!(&u, &b.union(&a));
        prop_assert!(a.is_subset_of(&u) && b.is_subset_of(&u));
        prop_assert!(u.length() <= a.length() + b.length() + 1e-12);
        if !a.intersects(&b) {
            prop_assert!((u.length() - a.length() - b.length()).abs() < 1e-12);
        }
    }

    #[test]
    fn membership_agrees_with_union(a in region(), b in region(), x in -12.0..14.0f64) {
        prop_assert_eq!(a.union(&b).contains(x), a.contains(x) || b.contains(x));
    }

    #[test]
    fn region_mass_is_monotone(seed in any::<u64>(), a in region(), b in region()) {
        let m = common::random_base(&mut rng(seed), 0.0);
        prop_assert!(region_mass(&m, &a) <= region_mass(&m, &a.union(&b)) + 1e-12);
    }
}

#[test]
fn region_syntax() {
    let r: RegionSet = " [0, 1) + [2,3.5) ".parse().unwrap();
    assert_eq!(r.intervals(), &[(0.0, 1.0), (2.0, 3.5)]);
    assert!(r.contains(0.0) && !r.contains(1.0) && r.contains(3.0));
    assert!("".parse::<RegionSet>().unwrap().is_empty());
    assert_eq!(RegionSet::empty().to_string(), "∅");
    for bad in ["[1,0)", "[0,1]", "[0,2)+[1,3)", "(0,1)", "[0,1)+", "[a,1)"] {
        assert!(bad.parse::<RegionSet>().is_err(), "{bad}");
    }
}

#[test]
fn poisson_region_law() {
    let model = FcrmModel {
        nu_e: BaseMeasure::uniform(0.0, 2.0, 1.0),
        nu_b: LevyMeasure::atom(1.0, 1.0),
        ..FcrmModel::default()
    };
    let e = RegionSet::interval(0.0, 2.0).unwrap();
    let h = h_law(&model, &e).unwrap();
    assert_eq!(h, CharTriplet::free(0.0, 2.0, LevyMeasure::atom(1.0, 2.0)));
    assert_eq!(g_law(&model, &e).unwrap(), h);
}

#[test]
fn deterministic_model_is_a_point_mass() {
    let model = FcrmModel::deterministic(BaseMeasure::uniform(0.0, 4.0, 0.5).with_atom(1.0, 2.0));
    let t = g_law(&model, &RegionSet::interval(0.0, 2.0).unwrap()).unwrap();
    assert_eq!(t, CharTriplet::point_mass(Kind::Free, 3.0));
}

#[test]
fn model_json_field_names() {
    let text = r#"{"alpha": {"atoms": [[1.0, 0.5]]},
                   "nu_E": {"densities": [{"family": "uniform", "lo": 0, "hi": 2, "height": 1}]},
                   "nu_B": {"atoms": [[1, 1]]},
                   "fixed_atoms": []}"#;
    let m: FcrmModel = serde_json::from_str(text).unwrap();
    assert!(m.validate().is_ok());
    let back = serde_json::to_value(&m).unwrap();
    assert!(back.get("nu_E").is_some() && back.get("nu_B").is_some());
}

#[test]
fn invalid_models_list_every_problem() {
    let m = FcrmModel {
        nu_e: BaseMeasure::uniform(0.0, 2.0, -1.0),
        nu_b: LevyMeasure::atom(-1.0, 1.0),
        ..FcrmModel::default()
    };
    let problems = m.problems();
    assert!(problems.iter().any(|p| p.starts_with("nu_E")), "{problems:?}");
    assert!(problems.iter().any(|p| p.starts_with("nu_B")), "{problems:?}");
}

#[test]
fn h_law_matches_poisson_integral() {
    let mut r = rng(31);
    for _ in 0..20 {
        let model = random_model(&mut r, false, true);
        let e = random_region(&mut r);
        let lambda = region_mass(&model.nu_e, &e);
        let t = h_law(&model, &e).unwrap();
        let z = Complex64::new(r.random_range(-3.0..3.0), -r.random_range(0.1..3.0));
        let direct = poisson_integral_transform(lambda, &model.nu_b, z).unwrap();
        let via = free_cumulant_transform(&t, z).unwrap();
        assert!((direct - via).norm() <= 1e-9 * via.norm().max(1.0));
    }
}

#[test]
fn additivity_over_random_partitions() {
    let mut r = rng(32);
    for _ in 0..100 {
        let with_atoms = r.random_bool(0.5);
        let model = random_model(&mut r, with_atoms, true);
        let parts = random_partition(&mut r, 0.0, 3.0, 4);
        let report = check_additivity(&model, &parts, None).unwrap();
        assert!(report.exact, "{report:?}");
    }
}

#[test]
fn additivity_with_oracle() {
    let model = FcrmModel {
        nu_e: BaseMeasure::uniform(0.0, 2.0, 1.0),
        nu_b: LevyMeasure::atom(1.0, 1.0),
        ..FcrmModel::default()
    };
    let parts: Vec<RegionSet> = vec![RegionSet::interval(0.0, 0.5).unwrap(), RegionSet::interval(0.5, 2.0).unwrap()];
    let report = check_additivity(&model, &parts, Some(OracleSettings { n: 800, seed: 5, grid: None })).unwrap();
    assert!(report.exact);
    assert!(report.oracle_ks.unwrap() < 0.05, "{report:?}");
}

#[test]
fn overlapping_parts_are_rejected() {
    let model = random_model(&mut rng(33), false, false);
    let parts = vec![RegionSet::interval(0.0, 2.0).unwrap(), RegionSet::interval(1.0, 3.0).unwrap()];
    assert!(check_additivity(&model, &parts, None).is_err());
}

#[test]
fn refinement_is_consistent() {
    let mut r = rng(34);
    for _ in 0..30 {
        let with_atoms = r.random_bool(0.5);
        let model = random_model(&mut r, with_atoms, true);
        let fine_cuts = random_cuts(&mut r, 0.0, HORIZON, 8);
        let fine: Vec<RegionSet> = fine_cuts.windows(2).map(|w| RegionSet::interval(w[0], w[1]).unwrap()).collect();
        // Coarse sets: unions of consecutive runs of fine sets.
        let mut coarse = Vec::new();
        let mut k = 0;
        while k < fine.len() {
            let run = r.random_range(1..=3).min(fine.len() - k);
            coarse.push(RegionSet::interval(fine_cuts[k], fine_cuts[k + run]).unwrap());
            k += run;
        }
        let report = check_refinement(&model, &coarse, &fine).unwrap();
        assert!(report.consistent, "{report:?}");
    }
}

#[test]
fn refinement_rejects_non_covers() {
    let model = random_model(&mut rng(35), false, false);
    let coarse = vec![RegionSet::interval(0.0, 2.0).unwrap()];
    let fine = vec![RegionSet::interval(0.0, 1.0).unwrap()];
    assert!(check_refinement(&model, &coarse, &fine).is_err());
}

#[test]
fn counterpart_carries_the_same_data() {
    let mut r = rng(36);
    for _ in 0..50 {
        let model = random_model(&mut r, false, true);
        let e = random_region(&mut r);
        let c = classical_counterpart_law(&model, &e).unwrap();
        assert_eq!(c.kind, Kind::Classical);
        assert_eq!(bp_map(&c).unwrap(), g_law(&model, &e).unwrap());
    }
}

#[test]
fn counterpart_requires_no_fixed_atoms() {
    let model = random_model(&mut rng(37), true, false);
    let err = classical_counterpart_law(&model, &RegionSet::interval(0.0, HORIZON).unwrap()).unwrap_err();
    assert!(err.to_string().contains("without fixed atoms"));
}
