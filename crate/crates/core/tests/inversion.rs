mod common;

use common::{random_free_regular, rng};
use fcrm::inversion::{classical_density, free_density, ks_between, solve_f, GridSpec};
use fcrm::levy::{CharTriplet, Kind, LevyMeasure};
use fcrm::oracle::EmpiricalSpectrum;
use fcrm::transforms::{cauchy_transform, ConcreteLaw};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn semicircle_g(z: Complex64) -> Complex64 {
    // Branch with G(z) ~ 1/z at infinity.
    let s = (z - 2.0).sqrt() * (z + 2.0).sqrt();
    (z - s) / 2.0
}

#[test]
fn solver_matches_closed_form_semicircle() {
    let t = CharTriplet::free(1.0, 0.0, LevyMeasure::empty());
    let mut r = rng(21);
    for _ in 0..50 {
        let zeta = Complex64::new(r.random_range(-4.0..4.0), r.random_range(1e-3..3.0));
        let (u, diag) = solve_f(&t, zeta).unwrap();
        assert!(diag.converged);
        assert!(u.im >= zeta.im);
        assert!((1.0 / u - semicircle_g(zeta)).norm() < 1e-8, "at {zeta}");
    }
}

#[test]
fn recovered_table_reproduces_cauchy_transform() {
    let t = CharTriplet::free(1.0, 0.0, LevyMeasure::empty());
    let table = free_density(&t, &GridSpec::new(-2.5, 2.5, 1001).unwrap()).unwrap();
    let law = ConcreteLaw::from_table(&table).unwrap();
    let mut r = rng(22);
    for _ in 0..20 {
        let zeta = Complex64::new(r.random_range(-3.0..3.0), r.random_range(0.2..2.0));
        let from_table = cauchy_transform(&law, zeta).unwrap();
        let (u, _) = solve_f(&t, zeta).unwrap();
        assert!((from_table - 1.0 / u).norm() < 1e-3, "at {zeta}: {from_table} vs {}", 1.0 / u);
    }
}

#[test]
fn free_poisson_atom_and_density() {
    // Marchenko-Pastur with rate 1/4: atom 3/4 at zero.
    let t = CharTriplet::poisson(Kind::Free, 0.25);
    let table = free_density(&t, &GridSpec::new(-0.5, 3.0, 701).unwrap()).unwrap();
    assert_eq!(table.atoms.len(), 1);
    let (c, m) = table.atoms[0];
    assert!(c.abs() < 1e-9 && (m - 0.75).abs() < 1e-3, "{:?}", table.atoms);
    assert!((table.total_mass() - 1.0).abs() < 1e-2);
}

#[test]
fn classical_gaussian_with_drift() {
    let t = CharTriplet::classical(2.0, 1.0, LevyMeasure::empty());
    let table = classical_density(&t, &GridSpec::new(-6.0, 8.0, 281).unwrap()).unwrap();
    for (x, r) in table.xs.iter().zip(&table.rho) {
        let exact = (-(x - 1.0).powi(2) / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
        assert!((r - exact).abs() < 1e-9);
    }
}

#[test]
fn degenerate_laws_are_point_masses() {
    let g = GridSpec::new(-1.0, 3.0, 101).unwrap();
    for kind in [Kind::Free, Kind::Classical] {
        let t = CharTriplet::point_mass(kind, 1.25);
        let table = match kind {
            Kind::Free => free_density(&t, &g).unwrap(),
            Kind::Classical => classical_density(&t, &g).unwrap(),
        };
        assert_eq!(table.atoms.len(), 1);
        assert!((table.atoms[0].0 - 1.25).abs() < 1e-6 && (table.atoms[0].1 - 1.0).abs() < 1e-6);
        assert!(table.continuous_mass() < 1e-3);
    }
}

#[test]
fn ks_trivial_cases() {
    let t = CharTriplet::point_mass(Kind::Free, 0.0);
    let table = free_density(&t, &GridSpec::new(-1.0, 1.0, 21).unwrap()).unwrap();
    let at_atom = EmpiricalSpectrum::new(vec![0.0; 10], 0, "zeros");
    assert!(ks_between(&table, &at_atom) < 1e-6);
    let elsewhere = EmpiricalSpectrum::new(vec![0.5; 10], 0, "halves");
    assert!((ks_between(&table, &elsewhere) - 1.0).abs() < 1e-6);
}

#[test]
fn wrong_kind_and_half_plane_are_refused() {
    let g = GridSpec::new(0.0, 1.0, 11).unwrap();
    let free = CharTriplet::poisson(Kind::Free, 1.0);
    let classical = CharTriplet::poisson(Kind::Classical, 1.0);
    assert!(classical_density(&free, &g).is_err());
    assert!(free_density(&classical, &g).is_err());
    assert!(solve_f(&free, Complex64::new(0.0, -1.0)).is_err());
}

#[test]
fn grid_parsing() {
    let g = GridSpec::parse("-3:3:600").unwrap();
    assert_eq!((g.lo, g.hi, g.n), (-3.0, 3.0, 600));
    for bad in ["3:-3:10", "0:1:1", "0:1", "a:b:c", "0:1:-5"] {
        assert!(GridSpec::parse(bad).is_err(), "{bad}");
    }
}

#[test]
fn table_csv_format() {
    let t = CharTriplet::poisson(Kind::Free, 0.5);
    let csv = free_density(&t, &GridSpec::new(-1.0, 4.0, 51).unwrap()).unwrap().to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,density"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 52);
    assert!(csv.lines().any(|l| l.starts_with("# atom,")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterates_stay_above_zeta(seed in any::<u64>(), x in -3.0..8.0f64, y in 1e-4..2.0f64) {
        let t = random_free_regular(&mut rng(seed));
        let zeta = Complex64::new(x, y);
        let (u, diag) = solve_f(&t, zeta).unwrap();
        prop_assert!(diag.converged);
        prop_assert!(u.im >= zeta.im);
    }

    #[test]
    fn free_regular_tables_are_complete_and_positive(seed in any::<u64>()) {
        let t = random_free_regular(&mut rng(seed));
        let table = free_density(&t, &GridSpec::around(&t, 801).unwrap()).unwrap();
        let mass = table.total_mass();
        prop_assert!((0.98..=1.02).contains(&mass), "mass {mass}");
        prop_assert!(table.rho.iter().all(|r| *r >= 0.0));
        prop_assert!(table.mass_below(-1e-2) <= 1e-3);
    }

    #[test]
    fn classical_tables_are_complete(seed in any::<u64>()) {
        let t = random_free_regular(&mut rng(seed)).with_kind(Kind::Classical);
        let table = classical_density(&t, &GridSpec::around(&t, 801).unwrap()).unwrap();
        let mass = table.total_mass();
        prop_assert!((0.98..=1.02).contains(&mass), "mass {mass}");
    }
}
