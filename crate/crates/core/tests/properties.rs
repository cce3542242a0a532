use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use torsion_core::closed_form::*;
use torsion_core::fem::{solve_neumann_mean_zero, solve_robin, SolveOptions};
use torsion_core::geometry::{build_mesh, regular_polygon_vertices};
use torsion_core::DomainSpec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polygon_energy_scales_with_area_squared(n in 3usize..500, area in 0.01f64..100.0) {
        let base = regular_polygon_energy(n, PI).unwrap().e;
        let scaled = regular_polygon_energy(n, area).unwrap().e;
        assert_relative_eq!(scaled, base * (area / PI).powi(2), max_relative = 1e-13);
    }

    #[test]
    fn polygon_energies_decrease_toward_the_disk(n in 3usize..400) {
        let a = regular_polygon_energy(n, PI).unwrap().e;
        let b = regular_polygon_energy(n + 1, PI).unwrap().e;
        prop_assert!(b < a);
        prop_assert!(b > PI / 8.0);
    }

    #[test]
    fn tangential_formula_is_rotation_invariant(n in 3usize..40, angle in 0.0f64..6.3, dx in -5.0f64..5.0) {
        let (s, c) = angle.sin_cos();
        let v: Vec<[f64; 2]> = regular_polygon_vertices(n, 1.5)
            .iter()
            .map(|p| [c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] - dx])
            .collect();
        let e = tangential_polygon_energy(&v).unwrap().e;
        assert_relative_eq!(e, regular_polygon_energy(n, 1.5).unwrap().e, max_relative = 1e-11);
    }

    #[test]
    fn annulus_beats_the_disk(b in 1.0001f64..50.0) {
        let g = annulus_disk_gap(b).unwrap();
        prop_assert!(g.gap > 0.0);
        let s = annulus_solution(2, b).unwrap();
        assert_relative_eq!(g.integral_annulus, s.energy(), max_relative = 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn annulus_is_never_stationary(n in 2usize..8, b in 1.0001f64..100.0) {
        prop_assert!(annulus_stationarity_gap(n, b).unwrap() > 0.0);
    }

    #[test]
    fn increasing_power_sources_are_unstable(s in 0.05f64..6.0, radius in 0.2f64..5.0) {
        let f = RadialProfile::power(s);
        prop_assert!(!stability_condition(2, radius, 0.0, &f).unwrap());
        prop_assert!(mode_second_variation(2, radius, 0.0, &f, 1).unwrap() < 0.0);
    }

    #[test]
    fn constant_source_modes_are_nonnegative(beta in 0.0f64..10.0, l in 1u32..12, n in 2usize..5) {
        let d = mode_second_variation(n, 1.0, beta, &RadialProfile::unit(), l).unwrap();
        prop_assert!(d >= -1e-12);
    }

    #[test]
    fn planar_boxes_obey_the_oscillation_bound(a1 in 0.01f64..10.0, ratio in 1.0f64..1000.0) {
        let o = box_oscillations(&[a1, a1 * ratio]).unwrap();
        prop_assert!(o.osc_boundary >= o.volume / 16.0 * (1.0 - 1e-14));
        prop_assert!(o.osc_boundary < o.volume / 8.0);
        assert_relative_eq!(o.closure_over_volume, 0.125, max_relative = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fem_energy_is_quartic_under_dilation(n in 3usize..9, factor in 0.3f64..3.0) {
        let mesh = build_mesh(&DomainSpec::RegularPolygon { sides: n, area: PI }, 3).unwrap();
        let big = mesh.scaled(factor).unwrap();
        let f = RadialProfile::unit();
        let opts = SolveOptions::default();
        let t = solve_neumann_mean_zero(&mesh, &f, 0.0, &opts).unwrap().energies.t;
        let tb = solve_neumann_mean_zero(&big, &f, 0.0, &opts).unwrap().energies.t;
        assert_relative_eq!(tb, factor.powi(4) * t, max_relative = 1e-11);
    }

    #[test]
    fn robin_identity_on_random_polygons(n in 3usize..10, beta in 0.1f64..10.0) {
        let mesh = build_mesh(&DomainSpec::RegularPolygon { sides: n, area: 2.0 }, 3).unwrap();
        let f = RadialProfile::unit();
        let opts = SolveOptions::default();
        let t = solve_neumann_mean_zero(&mesh, &f, beta, &opts).unwrap();
        let j = solve_robin(&mesh, &f, beta, &opts).unwrap();
        let rhs = j.energies.t + t.area * t.area / (2.0 * beta * t.perimeter);
        prop_assert!((t.energies.t - rhs).abs() <= 1e-11);
    }
}

#[test]
fn fem_energy_lies_above_its_closed_form_on_polygons() {
    // the discrete minimum over a subspace cannot undercut the exact minimum
    for n in 3..=8 {
        let mesh = build_mesh(&DomainSpec::RegularPolygon { sides: n, area: PI }, 4).unwrap();
        let t = solve_neumann_mean_zero(&mesh, &RadialProfile::unit(), 0.0, &SolveOptions::default())
            .unwrap()
            .energies
            .t;
        assert!(t > regular_polygon_energy(n, PI).unwrap().t, "N = {n}");
    }
}
