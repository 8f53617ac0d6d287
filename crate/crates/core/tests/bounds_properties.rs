use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use proptest::prelude::*;

use qss6::bounds::{
    chi_overlaps, minimize_objective, p1_bound, p2_bound, realized_overlaps, s1_sum, s2_sum,
    BoundsError, BoundsReport, GramParams, Objective, MIN_RESOLUTION,
};

fn feasible_params() -> impl Strategy<Value = GramParams> {
    (1e-4f64..FRAC_1_SQRT_2 - 1e-4, 0.0f64..=1.0, 0.0f64..TAU).prop_map(|(z, r, a)| {
        let t = FRAC_1_SQRT_2 - z;
        let radius = (z * t).sqrt() * r;
        GramParams::new(radius * a.cos(), radius * a.sin(), z, t).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn formal_and_realized_overlaps_agree(p in feasible_params()) {
        let formal = chi_overlaps(p).unwrap();
        let realized = realized_overlaps(p).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                prop_assert!((formal.overlap[i][j] - realized.overlap[i][j]).norm() < 1e-9, "({}, {})", i, j);
            }
        }
    }

    #[test]
    fn overlap_matrix_is_a_gram_matrix(p in feasible_params()) {
        let family = chi_overlaps(p).unwrap();
        prop_assert!(family.is_hermitian(1e-12));
        for i in 0..9 {
            prop_assert!((family.overlap[i][i].re - 1.0).abs() < 1e-9);
            prop_assert!(family.overlap[i][i].im.abs() < 1e-9);
        }
        // the nine states are never perfectly distinguishable
        prop_assert!(family.max_off_diagonal() > 0.0);
    }

    #[test]
    fn sums_stay_above_their_minima(p in feasible_params()) {
        prop_assert!(s1_sum(p).unwrap() >= 27.0 - 1e-9);
        prop_assert!(s2_sum(p).unwrap() >= 1.0 / 3.0 - 1e-9);
        let p1 = p1_bound(p).unwrap();
        let p2 = p2_bound(p).unwrap();
        prop_assert!(p1 <= 0.625 + 1e-9);
        prop_assert!(p2 <= 2.0 / 3.0 + 1e-9);
    }

    #[test]
    fn realized_vectors_reproduce_the_gram_matrix(p in feasible_params()) {
        let (alpha, beta) = p.realize();
        let g = p.gram();
        let dot = |u: &[qss6::quantum::C64; 2], v: &[qss6::quantum::C64; 2]| u[0].conj() * v[0] + u[1].conj() * v[1];
        prop_assert!((dot(&alpha, &alpha) - g[0][0]).norm() < 1e-9);
        prop_assert!((dot(&alpha, &beta) - g[0][1]).norm() < 1e-9);
        prop_assert!((dot(&beta, &beta) - g[1][1]).norm() < 1e-9);
    }
}

#[test]
fn epr_is_the_common_minimiser() {
    let epr = GramParams::epr();
    assert!((s1_sum(epr).unwrap() - 27.0).abs() < 1e-12);
    assert!((s2_sum(epr).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((p1_bound(epr).unwrap() - 0.625).abs() < 1e-12);
    assert!((p2_bound(epr).unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn argmin_is_stable_across_resolutions() {
    for which in [Objective::S1, Objective::S2] {
        let coarse = minimize_objective(which, 50, 500).unwrap().constrained;
        let fine = minimize_objective(which, 200, 500).unwrap().constrained;
        assert!(coarse.params.distance(&fine.params) < 1e-3, "{which:?}");
        assert!((coarse.value - fine.value).abs() < 1e-6);
    }
}

#[test]
fn unrefined_grid_is_an_upper_estimate() {
    let grid = minimize_objective(Objective::S1, MIN_RESOLUTION, 0).unwrap();
    assert!(grid.constrained.value >= 27.0 - 1e-9);
    assert!(grid.constrained.value < 27.5);
    assert!(grid.constrained.params.is_feasible());
    assert!(grid.unconstrained.value <= grid.constrained.value + 1e-12);
}

#[test]
fn coarse_grids_are_refused() {
    assert!(matches!(minimize_objective(Objective::S1, MIN_RESOLUTION - 1, 10), Err(BoundsError::Resolution { .. })));
}

#[test]
fn infeasible_parameters_are_refused() {
    assert!(GramParams::new(0.3, 0.3, 0.1, FRAC_1_SQRT_2 - 0.1).is_err());
    assert!(GramParams::new(0.0, 0.0, -0.1, FRAC_1_SQRT_2 + 0.1).is_err());
    assert!(GramParams::new(0.0, 0.0, 0.3, 0.3).is_err());
}

#[test]
fn report_serialises_its_fields() {
    let report = BoundsReport::compute(Objective::S2, 60, 100).unwrap();
    let json: serde_json::Value = serde_json::to_value(&report).unwrap();
    for key in ["objective", "minimum", "argmin", "p1", "p2", "grid_resolution"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["objective"], "s2");
    for key in ["x", "y", "z", "t"] {
        assert!(json["argmin"][key].is_number());
    }
}
