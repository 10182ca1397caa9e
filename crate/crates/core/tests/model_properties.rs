mod common;

use binorm_gs::energy::Problem;
use binorm_gs::model::{normalize_bounded_potential, sample_potential, validate_on_grid, PotentialSpec, ProblemSpec, Regime};
use common::{bumps, grid_1d, grid_2d, rel};
use proptest::prelude::*;

fn well() -> impl Strategy<Value = PotentialSpec> {
    (0.01f64..5.0, 0.2f64..8.0, -3.0f64..3.0).prop_map(|(depth, width, c)| PotentialSpec::GaussianWell {
        depth,
        width,
        center: [c, -c],
        baseline: 0.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accepted_bounded_specs_sample_consistently(v1 in well(), v2 in well(), two_d in any::<bool>()) {
        let grid = if two_d { grid_2d() } else { grid_1d() };
        let spec = ProblemSpec::symmetric(grid.dim(), 0.5, 1.0, 1.0, 1.0).with_potentials(v1, v2);
        if validate_on_grid(&spec, &grid).is_ok() {
            for v in [&spec.v1, &spec.v2] {
                let s = sample_potential(v, &grid).unwrap().re();
                prop_assert!(s.iter().all(|x| *x <= 0.0));
                prop_assert!(grid.boundary_nodes().iter().all(|&i| s[i].abs() < 1e-10));
            }
        }
    }

    #[test]
    fn accepted_trapping_specs_stay_above_one(v1 in well(), stiffness in 1e-3f64..3.0) {
        let grid = grid_1d();
        let mut spec = ProblemSpec::symmetric(1, 1.0, 1.0, 1.0, 1.0)
            .with_potentials(v1, PotentialSpec::harmonic_trap(1.0, stiffness));
        spec.regime = Regime::Trapping;
        if validate_on_grid(&spec, &grid).is_ok() {
            let s = sample_potential(&spec.v2, &grid).unwrap().re();
            prop_assert!(s.iter().all(|x| *x >= 1.0));
        }
    }

    #[test]
    fn constant_shift_identity(
        depth in 0.1f64..3.0,
        width in 0.5f64..3.0,
        baseline in -5.0f64..5.0,
        a in bumps(),
        b in bumps(),
    ) {
        let grid = grid_1d();
        let original = PotentialSpec::GaussianWell { depth, width, center: [0.0, 0.0], baseline };
        let (shifted, limit) = normalize_bounded_potential(&original).unwrap();
        prop_assert_eq!(limit, baseline);
        let u = common::state(&grid, &a, &b);
        let spec = ProblemSpec::symmetric(1, 1.0, 1.0, 0.5, 1.0);
        let e_orig = Problem::new(&spec.clone().with_potentials(original, PotentialSpec::Zero), &grid)
            .unwrap()
            .energy(&u)
            .unwrap()
            .total;
        let e_shift = Problem::new(&spec.with_potentials(shifted, PotentialSpec::Zero), &grid)
            .unwrap()
            .energy(&u)
            .unwrap()
            .total;
        let predicted = e_shift + 0.5 * limit * u.first().norm_sq();
        let scale = e_orig.abs().max(0.5 * limit.abs() * u.first().norm_sq()).max(1.0);
        prop_assert!((e_orig - predicted).abs() <= 1e-12 * scale, "rel {}", rel(e_orig, predicted));
    }
}

#[test]
fn traps_have_no_limit() {
    assert!(normalize_bounded_potential(&PotentialSpec::harmonic_trap(1.0, 1.0)).is_err());
    assert_eq!(
        normalize_bounded_potential(&PotentialSpec::Constant { value: 3.0 }).unwrap(),
        (PotentialSpec::Zero, 3.0)
    );
}
