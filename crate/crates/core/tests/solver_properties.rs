use binorm_gs::grid::{Field, Grid, State};
use binorm_gs::model::{PotentialSpec, ProblemSpec};
use binorm_gs::solver::{
    minimize, minimize_infinity, minimize_scalar, minimize_with_masses, SolverConfig, ENERGY_SLACK,
};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(1, 1024, 48.0).unwrap()
}

fn config() -> SolverConfig {
    SolverConfig {
        multi_start: 1,
        ..SolverConfig::default()
    }
}

fn wells() -> impl Strategy<Value = ProblemSpec> {
    (
        (0.4f64..1.0, 0.4f64..1.0),
        0.4f64..1.0,
        (0.5f64..2.0, 0.5f64..2.0),
        0.1f64..2.0,
        (1.0f64..4.0, 1.0f64..4.0),
        (0.2f64..1.5, 0.2f64..1.5),
    )
        .prop_map(|(p, p3, mu, beta, alpha, depth)| {
            let mut s = ProblemSpec::symmetric(1, p.0, mu.0, beta, alpha.0).with_potentials(
                PotentialSpec::gaussian_well(depth.0, 1.0),
                PotentialSpec::gaussian_well(depth.1, 1.5),
            );
            s.p2 = p.1;
            s.p3 = p3;
            s.mu2 = mu.1;
            s.alpha2 = alpha.1;
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flow_keeps_mass_and_descends(spec in wells()) {
        let r = minimize(&spec, &grid(), &config(), None).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.max_mass_defect < 1e-12);
        prop_assert!(r.max_energy_increase <= ENERGY_SLACK);
        let (m1, m2) = (r.state.first().norm_sq(), r.state.second().norm_sq());
        prop_assert!((m1 / spec.alpha1 - 1.0).abs() < 1e-10 && (m2 / spec.alpha2 - 1.0).abs() < 1e-10);
        for w in r.trajectory.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy + ENERGY_SLACK);
        }
        prop_assert!(r.energy() < 0.0);
        prop_assert!(r.multipliers.lambda1 > 0.0 && r.multipliers.lambda2 > 0.0);
    }

    #[test]
    fn kinetic_energy_stays_bounded_along_the_flow(spec in wells()) {
        let r = minimize(&spec, &grid(), &config(), None).unwrap();
        let first = r.trajectory[0];
        let lowest = r.trajectory.iter().map(|t| t.energy).fold(f64::INFINITY, f64::min);
        prop_assert!(lowest.is_finite());
        for t in r.trajectory.iter().filter(|t| t.energy < first.energy) {
            prop_assert!(t.gradient_norm_sq.sqrt() <= 10.0 * first.gradient_norm_sq.sqrt());
        }
    }

    #[test]
    fn splitting_never_beats_the_whole(spec in wells(), theta in (0.1f64..0.9, 0.1f64..0.9)) {
        let g = grid();
        let whole = minimize(&spec, &g, &config(), None).unwrap();
        let inner = [theta.0 * spec.alpha1, theta.1 * spec.alpha2];
        let part = minimize_with_masses(&spec, &g, inner, &config()).unwrap();
        let rest_spec = spec.clone().with_masses(spec.alpha1 - inner[0], spec.alpha2 - inner[1]);
        let rest = minimize_infinity(&rest_spec, &g, &config(), None).unwrap();
        prop_assert!(whole.energy() <= part.energy() + rest.energy() + 1e-6);
    }
}

#[test]
fn symmetric_flow_stays_on_the_diagonal() {
    let g = grid();
    let spec = ProblemSpec::symmetric(1, 0.8, 1.0, 0.7, 2.0).with_potentials(
        PotentialSpec::gaussian_well(0.5, 1.0),
        PotentialSpec::gaussian_well(0.5, 1.0),
    );
    let bump = Field::from_fn(&g, |[x, _]| (-x * x / 4.0).exp());
    let init = State::new(bump.clone(), bump).unwrap();
    let r = minimize(&spec, &g, &config(), Some(&init)).unwrap();
    let gap = r
        .state
        .first()
        .values()
        .iter()
        .zip(r.state.second().values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(gap < 1e-10, "components differ by {gap}");
}

#[test]
fn scalar_energy_scales_cubically_with_mass() {
    let g = Grid::new(1, 4096, 64.0).unwrap();
    let one = minimize_scalar(&g, 1.0, 1.0, &PotentialSpec::Zero, 1.0, &config()).unwrap();
    let two = minimize_scalar(&g, 1.0, 1.0, &PotentialSpec::Zero, 2.0, &config()).unwrap();
    assert!((two.energy() / one.energy() / 8.0 - 1.0).abs() < 1e-2);
}

#[test]
fn a_well_lowers_the_scalar_energy() {
    let g = Grid::new(1, 4096, 64.0).unwrap();
    let free = minimize_scalar(&g, 1.0, 1.0, &PotentialSpec::Zero, 1.0, &config()).unwrap();
    let well = minimize_scalar(&g, 1.0, 1.0, &PotentialSpec::gaussian_well(0.5, 1.0), 1.0, &config()).unwrap();
    assert!(well.energy() < free.energy());
}

#[test]
fn runs_are_deterministic_per_seed() {
    let g = grid();
    let spec = ProblemSpec::symmetric(1, 0.7, 1.0, 0.5, 1.5)
        .with_potentials(PotentialSpec::gaussian_well(0.5, 1.0), PotentialSpec::Zero);
    let cfg = SolverConfig {
        rng_seed: 11,
        ..SolverConfig::default()
    };
    let a = minimize(&spec, &g, &cfg, None).unwrap();
    let b = minimize(&spec, &g, &cfg, None).unwrap();
    assert_eq!(a.energy().to_bits(), b.energy().to_bits());
    assert_eq!(a.start_energies, b.start_energies);
}
