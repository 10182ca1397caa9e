use binorm_gs::analysis::RadialFn;
use binorm_gs::model::{PotentialSpec, ProblemSpec, Regime};
use binorm_gs_cli::{ExperimentConfig, Task};
use proptest::prelude::*;

fn potential() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        Just(PotentialSpec::Zero),
        (0.01f64..5.0, 0.1f64..4.0).prop_map(|(d, w)| PotentialSpec::gaussian_well(d, w)),
        (0.01f64..2.0).prop_map(|k| PotentialSpec::harmonic_trap(1.0, k)),
        prop::collection::vec(-3.0f64..0.0, 0..4).prop_map(|values| PotentialSpec::Tabulated { values }),
    ]
}

fn task() -> impl Strategy<Value = Task> {
    prop_oneof![
        any::<bool>().prop_map(|required| Task::Solve { required }),
        (prop::collection::vec(0.0f64..=1.0, 1..5), any::<bool>())
            .prop_map(|(theta, required)| Task::ScanSubadd { theta, required }),
        prop::collection::vec((1.0f64..5.0, 6.0f64..12.0), 0..3).prop_map(|w| Task::Decay {
            windows: w.into_iter().map(|(a, b)| [a, b]).collect(),
            required: true,
        }),
        (prop::collection::vec(1usize..5000, 1..4), 0.01f64..0.5).prop_map(|(separations, g)| Task::Glue {
            separations,
            split: [g, g],
            required: false,
        }),
        (0.1f64..2.0, prop::option::of(0.01f64..0.5), prop::option::of(-10.0f64..1e6)).prop_map(
            |(p, eta, constant)| Task::Inequalities {
                p,
                eta,
                constant,
                x_max: 100.0,
                samples: 100,
                resolution: 1e-3,
            }
        ),
        (0.1f64..3.0, 0.0f64..2.0).prop_map(|(rate, power)| Task::Convolution {
            f: RadialFn::PolyExp {
                amplitude: 1.0,
                power,
                rate: 2.0 * rate,
            },
            g: RadialFn::exp(rate),
            alpha: power,
            beta: rate,
            gamma: 1.0,
            r: vec![10.0, 20.0],
            omegas: vec![[1.0, 0.0]],
        }),
    ]
}

prop_compose! {
    fn config()(
        dim in 1usize..=2,
        p in (0.05f64..0.99, 0.05f64..0.99, 0.05f64..0.99),
        mu in (0.1f64..3.0, 0.1f64..3.0),
        beta in 1e-6f64..3.0,
        alpha in (0.1f64..10.0, 0.1f64..10.0),
        v1 in potential(),
        v2 in potential(),
        trapping in any::<bool>(),
        n in 16usize..4096,
        length in 1.0f64..100.0,
        seed in any::<u64>(),
        symmetrize in prop::option::of(1usize..100),
        tasks in prop::collection::vec(task(), 0..4),
    ) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.problem = ProblemSpec {
            dim,
            p1: p.0, p2: p.1, p3: p.2,
            mu1: mu.0, mu2: mu.1,
            beta,
            alpha1: alpha.0, alpha2: alpha.1,
            v1, v2,
            regime: if trapping { Regime::Trapping } else { Regime::BothBounded },
        };
        c.grid.n = n;
        c.grid.length = length;
        c.solver.rng_seed = seed;
        c.solver.symmetrize_every = symmetrize;
        c.tasks = tasks;
        c
    }
}

proptest! {
    #[test]
    fn flat_text_round_trips(c in config()) {
        let text = c.to_flat();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_flat(), text);
    }

    #[test]
    fn json_mirror_round_trips(c in config()) {
        let back: ExperimentConfig = serde_json::from_str(&c.to_json()).unwrap();
        prop_assert_eq!(back, c);
    }
}
