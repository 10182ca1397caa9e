use binorm_gs::inequalities::{
    check_lemma34ii, defect_34i, defect_34ii, min_constant_34i, min_constant_34ii, proof_sufficient_constant_34ii,
    revalidate_34i, revalidate_34ii, Scan,
};
use proptest::prelude::*;

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-10 * scale.max(a.abs()).max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn single_pair_defect_is_homogeneous(
        p in 0.1f64..2.0,
        c in -10.0f64..10.0,
        a in 0.01f64..10.0,
        b in 0.01f64..10.0,
        s in 0.05f64..20.0,
    ) {
        let q = 2.0 * p + 2.0;
        let scaled = defect_34i(p, c, s * a, s * b);
        let predicted = s.powf(q) * defect_34i(p, c, a, b);
        prop_assert!(close(scaled, predicted, s.powf(q) * (a + b).powf(q)));
    }

    #[test]
    fn four_variable_defect_is_bihomogeneous(
        p in 0.1f64..2.0,
        eta_frac in 0.05f64..0.95,
        c in -10.0f64..10.0,
        v in (0.01f64..10.0, 0.01f64..10.0, 0.01f64..10.0, 0.01f64..10.0),
        s in 0.05f64..20.0,
    ) {
        let eta = eta_frac * p.min(1.0);
        let (a1, a2, b1, b2) = v;
        let scaled = defect_34ii(p, eta, c, s * a1, a2, s * b1, b2);
        let predicted = s.powf(p + 1.0) * defect_34ii(p, eta, c, a1, a2, b1, b2);
        let scale = s.powf(p + 1.0) * ((a1 + b1) * (a2 + b2)).powf(p + 1.0) * (1.0 + c.abs());
        prop_assert!(close(scaled, predicted, scale));
    }
}

#[test]
fn single_pair_constants_survive_fresh_random_scans() {
    for p in [0.3, 0.5, 1.0, 1.5, 2.0] {
        let c = min_constant_34i(p, 1e-3, 1e3, 2000).unwrap();
        let r = revalidate_34i(p, c, 1e3, 200_000, 0xfeed).unwrap();
        assert!(r.holds(), "p = {p}, C = {c}: {} violations", r.violation_count);
    }
}

#[test]
fn four_variable_constants_survive_fresh_random_scans() {
    let scan = Scan {
        x_max: 100.0,
        samples: 400,
    };
    for (p, eta) in [(0.3, 0.15), (0.8, 0.4), (1.5, 0.75)] {
        let m = min_constant_34ii(p, eta, 1e-3, &scan).unwrap();
        let r = revalidate_34ii(p, eta, m.estimate, scan.x_max, 200_000, 0xbeef).unwrap();
        assert!(r.holds(), "({p}, {eta}), C = {}: {} violations", m.estimate, r.violation_count);
        assert!(m.estimate <= m.proof_constant);
    }
}

#[test]
fn proof_constant_holds_on_a_wider_box() {
    for (p, eta) in [(0.8, 0.4), (0.5, 0.25), (1.5, 0.75)] {
        let c = proof_sufficient_constant_34ii(p, eta).unwrap();
        let r = check_lemma34ii(
            p,
            eta,
            c,
            &Scan {
                x_max: 1e4,
                samples: 300,
            },
        )
        .unwrap();
        assert!(r.holds(), "({p}, {eta}): {} violations", r.violation_count);
    }
}
