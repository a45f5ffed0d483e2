use std::sync::OnceLock;

use dec_green::dec::FlatBundle;
use dec_green::inequalities::{
    admissible, sobolev_check, Admissibility, Ensemble, EnsembleConfig, ExponentTuple, SobolevMode,
};
use dec_green::{generate_mesh, MeshShape};
use proptest::prelude::*;

fn ensemble() -> &'static Ensemble {
    static E: OnceLock<Ensemble> = OnceLock::new();
    E.get_or_init(|| {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.5 }, 12).unwrap();
        let config = EnsembleConfig {
            size: 20,
            seed: 3,
            ..EnsembleConfig::default()
        };
        Ensemble::build(&m, &FlatBundle::trivial(&m, 1), &config).unwrap()
    })
}

#[test]
fn harmonic_forms_peak_on_the_boundary() {
    let r = sobolev_check(ensemble(), SobolevMode::HarmonicMax, None, false).unwrap();
    assert!(r.delta_hat <= 1.05, "{}", r.delta_hat);
}

#[test]
fn inadmissible_exponents_are_refused() {
    // a boundary exponent r = 1 in two dimensions caps q strictly below 2
    let t = ExponentTuple::new(2.0, 2.0, 1.0, 1.0, 2);
    assert!(!admissible(&t, Admissibility::CorLaplace));
    assert!(sobolev_check(ensemble(), SobolevMode::Laplace, Some(t), false).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // on a normalized measure |f|_q grows with q, so the best constant shrinks
    #[test]
    fn normalized_delta_is_antitone_in_q(a in 1.0f64..8.0, b in 1.0f64..8.0) {
        let (q1, q2) = (a.min(b), a.max(b));
        let delta = |q: f64| {
            let t = ExponentTuple::new(q, 2.0, 4.0, 4.0, 2);
            sobolev_check(ensemble(), SobolevMode::Laplace, Some(t), true).unwrap().delta_hat
        };
        let (d1, d2) = (delta(q1), delta(q2));
        prop_assert!(d1 >= d2 * (1.0 - 1e-12), "q {q1} -> {d1}, q {q2} -> {d2}");
    }

    #[test]
    fn admissibility_is_closed_under_lowering_q(
        q in 1.0f64..12.0,
        k in 1.0f64..4.0,
        r in 1.0f64..4.0,
        s in 1.0f64..4.0,
        n in 2usize..=3,
        shrink in 0.0f64..1.0,
    ) {
        let lower = 1.0 + shrink * (q - 1.0);
        for which in [Admissibility::CorLaplace, Admissibility::CorGradient] {
            if admissible(&ExponentTuple::new(q, k, r, s, n), which) {
                prop_assert!(admissible(&ExponentTuple::new(lower, k, r, s, n), which));
            }
        }
    }
}
