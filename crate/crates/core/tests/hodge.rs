use dec_green::dec::{build_flat_bundle, exterior_derivative, mass_matrix, BoundaryCondition, BundleSpec, Cochain, FlatBundle};
use dec_green::hodge::{harmonic_space, HodgeSolver};
use dec_green::linalg::{dot, inner};
use dec_green::rng::SeededRng;
use dec_green::{generate_mesh, Error, MeshShape, SimplicialMesh};
use proptest::prelude::*;

fn annulus() -> SimplicialMesh {
    generate_mesh(&MeshShape::Annulus { r_in: 0.5, r_out: 1.0 }, 8).unwrap()
}

#[test]
fn decomposition_of_random_cochains() {
    let cases = [
        (annulus(), 1, BundleSpec::Trivial, 1),
        (generate_mesh(&MeshShape::Torus2d { side: 1.0 }, 6).unwrap(), 1, BundleSpec::Trivial, 1),
        (annulus(), 1, BundleSpec::RotationAngle(vec![0.7]), 2),
        (generate_mesh(&MeshShape::Box3d { side: 1.0 }, 3).unwrap(), 2, BundleSpec::Trivial, 1),
    ];
    for (m, p, spec, rank) in cases {
        let b = build_flat_bundle(&m, rank, &spec).unwrap();
        let hs = HodgeSolver::new(&m, p, &b).unwrap();
        let d = exterior_derivative(&m, p, &b).unwrap().matrix;
        let mut rng = SeededRng::new(17);
        for _ in 0..50 {
            let f = Cochain::from_values(&m, p, rank, rng.normal_vec(m.n_simplices(p) * rank)).unwrap();
            let dec = hs.hodge_decomposition(&f).unwrap();
            assert!(dec.reconstruction_error <= 1e-8, "{}", dec.reconstruction_error);
            assert!(dec.orthogonality_defect <= 1e-8, "{}", dec.orthogonality_defect);
            // the exact and harmonic parts are closed
            for part in [&dec.exact, &dec.harmonic] {
                let dp = d.mul_vec(part);
                assert!(dot(&dp, &dp).sqrt() <= 1e-8 * dot(&f.values, &f.values).sqrt());
            }
        }
    }
}

#[test]
fn harmonic_generator_is_an_obstruction() {
    let m = annulus();
    let b = FlatBundle::trivial(&m, 1);
    let h = harmonic_space(&m, 1, &b, BoundaryCondition::Neumann).unwrap();
    assert_eq!(h.dimension(), 1);
    let hs = HodgeSolver::new(&m, 1, &b).unwrap();
    let f = Cochain::from_values(&m, 1, 1, h.basis[0].clone()).unwrap();
    match hs.solve_d_equation(&f, 2.0, 2.0) {
        Err(Error::ObstructionNonExact { obstruction_norm, .. }) => assert!(obstruction_norm > 0.5),
        other => panic!("expected an obstruction, got {other:?}"),
    }
}

#[test]
fn non_closed_input_is_rejected() {
    let m = annulus();
    let b = FlatBundle::trivial(&m, 1);
    let hs = HodgeSolver::new(&m, 1, &b).unwrap();
    let mut values = vec![0.0; m.n_simplices(1)];
    values[0] = 1.0;
    let f = Cochain::from_values(&m, 1, 1, values).unwrap();
    assert!(matches!(hs.solve_d_equation(&f, 2.0, 2.0), Err(Error::NotClosed { .. })));
}

fn check_minimal_solution(m: &SimplicialMesh, p: usize, bundle: &FlatBundle, seed: u64) -> Result<(), TestCaseError> {
    let hs = HodgeSolver::new(m, p, bundle).unwrap();
    let f = hs.random_exact_forms(1, 6, seed).unwrap().remove(0);
    let (u, report) = hs.solve_d_equation(&f, 2.0, 2.0).unwrap();
    prop_assert!(report.residual <= 1e-8, "residual {}", report.residual);

    // adding any closed form does not shrink u
    let mass = mass_matrix(m, p - 1, bundle).unwrap().matrix;
    let norm = |x: &[f64]| inner(&mass, x, x).sqrt();
    let mut rng = SeededRng::new(seed ^ 0xABCD);
    let closed: Vec<Vec<f64>> = if p == 1 {
        harmonic_space(m, 0, bundle, BoundaryCondition::Neumann).unwrap().basis
    } else {
        let d = exterior_derivative(m, p - 2, bundle).unwrap().matrix;
        (0..4).map(|_| d.mul_vec(&rng.normal_vec(d.ncols()))).collect()
    };
    prop_assert!(!closed.is_empty());
    for c in &closed {
        let rel = inner(&mass, &u.values, c).abs() / (norm(&u.values) * norm(c));
        prop_assert!(rel <= 1e-8, "u is not orthogonal to closed forms: {rel}");
        let perturbed: Vec<f64> = u.values.iter().zip(c).map(|(a, b)| a + 1e-3 * b).collect();
        prop_assert!(norm(&perturbed) >= norm(&u.values));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn d_equation_on_disk_one_forms(seed in any::<u64>()) {
        let m = generate_mesh(&MeshShape::Disk { radius: 1.0 }, 10).unwrap();
        let b = build_flat_bundle(&m, 2, &BundleSpec::RandomFlat(seed)).unwrap();
        check_minimal_solution(&m, 1, &b, seed)?;
    }

    #[test]
    fn d_equation_on_box_two_forms(seed in any::<u64>()) {
        let m = generate_mesh(&MeshShape::Box3d { side: 1.0 }, 3).unwrap();
        check_minimal_solution(&m, 2, &FlatBundle::trivial(&m, 1), seed)?;
    }
}
