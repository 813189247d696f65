use saddlepoint::generate::{entropy_instance, rng_from_seed};
use saddlepoint::{
    certify_candidate, certify_transport, solve_box, solve_equality, solve_equality_from, solve_ot, Constraint,
    DiscreteMeasure, FeatureMap, IntegrandFamily, MomentProblem, Qualification, SolveOptions, SolveStatus, Tolerances,
    TransportPlan, TransportProblem,
};

#[test]
fn transport_example_end_to_end() {
    let p = TransportProblem::new(vec![0.7f64, 0.3], vec![0.4, 0.6], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let s = solve_ot(&p).unwrap();
    assert!((p.cost_of(&s.plan) - 0.3).abs() < 1e-12);
    assert!(s.certificate.passes());
    let f = &s.potentials.f;
    let g = &s.potentials.g;
    let dual = 0.7 * f[0] + 0.3 * f[1] + 0.4 * g[0] + 0.6 * g[1];
    assert!((dual - 0.3).abs() < 1e-9);

    // the product plan is feasible but not optimal
    let product = TransportPlan::product(p.mu(), p.nu());
    let c = certify_transport(&p, &product, &s.potentials, Tolerances::transport()).unwrap();
    assert!(!c.passes());
}

#[test]
fn single_precision_transport() {
    let p = TransportProblem::new(
        vec![0.5f32, 0.5],
        vec![0.25, 0.75],
        vec![vec![1.0, 2.0], vec![3.0, 1.0]],
    )
    .unwrap();
    let s = solve_ot(&p).unwrap();
    assert!((p.cost_of(&s.plan) - 1.25).abs() < 1e-6);
}

#[test]
fn warm_start_reaches_the_same_dual() {
    let p = entropy_instance(&mut rng_from_seed(21), 12, 3).unwrap();
    let cold = solve_equality(&p, &SolveOptions::default()).unwrap();
    let warm = solve_equality_from(&p, &cold.dual.y, &SolveOptions::default()).unwrap();
    assert!(warm.dual.iterations <= 1);
    for (a, b) in cold.dual.y.iter().zip(&warm.dual.y) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn iteration_cap_is_reported() {
    let p = entropy_instance(&mut rng_from_seed(22), 20, 4).unwrap();
    let opts = SolveOptions {
        max_iter: 1,
        ..SolveOptions::default()
    };
    let s = solve_equality(&p, &opts).unwrap();
    assert_eq!(s.dual.status, SolveStatus::MaxIterations);
    assert!(!s.certificate.passes());
    assert!(s.certificate.failures().contains(&"converged"));
}

#[test]
fn candidate_certification_round_trip() {
    let p = entropy_instance(&mut rng_from_seed(23), 8, 2).unwrap();
    let s = solve_equality(&p, &SolveOptions::default()).unwrap();
    let c = certify_candidate(&p, &s.primal.q, &s.dual.y, Tolerances::entropy()).unwrap();
    assert!(c.passes(), "{c:?}");
    assert_eq!(c.qualification, Qualification::Unavailable);
    let mut shifted = s.dual.y.clone();
    shifted[0] += 0.1;
    assert!(!certify_candidate(&p, &s.primal.q, &shifted, Tolerances::entropy())
        .unwrap()
        .passes());
}

#[test]
fn one_sided_box_on_the_mean() {
    // at least 0.7 mass on the second point, total mass fixed at one
    let p = MomentProblem::new(
        DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap(),
        IntegrandFamily::relative_entropy(),
        FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
        Constraint::Box {
            lower: vec![1.0, 0.7],
            upper: vec![1.0, f64::INFINITY],
        },
    )
    .unwrap();
    let s = solve_box(&p, &SolveOptions::default()).unwrap();
    assert!((s.target[1] - 0.7).abs() < 1e-12);
    assert!(s.certificate.passes(), "{:?}", s.certificate);
}
