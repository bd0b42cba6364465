use proptest::prelude::*;
use urbanbranch::branched::{interior_vertices, SteinerTree};
use urbanbranch::measures::{Atom, DiscreteMeasure};
use urbanbranch::transport::{euclidean_cost_matrix, solve_ot};
use urbanbranch::{
    flux_to_urban, momentum_residual, solve_branched, urban_to_flux, verify_equivalence, BranchedConfig,
    CostFunction, FluxEdge, MassFlux, Point, Scenario,
};

fn point() -> impl Strategy<Value = Point<f64>> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| Point::xy(x, y))
}

fn measure(max: usize) -> impl Strategy<Value = DiscreteMeasure<f64>> {
    prop::collection::vec((point(), 0.1..1.0f64), 1..=max).prop_map(|atoms| {
        DiscreteMeasure::probability(atoms.into_iter().map(|(p, m)| Atom::new(p, m)).collect(), true).unwrap()
    })
}

fn cost() -> impl Strategy<Value = CostFunction<f64>> {
    prop_oneof![
        (0.2..0.9f64).prop_map(|a| CostFunction::power(a).unwrap()),
        (0.0..0.8f64, 0.05..1.0f64).prop_map(|(b, c)| CostFunction::affine_capped(1.0, b, c).unwrap()),
        Just(urbanbranch::fixtures::two_column_cost()),
    ]
}

/// Straight-line flux of the Euclidean optimal plan: an admissible competitor.
fn plan_flux(mu: &DiscreteMeasure<f64>, nu: &DiscreteMeasure<f64>) -> MassFlux<f64> {
    let plan = solve_ot(mu, nu, &euclidean_cost_matrix(mu, nu)).unwrap().plan;
    let mut edges = Vec::new();
    for (i, a) in mu.atoms().iter().enumerate() {
        for (j, b) in nu.atoms().iter().enumerate() {
            edges.push(FluxEdge::new(a.point.clone(), b.point.clone(), plan.weight(i, j)));
        }
    }
    MassFlux::new(edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_beats_straight_line_plans(mu in measure(2), nu in measure(2), tau in cost()) {
        let sol = solve_branched(&mu, &nu, &tau, &BranchedConfig::default()).unwrap();
        prop_assert!(sol.flux.is_admissible(&mu, &nu, 1e-9));
        prop_assert!((sol.flux.gilbert_energy(&tau) - sol.value).abs() <= 1e-12);
        prop_assert!(sol.value <= plan_flux(&mu, &nu).gilbert_energy(&tau) + 1e-12);
        for v in interior_vertices(&sol.flux) {
            let r = momentum_residual(&sol.flux, &tau, &v).unwrap();
            prop_assert!(r.norm() <= 1e-5, "residual {} at {:?}", r.norm(), v);
        }
    }

    #[test]
    fn steiner_sweeps_never_increase_energy(
        term in prop::collection::vec(point(), 3),
        s in point(),
        w in prop::collection::vec(0.1..1.0f64, 3),
    ) {
        let mut pts = term;
        pts.push(s);
        let mut tree = SteinerTree::new(pts, 3, vec![(0, 3), (1, 3), (2, 3)], w);
        let mut last = tree.energy();
        for _ in 0..50 {
            tree.sweep();
            let e = tree.energy();
            prop_assert!(e <= last + 1e-12, "{} after {}", e, last);
            last = e;
        }
    }

    #[test]
    fn certificates_chain(mu in measure(2), nu in measure(2), tau in cost()) {
        let sol = solve_branched(&mu, &nu, &tau, &BranchedConfig::default()).unwrap();
        let forward = flux_to_urban(&sol.flux, &tau, true).unwrap();
        prop_assert!(forward.certificate.holds);
        let u = forward.certificate.u.total.finite().unwrap();
        prop_assert!(u <= sol.value + 1e-8);
        let back = urban_to_flux(&forward.network, &tau, &mu, &nu, 0).unwrap();
        prop_assert!(back.certificate.holds);
        prop_assert!(back.flux.gilbert_energy(&tau) <= u + 1e-8);
        let report = verify_equivalence(&Scenario::new(tau, mu, nu)).unwrap();
        prop_assert!(report.pass, "{} / {} / {}", report.j_star, report.u, report.j_roundtrip);
    }
}

#[test]
fn steiner_optimum_of_linear_cost_is_the_fermat_point() {
    // equilateral triangle, unit weights: the optimum is the centroid
    let h = 3f64.sqrt() / 2.0;
    let pts = vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.5, h), Point::xy(0.1, 0.1)];
    let mut tree = SteinerTree::new(pts, 3, vec![(0, 3), (1, 3), (2, 3)], vec![1.0; 3]);
    tree.optimize(1e-14, 10_000);
    let s = &tree.points()[3];
    assert!(s.dist(&Point::xy(0.5, h / 3.0)) <= 1e-6);
    assert!((tree.energy() - 3f64.sqrt()).abs() <= 1e-10);
}

#[test]
fn solver_is_deterministic() {
    let s = urbanbranch::fixtures::two_column(1.5_f64);
    let config = BranchedConfig::default();
    let a = solve_branched(&s.mu_plus, &s.mu_minus, &s.cost, &config).unwrap();
    let b = solve_branched(&s.mu_plus, &s.mu_minus, &s.cost, &config).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.flux, b.flux);
}
