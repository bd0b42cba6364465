use proptest::prelude::*;
use urbanbranch::measures::{Atom, DiscreteMeasure};
use urbanbranch::network::{build_routing_graph, Street, StreetNetwork};
use urbanbranch::transport::{euclidean_cost_matrix, solve_ot};
use urbanbranch::{solve_beckmann, CostFunction, ExtReal, Finite, FluxEdge, MassFlux, Point};

fn point() -> impl Strategy<Value = Point<f64>> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| Point::xy(x, y))
}

fn measure(max: usize) -> impl Strategy<Value = DiscreteMeasure<f64>> {
    prop::collection::vec((point(), 0.1..1.0f64), 1..=max).prop_map(|atoms| {
        DiscreteMeasure::probability(atoms.into_iter().map(|(p, m)| Atom::new(p, m)).collect(), true).unwrap()
    })
}

fn scaled(mu: &DiscreteMeasure<f64>, s: f64) -> DiscreteMeasure<f64> {
    let atoms = mu.atoms().iter().map(|a| Atom::new(Point::xy(s * a.point.0[0], s * a.point.0[1]), a.mass)).collect();
    DiscreteMeasure::probability(atoms, false).unwrap()
}

fn w1(mu: &DiscreteMeasure<f64>, nu: &DiscreteMeasure<f64>) -> f64 {
    solve_ot(mu, nu, &euclidean_cost_matrix(mu, nu)).unwrap().value.finite().unwrap()
}

/// A flux on a small vertex set with arbitrary edges, cycles allowed.
fn flux() -> impl Strategy<Value = MassFlux<f64>> {
    let verts = prop::collection::vec(point(), 3..=6);
    verts.prop_flat_map(|v| {
        let n = v.len();
        prop::collection::vec((0..n, 0..n, 0.01..1.0f64), 1..=10).prop_map(move |es| {
            let edges = es.into_iter().filter(|(i, j, _)| i != j).map(|(i, j, m)| FluxEdge::new(v[i].clone(), v[j].clone(), m)).collect();
            MassFlux::new(edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transport_value_ignores_atom_order(mu in measure(4), nu in measure(4)) {
        let mut rev: Vec<_> = mu.atoms().to_vec();
        rev.reverse();
        let mu_rev = DiscreteMeasure::probability(rev, false).unwrap();
        prop_assert!((w1(&mu, &nu) - w1(&mu_rev, &nu)).abs() <= 1e-12);
    }

    #[test]
    fn transport_value_scales_with_space(mu in measure(4), nu in measure(4), s in 0.1..10.0f64) {
        let a = w1(&mu, &nu);
        prop_assert!((w1(&scaled(&mu, s), &scaled(&nu, s)) - s * a).abs() <= 1e-10 * (1.0 + s));
    }

    #[test]
    fn transport_plan_has_the_right_marginals(mu in measure(5), nu in measure(5)) {
        let sol = solve_ot(&mu, &nu, &euclidean_cost_matrix(&mu, &nu)).unwrap();
        prop_assert!(sol.plan.marginal_violation() <= 1e-12);
        prop_assert!((sol.dual_value() - sol.value.finite().unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn cycle_removal_is_idempotent_and_keeps_divergence(f in flux()) {
        let g = f.remove_cycles();
        prop_assert!(g.is_acyclic());
        prop_assert!(g.divergence().max_deviation(&f.divergence()) <= 1e-12);
        prop_assert!(g.remove_cycles().max_edge_deviation(&g) == 0.0);
        let tau = CostFunction::power(0.5).unwrap();
        prop_assert!(g.gilbert_energy(&tau) <= f.gilbert_energy(&tau) + 1e-12);
    }

    #[test]
    fn path_decomposition_reassembles(f in flux()) {
        let g = f.remove_cycles();
        let paths = g.decompose_paths().unwrap();
        let back = MassFlux::from_paths(&paths).unwrap();
        prop_assert!(back.max_edge_deviation(&g) <= 1e-9);
    }

    #[test]
    fn beckmann_flux_is_admissible_and_priced(
        ends in prop::collection::vec((point(), point(), 0.0..1.0f64), 1..=3),
        mu in measure(3),
        nu in measure(3),
    ) {
        let segs = ends.into_iter().map(|(p, q, b)| Street::new(p, q, b)).collect();
        let net = StreetNetwork::new(segs, Finite(1.0)).unwrap();
        let terms: Vec<_> = mu.points().chain(nu.points()).cloned().collect();
        let g = build_routing_graph(&net, &terms, 0).unwrap();
        let sol = solve_beckmann(&g, &mu, &nu).unwrap();
        prop_assert!(sol.flux.is_admissible(&mu, &nu, 1e-9));
        let priced = sol.flux.beckmann_energy(&net).unwrap();
        let value: ExtReal<f64> = sol.value;
        prop_assert!(priced.approx_eq(value, 1e-9), "{} vs {}", priced, value);
        // the urban metric never exceeds the ambient one
        prop_assert!(value <= Finite(w1(&mu, &nu) + 1e-12));
    }

    #[test]
    fn urban_distance_matches_path_cost(
        ends in prop::collection::vec((point(), point(), 0.0..2.0f64), 1..=4),
        x in point(),
        y in point(),
    ) {
        let segs = ends.into_iter().map(|(p, q, b)| Street::new(p, q, b)).collect();
        let net = StreetNetwork::new(segs, Finite(2.0)).unwrap();
        let g = build_routing_graph(&net, &[x.clone(), y.clone()], 1).unwrap();
        let route = g.urban_distance(&x, &y).unwrap();
        let l = net.path_length(&g.polyline(&route.nodes)).unwrap();
        prop_assert!(l.approx_eq(route.value, 1e-10), "{} vs {}", l, route.value);
    }
}
