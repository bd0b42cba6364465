use proptest::prelude::*;
use urbanbranch::cost::{CostFunction, Piece, PiecewiseTerm};
use urbanbranch::fixtures;
use urbanbranch::{Finite, PlusInfinity};

fn cost_strategy() -> impl Strategy<Value = CostFunction<f64>> {
    prop_oneof![
        (0.05..=1.0f64).prop_map(|a| CostFunction::power(a).unwrap()),
        (0.0..1.0f64, 0.1..2.0f64, 0.1..2.0f64)
            .prop_map(|(b, gap, c)| CostFunction::affine_capped(b + gap, b, c).unwrap()),
        (0.1..3.0f64).prop_map(|c| CostFunction::discrete(c).unwrap()),
        Just(fixtures::two_column_cost()),
        (0.0..1.0f64, 0.5..3.0f64).prop_map(|(j, s)| {
            CostFunction::piecewise(vec![
                PiecewiseTerm::new(0.0, Piece::Quadratic { c0: j, c1: 2.0 * s, c2: -s }),
                PiecewiseTerm::new(1.0, Piece::Affine { c0: j + s, c1: 0.0 }),
            ])
            .unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tau_is_nondecreasing_concave_and_subadditive(cost in cost_strategy(), m1 in 0.0..4.0f64, m2 in 0.0..4.0f64) {
        let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        prop_assert!(cost.value(lo) <= cost.value(hi) + 1e-12);
        let mid = cost.value(0.5 * (m1 + m2));
        if m1 > 0.0 && m2 > 0.0 {
            prop_assert!(mid + 1e-12 >= 0.5 * (cost.value(m1) + cost.value(m2)));
        }
        prop_assert!(cost.value(m1 + m2) <= cost.value(m1) + cost.value(m2) + 1e-12);
    }

    #[test]
    fn maintenance_is_convex_and_nonincreasing(cost in cost_strategy(), b1 in 0.01..3.0f64, b2 in 0.01..3.0f64) {
        let e = cost.maintenance();
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(e.eval(hi) <= e.eval(lo) + Finite(1e-12));
        if let (Finite(x), Finite(y)) = (e.eval(b1), e.eval(b2)) {
            let mid = e.eval(0.5 * (b1 + b2)).finite().unwrap();
            prop_assert!(mid <= 0.5 * (x + y) + 1e-12);
        }
    }

    #[test]
    fn fenchel_young_never_negative(cost in cost_strategy(), m in 0.0..5.0f64, b in 0.0..3.0f64) {
        if let Finite(r) = cost.fenchel_young_residual(m, b) {
            prop_assert!(r >= -1e-12);
        }
    }

    #[test]
    fn friction_closes_the_inequality(cost in cost_strategy(), m in 1e-3..5.0f64) {
        let b = cost.friction_from_mass(m).unwrap();
        prop_assert!(cost.fenchel_young_residual(m, b).finite().unwrap().abs() <= 1e-10);
    }

    #[test]
    fn maintenance_equals_jump_beyond_ambient(cost in cost_strategy(), extra in 0.0..2.0f64) {
        let e = cost.maintenance();
        prop_assert_eq!(e.ambient(), cost.tau_prime_zero());
        if let Finite(a) = e.ambient() {
            let v = e.eval(a + extra).finite().unwrap();
            prop_assert!((v - cost.jump_at_zero()).abs() <= 1e-10);
        }
    }

    #[test]
    fn removing_the_jump_shifts_maintenance(j in 0.0..1.0f64, s in 0.5..3.0f64, b in 0.01..3.0f64) {
        let cost = CostFunction::piecewise(vec![
            PiecewiseTerm::new(0.0, Piece::Quadratic { c0: j, c1: 2.0 * s, c2: -s }),
            PiecewiseTerm::new(1.0, Piece::Affine { c0: j + s, c1: 0.0 }),
        ]).unwrap();
        let smooth = cost.without_jump();
        prop_assert_eq!(smooth.jump_at_zero(), 0.0);
        prop_assert!((cost.value(0.7) - smooth.value(0.7) - j).abs() <= 1e-12);
        let (e, e0) = (cost.maintenance().eval(b), smooth.maintenance().eval(b));
        prop_assert!(e.approx_eq(e0 + j, 1e-10));
    }
}

#[test]
fn closed_forms_match_numeric_conjugates() {
    let costs = [
        CostFunction::power(0.5).unwrap(),
        CostFunction::power(0.8).unwrap(),
        CostFunction::linear(),
        CostFunction::affine_capped(1.0, 0.3, 0.5).unwrap(),
        CostFunction::discrete(1.5).unwrap(),
        fixtures::two_column_cost(),
    ];
    for cost in &costs {
        let e = cost.maintenance();
        for k in 1..=100 {
            let b = 0.02 * k as f64;
            let (closed, numeric) = (e.eval(b), e.eval_numeric(b));
            assert!(closed.approx_eq(numeric, 1e-8), "{:?} at b = {b}: {closed} vs {numeric}", cost.family());
        }
    }
}

#[test]
fn ambient_slope_is_derivative_at_zero() {
    assert_eq!(CostFunction::power(0.5).unwrap().tau_prime_zero(), PlusInfinity);
    assert_eq!(CostFunction::linear().tau_prime_zero(), Finite(1.0));
    assert_eq!(CostFunction::affine_capped(2.0, 0.5, 1.0).unwrap().tau_prime_zero(), Finite(2.0));
    assert_eq!(CostFunction::discrete(1.0).unwrap().tau_prime_zero(), PlusInfinity);
    assert_eq!(fixtures::two_column_cost::<f64>().tau_prime_zero(), Finite(1.0));
    // below the asymptotic slope the supremum is unbounded
    assert_eq!(CostFunction::linear().maintenance().eval(0.5), PlusInfinity);
}

#[test]
fn kink_maps_a_mass_interval_to_one_friction() {
    let cost = fixtures::two_column_cost::<f64>();
    for k in 0..=10 {
        let m = 0.4 + 0.02 * k as f64;
        let r = cost.fenchel_young_residual(m, 0.5).finite().unwrap();
        assert!(r.abs() <= 1e-12, "m = {m}: {r}");
    }
    assert!(cost.fenchel_young_residual(0.3, 0.5).finite().unwrap() > 1e-4);
    assert!(cost.fenchel_young_residual(0.7, 0.5).finite().unwrap() > 1e-4);
}

#[test]
fn step_cost_dominates_its_convex_envelope() {
    let cost = CostFunction::affine_capped(2.0, 0.5, 1.0).unwrap();
    let e = cost.maintenance();
    for k in 0..=30 {
        let b = 0.1 * k as f64;
        let (step, eps) = (cost.single_road_cost(b).unwrap(), e.eval(b));
        assert!(eps <= step, "b = {b}: {eps} > {step}");
        if b <= 0.5 || b >= 2.0 {
            assert!(eps.approx_eq(step, 1e-12), "b = {b}: {eps} vs {step}");
        }
    }
    // inside the interval eps interpolates linearly between c_bar and 0
    assert!(e.eval(1.25).approx_eq(Finite(0.5), 1e-12));
    assert_eq!(CostFunction::linear().single_road_cost(1.0), None);
}
