//! The bundled reference instances behind `verify --fixtures`.

use serde::Serialize;
use urbanbranch::fixtures;
use urbanbranch::network::build_routing_graph;
use urbanbranch::{
    solve_beckmann, solve_branched, urban_cost, verify_equivalence, wasserstein_urban, BranchedConfig, CostFunction,
    Finite, PlusInfinity, Result, Scenario, StreetNetwork,
};

use crate::ext;
use crate::output::fmt;

pub const NAMES: [&str; 5] = ["conjugate", "diamond", "two-column", "single-pair", "staircase"];

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Check { name: name.into(), pass, detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub fn run(name: &str) -> Result<Check> {
    match name {
        "conjugate" => conjugate(),
        "diamond" => diamond(),
        "two-column" => two_column(),
        "single-pair" => single_pair(),
        "staircase" => staircase(),
        _ => unreachable!("fixture names are validated by the argument parser"),
    }
}

fn conjugate() -> Result<Check> {
    let mc = fixtures::two_column_cost::<f64>().maintenance();
    let half = CostFunction::power(0.5)?.maintenance();
    let mut worst = 0.0f64;
    for k in 1..=50 {
        let b = 0.03 * k as f64;
        let got = mc.eval(b).finite().unwrap_or(f64::INFINITY);
        worst = worst.max((got - fixtures::two_column_epsilon(b)).abs());
        let got = half.eval(b).finite().unwrap_or(f64::INFINITY);
        worst = worst.max((got - 1.0 / (4.0 * b)).abs());
    }
    Ok(Check::new("conjugate", worst <= 1e-8, format!("max error {} over 100 values", fmt(worst))))
}

fn diamond() -> Result<Check> {
    let (mu, nu) = fixtures::diamond_measures::<f64>();
    let w = wasserstein_urban(&StreetNetwork::empty(Finite(1.0)), &mu, &nu, 0)?.value;
    let report = verify_equivalence(&Scenario::new(CostFunction::linear(), mu, nu))?;
    let ok = w.approx_eq(Finite(2f64.sqrt()), 1e-9) && report.pass;
    Ok(Check::new("diamond", ok, format!("W = {}, J* = {}, U = {}", ext(w), fmt(report.j_star), ext(report.u))))
}

fn two_column() -> Result<Check> {
    let s = fixtures::two_column(2.0_f64);
    let mut scenario = Scenario::new(s.cost.clone(), s.mu_plus.clone(), s.mu_minus.clone());
    scenario.config = BranchedConfig { report_ties: true, ..Default::default() };
    let sol = solve_branched(&s.mu_plus, &s.mu_minus, &s.cost, &scenario.config)?;
    let report = verify_equivalence(&scenario)?;
    let ok = (sol.value - s.optimal_value()).abs() <= 1e-6 && sol.ties.len() == 2 && report.pass;
    Ok(Check::new(
        "two-column",
        ok,
        format!("J* = {}, {} tied optima, U = {}, J roundtrip = {}", fmt(sol.value), sol.ties.len(), ext(report.u), fmt(report.j_roundtrip)),
    ))
}

fn single_pair() -> Result<Check> {
    let (cost, mu, nu) = fixtures::single_pair(2.0_f64);
    let mut ok = true;
    for b in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let u = urban_cost(&fixtures::single_pair_network(2.0, b), &cost, &mu, &nu, 0)?.total;
        ok &= u.approx_eq(Finite(2.0), 1e-10);
    }
    let report = verify_equivalence(&Scenario::new(cost, mu, nu))?;
    ok &= report.pass;
    Ok(Check::new("single-pair", ok, "U = 2 for b in {0, 0.25, 0.5, 0.75, 1}, round trip closes".into()))
}

fn staircase() -> Result<Check> {
    let mut last = f64::INFINITY;
    let mut ok = true;
    for j in 2..=20 {
        let (net, mu, nu) = fixtures::v_staircase::<f64>(j, PlusInfinity);
        let terms: Vec<_> = mu.points().chain(nu.points()).cloned().collect();
        let v = solve_beckmann(&build_routing_graph(&net, &terms, 0)?, &mu, &nu)?.value.finite().unwrap_or(f64::INFINITY);
        ok &= (v - fixtures::v_staircase_value(j)).abs() <= 1e-8 && v < last && v > 1.0;
        last = v;
    }
    Ok(Check::new("staircase", ok, format!("values decrease to {} at j = 20, never 1", fmt(last))))
}
