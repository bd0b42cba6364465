//! Passing between mass fluxes and street networks.
//!
//! * [`flux_to_urban`] builds roads along a flux with friction
//!   `b = tau'_+(m)`; the urban cost of that network is at most the flux's
//!   Gilbert energy.
//! * [`urban_to_flux`] routes the measures optimally through a network; by
//!   the edgewise Fenchel-Young inequality `tau(m) <= b m + eps(b)` the
//!   resulting flux costs at most the network's urban cost.
//!
//! Chaining both on an optimal flux gives `J* >= U >= J`, which collapses to
//! an equality at optimality. [`verify_equivalence`] runs that chain.

use serde::{Deserialize, Serialize};

use crate::branched::{solve_branched, BranchedConfig};
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::flow::{solve_beckmann, MassFlux};
use crate::measures::DiscreteMeasure;
use crate::network::{build_routing_graph, Street, StreetNetwork};
use crate::scalar::{ExtReal, Finite, PlusInfinity, Scalar};
use crate::transport::wasserstein_urban;

/// Slack allowed in the certified inequalities.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// `U[S, b] = W_d(mu_plus, mu_minus) + sum_seg eps(b_seg) |seg|`.
#[derive(Clone, Debug, Serialize)]
pub struct UrbanCost<T> {
    pub wasserstein: ExtReal<T>,
    pub maintenance: ExtReal<T>,
    pub total: ExtReal<T>,
}

pub fn urban_cost<T: Scalar>(
    net: &StreetNetwork<T>,
    cost: &CostFunction<T>,
    mu_plus: &DiscreteMeasure<T>,
    mu_minus: &DiscreteMeasure<T>,
    refinement: usize,
) -> Result<UrbanCost<T>> {
    let wasserstein = wasserstein_urban(net, mu_plus, mu_minus, refinement)?.value;
    let mc = cost.maintenance();
    let maintenance = net.segments().iter().map(|s| mc.eval(s.b).scale(s.length())).sum();
    Ok(UrbanCost { wasserstein, maintenance, total: wasserstein + maintenance })
}

#[derive(Clone, Debug, Serialize)]
pub struct UrbanCertificate<T> {
    /// Gilbert energy of the cycle-free flux.
    pub j: T,
    pub u: UrbanCost<T>,
    /// `tau(m_e) - b_e m_e - eps(b_e)` for every flux edge.
    pub residuals: Vec<T>,
    /// `U <= J + tol`.
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct FluxToUrban<T> {
    /// Roads along every edge of the cycle-free flux.
    pub full_network: StreetNetwork<T>,
    /// `full_network` without the roads whose friction equals `a`, which
    /// cost nothing to maintain and nothing to drop.
    pub network: StreetNetwork<T>,
    pub flux: MassFlux<T>,
    pub certificate: UrbanCertificate<T>,
}

/// Roads with friction `tau'_+(m_e)` along a flux, after removing its
/// cycles. With `prune`, roads with `b = a` are left out of `network`.
pub fn flux_to_urban<T: Scalar>(f: &MassFlux<T>, cost: &CostFunction<T>, prune: bool) -> Result<FluxToUrban<T>> {
    let flux = f.remove_cycles();
    let j = flux.gilbert_energy(cost);
    if !j.is_finite() {
        return Err(Error::InfiniteEnergy);
    }
    let a = cost.tau_prime_zero();
    let mc = cost.maintenance();
    let mut streets = Vec::with_capacity(flux.edges().len());
    let mut residuals = Vec::with_capacity(flux.edges().len());
    for e in flux.edges() {
        let b = cost.friction_from_mass(e.mass)?;
        residuals.push(match mc.eval(b) {
            Finite(eps) => cost.value(e.mass) - b * e.mass - eps,
            PlusInfinity => T::infinity(),
        });
        streets.push(Street::new(e.tail.clone(), e.head.clone(), b));
    }
    let full_network = StreetNetwork::new(streets.clone(), a)?;
    let kept = if prune { streets.into_iter().filter(|s| Finite(s.b) < a).collect() } else { streets };
    let network = StreetNetwork::new(kept, a)?;

    let div = flux.divergence();
    let (mu_plus, mu_minus) = (div.positive_part(), div.negative_part());
    let u = urban_cost(&network, cost, &mu_plus, &mu_minus, 0)?;
    let slack = T::lit(CERTIFICATE_TOL);
    let holds = u.total <= Finite(j + slack);
    Ok(FluxToUrban { full_network, network, flux, certificate: UrbanCertificate { j, u, residuals, holds } })
}

#[derive(Clone, Debug, Serialize)]
pub struct FluxCertificate<T> {
    pub j: T,
    pub u: UrbanCost<T>,
    /// `J <= U + tol`.
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct UrbanToFlux<T> {
    pub flux: MassFlux<T>,
    pub certificate: FluxCertificate<T>,
}

/// Optimal routing of `mu_plus` onto `mu_minus` through `net`, returned as
/// a cycle-free flux. The network's ambient cost must be `tau'(0)`.
pub fn urban_to_flux<T: Scalar>(
    net: &StreetNetwork<T>,
    cost: &CostFunction<T>,
    mu_plus: &DiscreteMeasure<T>,
    mu_minus: &DiscreteMeasure<T>,
    refinement: usize,
) -> Result<UrbanToFlux<T>> {
    let a = cost.tau_prime_zero();
    let tol = T::lit(1e-12) * (T::one() + a.to_float().abs().min(T::max_value()));
    if !net.ambient().approx_eq(a, tol) {
        return Err(Error::AmbientCostMismatch { network: net.ambient().to_string(), cost: a.to_string() });
    }
    let terminals: Vec<_> = mu_plus.points().chain(mu_minus.points()).cloned().collect();
    let graph = build_routing_graph(net, &terminals, refinement)?;
    let sol = solve_beckmann(&graph, mu_plus, mu_minus)?;
    if sol.value.is_infinite() {
        return Err(Error::Infeasible);
    }
    let flux = sol.flux.remove_cycles();
    let j = flux.gilbert_energy(cost);
    let u = urban_cost(net, cost, mu_plus, mu_minus, refinement)?;
    let holds = Finite(j) <= u.total + Finite(T::lit(CERTIFICATE_TOL));
    Ok(UrbanToFlux { flux, certificate: FluxCertificate { j, u, holds } })
}

/// Input of [`verify_equivalence`] and of the command line tool.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Scenario<T> {
    pub tau: CostFunction<T>,
    pub mu_plus: DiscreteMeasure<T>,
    pub mu_minus: DiscreteMeasure<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<StreetNetwork<T>>,
    /// Candidate flux used instead of the branched solver's output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<MassFlux<T>>,
    #[serde(default)]
    pub config: BranchedConfig,
    #[serde(default)]
    pub refinement: usize,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(tau: CostFunction<T>, mu_plus: DiscreteMeasure<T>, mu_minus: DiscreteMeasure<T>) -> Self {
        Scenario { tau, mu_plus, mu_minus, network: None, flux: None, config: BranchedConfig::default(), refinement: 0 }
    }
}

/// Largest spread among the three values for a pass.
pub const EQUIVALENCE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport<T> {
    #[serde(rename = "J_star")]
    pub j_star: T,
    #[serde(rename = "U")]
    pub u: ExtReal<T>,
    #[serde(rename = "J_roundtrip")]
    pub j_roundtrip: T,
    /// `J_star >= U >= J_roundtrip` up to [`CERTIFICATE_TOL`].
    pub ordered: bool,
    /// Largest minus smallest of the three values.
    pub spread: ExtReal<T>,
    /// `J_star` comes from an exhaustive tree enumeration, so the three
    /// values must agree up to [`EQUIVALENCE_TOL`].
    pub equality_required: bool,
    /// `ordered`, and a small `spread` when equality is required.
    pub pass: bool,
    /// Fenchel-Young residuals of the constructed roads.
    pub residuals: Vec<T>,
    #[serde(skip)]
    pub flux: MassFlux<T>,
    #[serde(skip)]
    pub network: StreetNetwork<T>,
    #[serde(skip)]
    pub roundtrip_flux: MassFlux<T>,
}

/// Solves (or takes) a flux, turns it into a network, routes the measures
/// back through that network and compares the three energies.
pub fn verify_equivalence<T: Scalar>(scenario: &Scenario<T>) -> Result<EquivalenceReport<T>> {
    let cost = &scenario.tau;
    let (flux, j_star, equality_required) = match &scenario.flux {
        Some(f) => {
            if !f.is_admissible(&scenario.mu_plus, &scenario.mu_minus, T::lit(1e-10)) {
                return Err(Error::InvalidFlux("candidate flux does not move mu_plus onto mu_minus".into()));
            }
            (f.clone(), f.gilbert_energy(cost), false)
        }
        None => {
            let sol = solve_branched(&scenario.mu_plus, &scenario.mu_minus, cost, &scenario.config)?;
            (sol.flux, sol.value, sol.exhaustive)
        }
    };
    let forward = flux_to_urban(&flux, cost, true)?;
    let back = urban_to_flux(&forward.network, cost, &scenario.mu_plus, &scenario.mu_minus, scenario.refinement)?;
    let u = forward.certificate.u.total;
    let j_rt = back.certificate.j;
    let (ordered, spread) = match u {
        Finite(u) => {
            let slack = T::lit(CERTIFICATE_TOL);
            let ordered = j_star + slack >= u && u + slack >= j_rt;
            (ordered, Finite(j_star.max(u).max(j_rt) - j_star.min(u).min(j_rt)))
        }
        PlusInfinity => (false, PlusInfinity),
    };
    let pass = ordered && (!equality_required || spread <= Finite(T::lit(EQUIVALENCE_TOL)));
    Ok(EquivalenceReport {
        j_star,
        u,
        j_roundtrip: j_rt,
        ordered,
        spread,
        equality_required,
        pass,
        residuals: forward.certificate.residuals,
        flux,
        network: forward.network,
        roundtrip_flux: back.flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FluxEdge;
    use crate::geometry::Point;

    #[test]
    fn single_pair_picks_zero_friction() {
        let (cost, mu, nu) = crate::fixtures::single_pair(2.0_f64);
        let f = MassFlux::new(vec![FluxEdge::new(Point::xy(0.0, 0.0), Point::xy(2.0, 0.0), 1.0)]).unwrap();
        let out = flux_to_urban(&f, &cost, true).unwrap();
        assert_eq!(out.network.segments().len(), 1);
        assert_eq!(out.network.segments()[0].b, 0.0);
        assert_eq!(out.certificate.u.total, Finite(2.0));
        assert!(out.certificate.holds);

        let net = crate::fixtures::single_pair_network(2.0, 0.3);
        let back = urban_to_flux(&net, &cost, &mu, &nu, 0).unwrap();
        assert_eq!(back.flux.edges().len(), 1);
        assert!((back.certificate.j - 2.0).abs() < 1e-15);
        assert!((back.certificate.u.total.finite().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_column_prunes_the_diagonals() {
        let s = crate::fixtures::two_column(2.0_f64);
        let out = flux_to_urban(&s.left_flux(), &s.cost, true).unwrap();
        assert_eq!(out.full_network.segments().len(), 4);
        let kept = out.network.segments();
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|seg| seg.b == 0.5 && seg.p.0[0] == seg.q.0[0]));
        assert!(out.certificate.residuals.iter().all(|r| r.abs() < 1e-10));
        let u = out.certificate.u.total.finite().unwrap();
        assert!((u - s.optimal_value()).abs() < 1e-12, "{u}");
    }

    #[test]
    fn zero_flux() {
        let out = flux_to_urban(&MassFlux::<f64>::empty(), &CostFunction::linear(), true).unwrap();
        assert!(out.network.segments().is_empty());
        assert_eq!(out.certificate.u.total, Finite(0.0));
    }

    #[test]
    fn empty_network_routes_straight() {
        let cost = CostFunction::power(0.5).unwrap();
        let (_, mu, nu) = crate::fixtures::single_pair(2.0_f64);
        // sqrt has infinite slope at zero
        let err = urban_to_flux(&StreetNetwork::empty(Finite(1.0)), &cost, &mu, &nu, 0).unwrap_err();
        assert!(matches!(err, Error::AmbientCostMismatch { .. }));
        let lin = CostFunction::affine_capped(2.0, 1.0, 1.0).unwrap();
        let back = urban_to_flux(&StreetNetwork::empty(Finite(2.0)), &lin, &mu, &nu, 0).unwrap();
        assert_eq!(back.flux.edges().len(), 1);
        assert!((back.certificate.j - 4.0).abs() < 1e-12);
        assert_eq!(back.certificate.u.total, Finite(4.0));
    }

    #[test]
    fn report_json_keys() {
        let (cost, mu, nu) = crate::fixtures::single_pair(2.0_f64);
        let report = verify_equivalence(&Scenario::new(cost, mu, nu)).unwrap();
        assert!(report.pass && report.equality_required);
        let v = serde_json::to_value(&report).unwrap();
        for key in ["J_star", "U", "J_roundtrip", "ordered", "spread", "equality_required", "pass", "residuals"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn suboptimal_candidate_only_needs_the_inequalities() {
        let (_, mu, nu) = crate::fixtures::single_pair(2.0_f64);
        let cost = CostFunction::linear();
        let detour = MassFlux::new(vec![
            FluxEdge::new(Point::xy(0.0, 0.0), Point::xy(1.0, 1.0), 1.0),
            FluxEdge::new(Point::xy(1.0, 1.0), Point::xy(2.0, 0.0), 1.0),
        ])
        .unwrap();
        let mut scenario = Scenario::new(cost, mu, nu);
        scenario.flux = Some(detour);
        let report = verify_equivalence(&scenario).unwrap();
        assert!(report.ordered && !report.equality_required && report.pass);
        assert!((report.j_star - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((report.j_roundtrip - 2.0).abs() < 1e-12);
        assert!(report.spread > Finite(0.8));
    }
}
