//! Optimal transport between discrete measures.

use crate::error::{Error, Result};
use crate::mcf::MinCostFlow;
use crate::measures::{DiscreteMeasure, TransportPlan};
use crate::network::{build_routing_graph, RoutingGraph, StreetNetwork};
use crate::scalar::{ExtReal, Finite, PlusInfinity, Scalar};

/// An optimal coupling together with a dual certificate.
#[derive(Clone, Debug)]
pub struct OtSolution<T> {
    pub plan: TransportPlan<T>,
    pub value: ExtReal<T>,
    /// Kantorovich potentials `(f, g)` with `f_i + g_j <= c_ij` and
    /// `sum f_i mu_i + sum g_j nu_j = value`; empty when infeasible.
    pub source_potential: Vec<T>,
    pub target_potential: Vec<T>,
}

impl<T: Scalar> OtSolution<T> {
    /// Value of the dual objective for the stored potentials.
    pub fn dual_value(&self) -> T {
        let src = self.plan.source().atoms().iter().zip(&self.source_potential);
        let tgt = self.plan.target().atoms().iter().zip(&self.target_potential);
        src.map(|(a, f)| a.mass * *f).sum::<T>() + tgt.map(|(a, g)| a.mass * *g).sum::<T>()
    }
}

/// Solves the transportation problem for the cost matrix `cost[i][j]`
/// between atom `i` of `mu_plus` and atom `j` of `mu_minus`.
///
/// Infinite entries are left out of the flow network. When no finite-cost
/// coupling exists the value is `+inf` and the plan is the product coupling.
pub fn solve_ot<T: Scalar>(
    mu_plus: &DiscreteMeasure<T>,
    mu_minus: &DiscreteMeasure<T>,
    cost: &[Vec<ExtReal<T>>],
) -> Result<OtSolution<T>> {
    let (n, m) = (mu_plus.len(), mu_minus.len());
    if cost.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cost.len() });
    }
    if let Some(row) = cost.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, found: row.len() });
    }
    let (tp, tm) = (mu_plus.total_mass(), mu_minus.total_mass());
    if (tp - tm).abs() > T::normalization_tol() {
        return Err(Error::MassMismatch(tp.to_f64().unwrap_or(f64::NAN), tm.to_f64().unwrap_or(f64::NAN)));
    }
    if n == 0 || m == 0 {
        let plan = TransportPlan::new(mu_plus.clone(), mu_minus.clone(), vec![vec![T::zero(); m]; n])?;
        return Ok(OtSolution {
            plan,
            value: ExtReal::zero(),
            source_potential: vec![T::zero(); n],
            target_potential: vec![T::zero(); m],
        });
    }

    let mut graph = MinCostFlow::new(n + m);
    let mut arcs = Vec::new();
    for (i, row) in cost.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if let Finite(c) = *c {
                if !(c >= T::zero()) {
                    return Err(Error::InvalidConfig(format!("negative cost {c} at ({i}, {j})")));
                }
                arcs.push((i, j, graph.add_arc(i, n + j, None, c)));
            }
        }
    }
    let supply: Vec<T> = mu_plus
        .atoms()
        .iter()
        .map(|a| a.mass)
        .chain(mu_minus.atoms().iter().map(|a| -a.mass * tp / tm))
        .collect();
    let sol = graph.solve(&supply);
    if !sol.feasible {
        let weights = mu_plus
            .atoms()
            .iter()
            .map(|a| mu_minus.atoms().iter().map(|b| a.mass * b.mass / tm).collect())
            .collect();
        return Ok(OtSolution {
            plan: TransportPlan::new(mu_plus.clone(), mu_minus.clone(), weights)?,
            value: PlusInfinity,
            source_potential: Vec::new(),
            target_potential: Vec::new(),
        });
    }
    let mut weights = vec![vec![T::zero(); m]; n];
    for &(i, j, a) in &arcs {
        weights[i][j] = sol.flows[a];
    }
    let plan = TransportPlan::new(mu_plus.clone(), mu_minus.clone(), weights)?;
    let value = plan.cost(cost)?;
    let p = &sol.potentials;
    Ok(OtSolution {
        plan,
        value,
        source_potential: (0..n).map(|i| -p[i]).collect(),
        target_potential: (0..m).map(|j| p[n + j]).collect(),
    })
}

/// Matrix of discrete urban distances between the atoms of two measures.
pub fn urban_cost_matrix<T: Scalar>(
    graph: &RoutingGraph<T>,
    mu_plus: &DiscreteMeasure<T>,
    mu_minus: &DiscreteMeasure<T>,
) -> Result<Vec<Vec<ExtReal<T>>>> {
    let targets = mu_minus
        .points()
        .map(|p| graph.node_index(p).ok_or(Error::UnknownNode))
        .collect::<Result<Vec<_>>>()?;
    mu_plus
        .points()
        .map(|p| {
            let src = graph.node_index(p).ok_or(Error::UnknownNode)?;
            let (dist, _) = graph.distances_from(src);
            Ok(targets.iter().map(|&j| dist[j]).collect())
        })
        .collect()
}

/// Result of [`wasserstein_urban`].
#[derive(Clone, Debug)]
pub struct UrbanWasserstein<T> {
    pub value: ExtReal<T>,
    pub solution: OtSolution<T>,
    pub graph: RoutingGraph<T>,
    pub cost_matrix: Vec<Vec<ExtReal<T>>>,
}

/// `W_{d_{S,a,b}}(mu_plus, mu_minus)` on the routing graph of refinement `k`.
pub fn wasserstein_urban<T: Scalar>(
    net: &StreetNetwork<T>,
    mu_plus: &DiscreteMeasure<T>,
    mu_minus: &DiscreteMeasure<T>,
    refinement: usize,
) -> Result<UrbanWasserstein<T>> {
    let terminals: Vec<_> = mu_plus.points().chain(mu_minus.points()).cloned().collect();
    let graph = build_routing_graph(net, &terminals, refinement)?;
    let cost_matrix = urban_cost_matrix(&graph, mu_plus, mu_minus)?;
    let solution = solve_ot(mu_plus, mu_minus, &cost_matrix)?;
    Ok(UrbanWasserstein { value: solution.value, solution, graph, cost_matrix })
}

/// Euclidean cost matrix `|x_i - y_j|`.
pub fn euclidean_cost_matrix<T: Scalar>(mu_plus: &DiscreteMeasure<T>, mu_minus: &DiscreteMeasure<T>) -> Vec<Vec<ExtReal<T>>> {
    mu_plus
        .points()
        .map(|x| mu_minus.points().map(|y| Finite(x.dist(y))).collect())
        .collect()
}
