//! Polyhedral mass fluxes.
//!
//! A flux is a finite list of oriented straight edges carrying positive
//! mass. Its divergence is `sum_e m_e (delta_tail - delta_head)`, so a flux
//! transports `mu_+` onto `mu_-` exactly when its divergence is
//! `mu_+ - mu_-`.

use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mcf::MinCostFlow;
use crate::measures::{Atom, DiscreteMeasure, SignedDiscreteMeasure};
use crate::network::{Placement, RoutingGraph, StreetNetwork};
use crate::scalar::{ExtReal, Finite, PlusInfinity, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxEdge<T> {
    pub tail: Point<T>,
    pub head: Point<T>,
    #[serde(rename = "m")]
    pub mass: T,
}

impl<T: Scalar> FluxEdge<T> {
    pub fn new(tail: Point<T>, head: Point<T>, mass: T) -> Self {
        FluxEdge { tail, head, mass }
    }

    pub fn length(&self) -> T {
        self.tail.dist(&self.head)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FluxSpec<T> {
    pub edges: Vec<FluxEdge<T>>,
}

/// A canonical polyhedral mass flux: positive masses, no zero-length edges,
/// at most one edge per unordered vertex pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "FluxSpec<T>",
    into = "FluxSpec<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct MassFlux<T> {
    edges: Vec<FluxEdge<T>>,
}

impl<T: Scalar> TryFrom<FluxSpec<T>> for MassFlux<T> {
    type Error = Error;
    fn try_from(spec: FluxSpec<T>) -> Result<Self> {
        MassFlux::new(spec.edges)
    }
}

impl<T> From<MassFlux<T>> for FluxSpec<T> {
    fn from(f: MassFlux<T>) -> Self {
        FluxSpec { edges: f.edges }
    }
}

/// Vertex identification by snapping.
struct Vertices<T> {
    points: Vec<Point<T>>,
}

impl<T: Scalar> Vertices<T> {
    fn new() -> Self {
        Vertices { points: Vec::new() }
    }

    fn id(&mut self, p: &Point<T>) -> usize {
        let snap = T::geometry_snap();
        match self.points.iter().position(|q| q.dist(p) <= snap) {
            Some(i) => i,
            None => {
                self.points.push(p.clone());
                self.points.len() - 1
            }
        }
    }
}

/// Vertex/edge incidence of a flux.
pub(crate) struct Topology<T> {
    pub points: Vec<Point<T>>,
    /// `(tail, head)` vertex ids per edge
    pub ends: Vec<(usize, usize)>,
}

/// One path of a flux decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxPath<T> {
    pub points: Vec<Point<T>>,
    pub weight: T,
    /// Indices into the decomposed flux's edge list.
    pub edges: Vec<usize>,
}

impl<T: Scalar> MassFlux<T> {
    /// Canonicalises an edge list: antiparallel edges are netted, parallel
    /// ones summed, zero-length and zero-mass edges dropped, and every
    /// remaining edge oriented along its (positive) mass.
    pub fn new(edges: Vec<FluxEdge<T>>) -> Result<Self> {
        let mut dim = None;
        for e in &edges {
            if !(e.tail.is_finite() && e.head.is_finite() && e.mass.is_finite()) {
                return Err(Error::InvalidFlux("non-finite edge".into()));
            }
            if e.tail.dim() != e.head.dim() || dim.is_some_and(|d| d != e.tail.dim()) {
                return Err(Error::DimensionMismatch { expected: dim.unwrap_or(e.tail.dim()), found: e.head.dim() });
            }
            dim = Some(e.tail.dim());
        }
        let mut verts = Vertices::new();
        let mut slots: Vec<((usize, usize), FluxEdge<T>)> = Vec::new();
        for e in edges {
            let (u, v) = (verts.id(&e.tail), verts.id(&e.head));
            if u == v {
                continue;
            }
            match slots.iter_mut().find(|(k, _)| *k == (u, v) || *k == (v, u)) {
                Some(((a, _), slot)) => {
                    if *a == u {
                        slot.mass = slot.mass + e.mass;
                    } else {
                        slot.mass = slot.mass - e.mass;
                    }
                }
                None => slots.push(((u, v), e)),
            }
        }
        let tol = T::mass_tol();
        let edges = slots
            .into_iter()
            .filter_map(|(_, mut e)| {
                if e.mass.abs() <= tol {
                    return None;
                }
                if e.mass < T::zero() {
                    std::mem::swap(&mut e.tail, &mut e.head);
                    e.mass = -e.mass;
                }
                Some(e)
            })
            .collect();
        Ok(MassFlux { edges })
    }

    pub fn empty() -> Self {
        MassFlux { edges: Vec::new() }
    }

    pub fn edges(&self) -> &[FluxEdge<T>] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub(crate) fn topology(&self) -> Topology<T> {
        let mut verts = Vertices::new();
        let ends = self.edges.iter().map(|e| (verts.id(&e.tail), verts.id(&e.head))).collect();
        Topology { points: verts.points, ends }
    }

    /// `sum_e m_e (delta_tail - delta_head)`.
    pub fn divergence(&self) -> SignedDiscreteMeasure<T> {
        let topo = self.topology();
        let mut net = vec![T::zero(); topo.points.len()];
        for (e, &(u, v)) in self.edges.iter().zip(&topo.ends) {
            net[u] = net[u] + e.mass;
            net[v] = net[v] - e.mass;
        }
        SignedDiscreteMeasure::new(topo.points.into_iter().zip(net).map(|(p, m)| Atom::new(p, m)).collect())
    }

    /// `div F = mu_+ - mu_-` to within `tol` per atom.
    pub fn is_admissible(&self, mu_plus: &DiscreteMeasure<T>, mu_minus: &DiscreteMeasure<T>, tol: T) -> bool {
        self.divergence().max_deviation(&mu_plus.minus(mu_minus)) <= tol
    }

    /// Branched transport cost `sum_e tau(m_e) |e|`.
    pub fn gilbert_energy(&self, cost: &CostFunction<T>) -> T {
        self.edges.iter().map(|e| cost.value(e.mass) * e.length()).sum()
    }

    /// `int_S b |xi| dH^1 + a |F_perp|` for the given network.
    pub fn beckmann_energy(&self, net: &StreetNetwork<T>) -> Result<ExtReal<T>> {
        let mut total = ExtReal::zero();
        for (i, e) in self.edges.iter().enumerate() {
            let rate = match net.placement(&e.tail, &e.head) {
                Placement::OnNetwork { b, .. } => Finite(b),
                Placement::OffNetwork => net.ambient(),
                Placement::Straddling => return Err(Error::UnclassifiableEdge(i)),
            };
            total += rate.scale(e.mass * e.length());
        }
        Ok(total)
    }

    /// Per-edge `(length, mass, unit cost)` rows; unit cost needs a network.
    pub fn edge_table(&self, net: Option<&StreetNetwork<T>>) -> Vec<EdgeRecord<T>> {
        self.edges
            .iter()
            .map(|e| {
                let unit_cost = net.map(|n| match n.placement(&e.tail, &e.head) {
                    Placement::OnNetwork { b, .. } => Finite(b),
                    Placement::OffNetwork => n.ambient(),
                    Placement::Straddling => PlusInfinity,
                });
                EdgeRecord { tail: e.tail.clone(), head: e.head.clone(), length: e.length(), mass: e.mass, unit_cost }
            })
            .collect()
    }

    /// Finds one directed cycle, as edge indices in traversal order.
    fn find_cycle(&self, topo: &Topology<T>, alive: &[bool]) -> Option<Vec<usize>> {
        let n = topo.points.len();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, &(u, _)) in topo.ends.iter().enumerate() {
            if alive[i] {
                out[u].push(i);
            }
        }
        // 0 = unseen, 1 = on stack, 2 = finished
        let mut state = vec![0u8; n];
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            let mut via: Vec<usize> = Vec::new();
            state[root] = 1;
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if let Some(&e) = out[u].get(*next) {
                    *next += 1;
                    let v = topo.ends[e].1;
                    match state[v] {
                        0 => {
                            state[v] = 1;
                            via.push(e);
                            stack.push((v, 0));
                        }
                        1 => {
                            let start = stack.iter().position(|&(w, _)| w == v).expect("on stack");
                            let mut cycle = via[start..].to_vec();
                            cycle.push(e);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[u] = 2;
                    stack.pop();
                    via.pop();
                }
            }
        }
        None
    }

    pub fn is_acyclic(&self) -> bool {
        let topo = self.topology();
        self.find_cycle(&topo, &vec![true; self.edges.len()]).is_none()
    }

    /// Removes divergence-free circulation by cancelling directed cycles at
    /// their bottleneck mass. Acyclic fluxes are returned unchanged.
    pub fn remove_cycles(&self) -> MassFlux<T> {
        let topo = self.topology();
        let mut masses: Vec<T> = self.edges.iter().map(|e| e.mass).collect();
        let mut alive = vec![true; masses.len()];
        let mut changed = false;
        let tol = T::mass_tol();
        while let Some(cycle) = self.find_cycle(&topo, &alive) {
            changed = true;
            let bottleneck = cycle.iter().map(|&e| masses[e]).fold(T::infinity(), T::min);
            for &e in &cycle {
                masses[e] = masses[e] - bottleneck;
                if masses[e] <= tol {
                    alive[e] = false;
                }
            }
        }
        if !changed {
            return self.clone();
        }
        let edges = self
            .edges
            .iter()
            .zip(masses)
            .zip(alive)
            .filter(|(_, keep)| *keep)
            .map(|((e, m), _)| FluxEdge::new(e.tail.clone(), e.head.clone(), m))
            .collect();
        MassFlux { edges }
    }

    /// Splits an acyclic flux into weighted source-to-sink paths.
    pub fn decompose_paths(&self) -> Result<Vec<FluxPath<T>>> {
        let topo = self.topology();
        if self.find_cycle(&topo, &vec![true; self.edges.len()]).is_some() {
            return Err(Error::CyclicFlux);
        }
        let n = topo.points.len();
        let mut remaining: Vec<T> = self.edges.iter().map(|e| e.mass).collect();
        let mut excess = vec![T::zero(); n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, &(u, v)) in topo.ends.iter().enumerate() {
            excess[u] = excess[u] + remaining[i];
            excess[v] = excess[v] - remaining[i];
            out[u].push(i);
        }
        let scale = remaining.iter().copied().fold(T::zero(), T::max);
        let tol = T::mass_tol() * (T::one() + scale) * T::lit(16.0);
        let mut paths = Vec::new();
        for source in 0..n {
            while excess[source] > tol {
                let mut edges = Vec::new();
                let mut v = source;
                let mut weight = excess[source];
                while let Some(&e) = out[v].iter().find(|&&e| remaining[e] > tol) {
                    weight = weight.min(remaining[e]);
                    edges.push(e);
                    v = topo.ends[e].1;
                }
                if edges.is_empty() {
                    break;
                }
                weight = weight.min(-excess[v]);
                if !(weight > T::zero()) {
                    break;
                }
                for &e in &edges {
                    remaining[e] = remaining[e] - weight;
                }
                excess[source] = excess[source] - weight;
                excess[v] = excess[v] + weight;
                let mut points = vec![topo.points[source].clone()];
                points.extend(edges.iter().map(|&e| topo.points[topo.ends[e].1].clone()));
                paths.push(FluxPath { points, weight, edges });
            }
        }
        Ok(paths)
    }

    /// Superposes weighted polylines into a flux.
    pub fn from_paths(paths: &[FluxPath<T>]) -> Result<Self> {
        let edges = paths
            .iter()
            .flat_map(|p| p.points.windows(2).map(move |w| FluxEdge::new(w[0].clone(), w[1].clone(), p.weight)))
            .collect();
        MassFlux::new(edges)
    }

    /// Largest difference in per-edge mass against another flux, matching
    /// edges by their endpoints.
    pub fn max_edge_deviation(&self, other: &Self) -> T {
        let negated = other.edges.iter().map(|e| FluxEdge::new(e.tail.clone(), e.head.clone(), -e.mass));
        let diff = MassFlux::new(self.edges.iter().cloned().chain(negated).collect()).expect("finite");
        diff.edges.iter().map(|e| e.mass).fold(T::zero(), T::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeRecord<T> {
    pub tail: Point<T>,
    pub head: Point<T>,
    pub length: T,
    pub mass: T,
    pub unit_cost: Option<ExtReal<T>>,
}

/// Minimiser of the linear Beckmann problem on a routing graph.
#[derive(Clone, Debug)]
pub struct BeckmannSolution<T> {
    pub flux: MassFlux<T>,
    pub value: ExtReal<T>,
    /// Signed flow per routing edge, positive in the `u -> v` direction.
    pub edge_flows: Vec<T>,
}

/// Minimises `sum_e unit_cost |e| |flow_e|` over graph flows with
/// divergence `mu_plus - mu_minus`; an infeasible instance yields `+inf`
/// and an empty flux.
pub fn solve_beckmann<T: Scalar>(
    graph: &RoutingGraph<T>,
    mu_plus: &DiscreteMeasure<T>,
    mu_minus: &DiscreteMeasure<T>,
) -> Result<BeckmannSolution<T>> {
    let (tp, tm) = (mu_plus.total_mass(), mu_minus.total_mass());
    if (tp - tm).abs() > T::normalization_tol() {
        return Err(Error::MassMismatch(tp.to_f64().unwrap_or(f64::NAN), tm.to_f64().unwrap_or(f64::NAN)));
    }
    let n = graph.nodes().len();
    let mut supply = vec![T::zero(); n];
    for a in mu_plus.atoms() {
        let i = graph.node_index(&a.point).ok_or(Error::UnknownNode)?;
        supply[i] = supply[i] + a.mass;
    }
    for a in mu_minus.atoms() {
        let i = graph.node_index(&a.point).ok_or(Error::UnknownNode)?;
        supply[i] = supply[i] - a.mass * tp / tm;
    }
    let mut mcf = MinCostFlow::new(n);
    let arcs: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .map(|e| (mcf.add_arc(e.u, e.v, None, e.cost()), mcf.add_arc(e.v, e.u, None, e.cost())))
        .collect();
    let sol = mcf.solve(&supply);
    if !sol.feasible {
        return Ok(BeckmannSolution { flux: MassFlux::empty(), value: PlusInfinity, edge_flows: vec![T::zero(); arcs.len()] });
    }
    let edge_flows: Vec<T> = arcs.iter().map(|&(f, b)| sol.flows[f] - sol.flows[b]).collect();
    let value = graph
        .edges()
        .iter()
        .zip(&edge_flows)
        .map(|(e, f)| e.cost() * f.abs())
        .sum();
    let flux = MassFlux::new(
        graph
            .edges()
            .iter()
            .zip(&edge_flows)
            .filter(|(_, f)| f.abs() > T::mass_tol())
            .map(|(e, &f)| FluxEdge::new(graph.point(e.u).clone(), graph.point(e.v).clone(), f))
            .collect(),
    )?;
    Ok(BeckmannSolution { flux, value: Finite(value), edge_flows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_routing_graph, Street};

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::xy(x, y)
    }

    fn edge(a: Point<f64>, b: Point<f64>, m: f64) -> FluxEdge<f64> {
        FluxEdge::new(a, b, m)
    }

    #[test]
    fn divergence_examples() {
        let f = MassFlux::new(vec![edge(p(0.0, 0.0), p(1.0, 0.0), 1.0)]).unwrap();
        let d = f.divergence();
        assert_eq!(d.mass_at(&p(0.0, 0.0)), 1.0);
        assert_eq!(d.mass_at(&p(1.0, 0.0)), -1.0);

        let z = p(0.5, 0.5);
        let f = MassFlux::new(vec![edge(p(0.0, 0.0), z.clone(), 1.0), edge(z.clone(), p(1.0, 0.0), 1.0)]).unwrap();
        let d = f.divergence();
        assert_eq!(d.atoms().len(), 2);
        assert_eq!(d.mass_at(&z), 0.0);

        let (mu, nu) = crate::fixtures::diamond_measures::<f64>();
        for m in [0.0, 0.2, 0.5] {
            let f = crate::fixtures::diamond_flux(m);
            assert!(f.is_admissible(&mu, &nu, 1e-12));
        }
    }

    #[test]
    fn gilbert_examples() {
        let capped = CostFunction::affine_capped(1.0, 0.0, 1.0).unwrap();
        let f = MassFlux::new(vec![edge(p(0.0, 0.0), p(2.0, 0.0), 1.0)]).unwrap();
        assert_eq!(f.gilbert_energy(&capped), 2.0);
        let lin = CostFunction::linear();
        for m in [0.0, 0.25, 0.5] {
            assert!((crate::fixtures::diamond_flux(m).gilbert_energy(&lin) - 2f64.sqrt()).abs() < 1e-12);
        }
        let s = crate::fixtures::two_column(2.0_f64);
        let expected = 0.4 * 5f64.sqrt() + 0.8;
        assert!((s.left_flux().gilbert_energy(&s.cost) - expected).abs() < 1e-12);
    }

    #[test]
    fn beckmann_energy_examples() {
        let net = StreetNetwork::new(vec![Street::new(p(0.0, 0.0), p(1.0, 0.0), 0.5)], Finite(2.0)).unwrap();
        let f = MassFlux::new(vec![edge(p(0.0, 0.0), p(1.0, 0.0), 1.0)]).unwrap();
        assert_eq!(f.beckmann_energy(&net).unwrap(), Finite(0.5));
        let g = MassFlux::new(vec![edge(p(0.0, 0.0), p(0.0, 1.0), 1.0)]).unwrap();
        assert_eq!(g.beckmann_energy(&StreetNetwork::empty(PlusInfinity)).unwrap(), PlusInfinity);
        let h = MassFlux::new(vec![edge(p(0.5, 0.0), p(1.5, 0.0), 1.0)]).unwrap();
        assert_eq!(h.beckmann_energy(&net), Err(Error::UnclassifiableEdge(0)));

        let s = crate::fixtures::two_column(2.0_f64);
        let e = s.left_flux().beckmann_energy(&s.optimal_network()).unwrap().finite().unwrap();
        assert!((e - (0.5 + 0.4 * 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn netting_and_cycles() {
        let f = MassFlux::new(vec![edge(p(0.0, 0.0), p(1.0, 0.0), 1.0), edge(p(1.0, 0.0), p(0.0, 0.0), 0.4)]).unwrap();
        assert_eq!(f.edges().len(), 1);
        assert!((f.edges()[0].mass - 0.6).abs() < 1e-15);

        let (x, y, w) = (p(0.0, 0.0), p(1.0, 0.0), p(0.5, 1.0));
        let f = MassFlux::new(vec![
            edge(x.clone(), y.clone(), 1.3),
            edge(y.clone(), w.clone(), 0.3),
            edge(w.clone(), x.clone(), 0.3),
        ])
        .unwrap();
        let g = f.remove_cycles();
        assert_eq!(g.edges().len(), 1);
        assert!((g.edges()[0].mass - 1.0).abs() < 1e-15);
        assert!(g.divergence().max_deviation(&f.divergence()) < 1e-12);

        let acyclic = crate::fixtures::diamond_flux(0.0);
        assert_eq!(acyclic.remove_cycles(), acyclic);
    }

    #[test]
    fn path_decomposition() {
        let f = MassFlux::new(vec![edge(p(0.0, 0.0), p(1.0, 0.0), 1.0)]).unwrap();
        let paths = f.decompose_paths().unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].weight, 1.0);

        let j = p(1.0, 0.0);
        let y = MassFlux::new(vec![
            edge(p(0.0, 1.0), j.clone(), 0.5),
            edge(p(0.0, -1.0), j.clone(), 0.5),
            edge(j.clone(), p(2.0, 0.0), 1.0),
        ])
        .unwrap();
        let paths = y.decompose_paths().unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths.iter().all(|q| q.weight == 0.5 && q.edges.contains(&2)));
        assert!(MassFlux::from_paths(&paths).unwrap().max_edge_deviation(&y) < 1e-15);

        let paths = crate::fixtures::diamond_flux(0.25_f64).decompose_paths().unwrap();
        assert_eq!(paths.len(), 4);
        assert!(paths.iter().all(|q| (q.weight - 0.25).abs() < 1e-15));
    }

    #[test]
    fn decomposition_rejects_cycles() {
        let (x, y, w) = (p(0.0, 0.0), p(1.0, 0.0), p(0.5, 1.0));
        let f = MassFlux::new(vec![edge(x.clone(), y.clone(), 1.0), edge(y, w.clone(), 1.0), edge(w, x, 1.0)]).unwrap();
        assert_eq!(f.decompose_paths().unwrap_err(), Error::CyclicFlux);
    }

    #[test]
    fn beckmann_single_segment() {
        let (x, y) = (p(0.0, 0.0), p(1.0, 0.0));
        let net = StreetNetwork::new(vec![Street::new(x.clone(), y.clone(), 0.5)], Finite(2.0)).unwrap();
        let g = build_routing_graph(&net, &[x.clone(), y.clone()], 0).unwrap();
        let sol = solve_beckmann(&g, &DiscreteMeasure::dirac(x.clone()), &DiscreteMeasure::dirac(y.clone())).unwrap();
        assert_eq!(sol.value, Finite(0.5));
        assert_eq!(sol.flux.edges(), &[FluxEdge::new(x, y, 1.0)]);
    }

    #[test]
    fn beckmann_staircase_member() {
        let (net, mu, nu) = crate::fixtures::v_staircase::<f64>(10, PlusInfinity);
        let terms: Vec<_> = mu.points().chain(nu.points()).cloned().collect();
        let g = build_routing_graph(&net, &terms, 0).unwrap();
        let sol = solve_beckmann(&g, &mu, &nu).unwrap();
        assert!((sol.value.finite().unwrap() - 1.04f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn beckmann_infeasible() {
        let g = build_routing_graph(&StreetNetwork::empty(PlusInfinity), &[p(0.0, 0.0), p(1.0, 0.0)], 0).unwrap();
        let sol = solve_beckmann(&g, &DiscreteMeasure::dirac(p(0.0, 0.0)), &DiscreteMeasure::dirac(p(1.0, 0.0))).unwrap();
        assert_eq!(sol.value, PlusInfinity);
        assert!(sol.flux.is_empty());
    }

    #[test]
    fn flux_json() {
        let f: MassFlux<f64> =
            serde_json::from_str(r#"{"edges":[{"tail":[0,0],"head":[1,0],"m":0.5},{"tail":[1,0],"head":[0,0],"m":1}]}"#)
                .unwrap();
        assert_eq!(f.edges().len(), 1);
        assert_eq!(f.edges()[0].tail, p(1.0, 0.0));
        assert_eq!(f.edges()[0].mass, 0.5);
    }
}
