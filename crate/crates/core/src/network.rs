//! Street networks, their routing graphs and the discrete urban metric.
//!
//! A street network is a finite set of straight segments, each with a
//! friction coefficient `b`, embedded in an ambient space where travel
//! costs `a` per unit length. The urban distance between two points is the
//! cheapest path cost, where on-network pieces cost `b` and everything else
//! costs `a`.
//!
//! The continuum metric is approximated on a [`RoutingGraph`]: its nodes are
//! segment endpoints, terminals, pairwise segment crossings, subdivision
//! points and the projections of terminals onto segments; on-network edges
//! join consecutive nodes along each segment and, when `a < inf`, every
//! pair of nodes is joined by a straight off-network edge. Paths may only
//! enter or leave the network at nodes, so the discrete distance is an
//! upper bound that tightens as the refinement grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{closest_params, dist_to_segment, line_coordinates, Point};
use crate::scalar::{ExtReal, Finite, PlusInfinity, Scalar};
use crate::shortest::dijkstra;

/// Largest refinement accepted by [`build_routing_graph`].
pub const MAX_REFINEMENT: usize = 16;

/// One straight road `[p, q]` with friction `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Street<T> {
    pub p: Point<T>,
    pub q: Point<T>,
    pub b: T,
}

impl<T: Scalar> Street<T> {
    pub fn new(p: Point<T>, q: Point<T>, b: T) -> Self {
        Street { p, q, b }
    }

    pub fn length(&self) -> T {
        self.p.dist(&self.q)
    }

    pub fn contains(&self, x: &Point<T>) -> bool {
        dist_to_segment(&self.p, &self.q, x) <= T::geometry_snap()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct NetworkSpec<T> {
    pub a: ExtReal<T>,
    #[serde(default = "Vec::new")]
    pub segments: Vec<Street<T>>,
}

/// A pair `(S, b)` together with the ambient cost `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "NetworkSpec<T>",
    into = "NetworkSpec<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct StreetNetwork<T> {
    segments: Vec<Street<T>>,
    ambient: ExtReal<T>,
}

impl<T: Scalar> TryFrom<NetworkSpec<T>> for StreetNetwork<T> {
    type Error = Error;
    fn try_from(spec: NetworkSpec<T>) -> Result<Self> {
        StreetNetwork::new(spec.segments, spec.a)
    }
}

impl<T> From<StreetNetwork<T>> for NetworkSpec<T> {
    fn from(n: StreetNetwork<T>) -> Self {
        NetworkSpec { a: n.ambient, segments: n.segments }
    }
}

/// Where an edge sits relative to the network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Placement<T> {
    /// Inside a segment; the cheapest containing friction.
    OnNetwork { segment: usize, b: T },
    OffNetwork,
    /// Overlaps a segment on a proper sub-piece only.
    Straddling,
}

impl<T: Scalar> StreetNetwork<T> {
    pub fn new(segments: Vec<Street<T>>, ambient: ExtReal<T>) -> Result<Self> {
        if let Finite(a) = ambient {
            if !(a >= T::zero()) {
                return Err(Error::InvalidNetwork(format!("ambient cost {a} is negative")));
            }
        }
        let mut dim = None;
        for (i, s) in segments.iter().enumerate() {
            if s.p.dim() != s.q.dim() || dim.is_some_and(|d| d != s.p.dim()) {
                return Err(Error::DimensionMismatch { expected: dim.unwrap_or(s.p.dim()), found: s.q.dim() });
            }
            dim = Some(s.p.dim());
            if !(s.p.is_finite() && s.q.is_finite()) {
                return Err(Error::InvalidNetwork(format!("segment {i} has non-finite endpoints")));
            }
            if !(s.length() > T::geometry_snap()) {
                return Err(Error::InvalidNetwork(format!("segment {i} has zero length")));
            }
            if !(s.b >= T::zero()) || Finite(s.b) > ambient {
                return Err(Error::InvalidNetwork(format!("friction {} of segment {i} outside [0, a]", s.b)));
            }
        }
        Ok(StreetNetwork { segments, ambient })
    }

    /// Network without streets: the ambient metric `a |x - y|`.
    pub fn empty(ambient: ExtReal<T>) -> Self {
        StreetNetwork { segments: Vec::new(), ambient }
    }

    pub fn segments(&self) -> &[Street<T>] {
        &self.segments
    }

    pub fn ambient(&self) -> ExtReal<T> {
        self.ambient
    }

    pub fn total_length(&self) -> T {
        self.segments.iter().map(Street::length).sum()
    }

    /// `H^1(S_lambda)` for the sublevel set `S_lambda = {b <= lambda}`.
    pub fn sublevel_length(&self, lambda: T) -> T {
        self.segments.iter().filter(|s| s.b <= lambda).map(Street::length).sum()
    }

    /// Every sublevel set below `a` has finite length. Always true for a
    /// finite segment list; kept as a named check for callers composing
    /// networks from external data.
    pub fn has_finite_sublevels(&self) -> bool {
        self.segments
            .iter()
            .filter(|s| Finite(s.b) < self.ambient)
            .all(|s| s.length().is_finite())
    }

    /// Classifies the straight piece `[p, q]`.
    pub fn placement(&self, p: &Point<T>, q: &Point<T>) -> Placement<T> {
        let snap = T::geometry_snap();
        let mut best: Option<(usize, T)> = None;
        let mut straddles = false;
        for (i, s) in self.segments.iter().enumerate() {
            if s.contains(p) && s.contains(q) {
                if best.is_none_or(|(_, b)| s.b < b) {
                    best = Some((i, s.b));
                }
                continue;
            }
            let (tp, dp) = line_coordinates(&s.p, &s.q, p);
            let (tq, dq) = line_coordinates(&s.p, &s.q, q);
            if dp <= snap && dq <= snap {
                let (lo, hi) = (tp.min(tq).max(T::zero()), tp.max(tq).min(T::one()));
                if (hi - lo) * s.length() > snap {
                    straddles = true;
                }
            }
        }
        match best {
            Some((segment, b)) => Placement::OnNetwork { segment, b },
            None if straddles => Placement::Straddling,
            None => Placement::OffNetwork,
        }
    }

    /// Path cost `L` of a polyline: on-network pieces at their friction,
    /// the rest at `a`.
    pub fn path_length(&self, polyline: &[Point<T>]) -> Result<ExtReal<T>> {
        if polyline.len() < 2 {
            return Err(Error::DegeneratePolyline);
        }
        let snap = T::geometry_snap();
        let mut total = ExtReal::zero();
        for w in polyline.windows(2) {
            let (u, v) = (&w[0], &w[1]);
            let len = u.dist(v);
            if len <= T::zero() {
                continue;
            }
            let mut cuts = vec![T::zero(), T::one()];
            if len > snap {
                for s in &self.segments {
                    let (ts, ds) = line_coordinates(u, v, &s.p);
                    let (tq, dq) = line_coordinates(u, v, &s.q);
                    if ds <= snap && dq <= snap {
                        cuts.extend([ts, tq].into_iter().filter(|t| *t > T::zero() && *t < T::one()));
                    }
                }
            }
            cuts.sort_by(|a, b| crate::scalar::cmp_f(*a, *b));
            for c in cuts.windows(2) {
                let piece = (c[1] - c[0]) * len;
                if piece <= T::zero() {
                    continue;
                }
                let mid = u.lerp(v, (c[0] + c[1]) / T::lit(2.0));
                let rate = self
                    .segments
                    .iter()
                    .filter(|s| s.contains(&mid))
                    .map(|s| Finite(s.b))
                    .fold(self.ambient, ExtReal::min);
                total += rate.scale(piece);
            }
        }
        Ok(total)
    }
}

/// Why a routing node exists.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NodeOrigin {
    pub endpoint: bool,
    pub terminal: bool,
    pub crossing: bool,
    pub subdivision: bool,
    pub projection: bool,
}

#[derive(Clone, Debug)]
pub struct RoutingNode<T> {
    pub point: Point<T>,
    pub origin: NodeOrigin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeTag {
    OnNetwork(usize),
    OffNetwork,
}

#[derive(Clone, Debug)]
pub struct RoutingEdge<T> {
    pub u: usize,
    pub v: usize,
    pub length: T,
    pub unit_cost: T,
    pub tag: EdgeTag,
}

impl<T: Scalar> RoutingEdge<T> {
    pub fn cost(&self) -> T {
        self.unit_cost * self.length
    }

    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Undirected graph approximating the urban metric of a network.
#[derive(Clone, Debug)]
pub struct RoutingGraph<T> {
    nodes: Vec<RoutingNode<T>>,
    edges: Vec<RoutingEdge<T>>,
    adjacency: Vec<Vec<usize>>,
    ambient: ExtReal<T>,
}

/// A cheapest route between two nodes.
#[derive(Clone, Debug)]
pub struct Route<T> {
    pub value: ExtReal<T>,
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

impl<T: Scalar> RoutingGraph<T> {
    pub fn nodes(&self) -> &[RoutingNode<T>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoutingEdge<T>] {
        &self.edges
    }

    pub fn ambient(&self) -> ExtReal<T> {
        self.ambient
    }

    pub fn point(&self, i: usize) -> &Point<T> {
        &self.nodes[i].point
    }

    pub fn incident(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Index of the node at `x`, if any.
    pub fn node_index(&self, x: &Point<T>) -> Option<usize> {
        let snap = T::geometry_snap();
        self.nodes.iter().position(|n| n.point.dist(x) <= snap)
    }

    /// Distances from `source` to every node plus the predecessor edges.
    pub fn distances_from(&self, source: usize) -> (Vec<ExtReal<T>>, Vec<Option<usize>>) {
        let (dist, pred) = dijkstra(self.nodes.len(), source, |u, emit| {
            for &e in &self.adjacency[u] {
                let edge = &self.edges[e];
                emit(edge.other(u), edge.cost(), e);
            }
        });
        (dist.into_iter().map(|d| d.map_or(PlusInfinity, Finite)).collect(), pred)
    }

    /// Cheapest route between two node indices.
    pub fn route(&self, from: usize, to: usize) -> Route<T> {
        let (dist, pred) = self.distances_from(from);
        let value = dist[to];
        if value.is_infinite() {
            return Route { value, nodes: Vec::new(), edges: Vec::new() };
        }
        let mut nodes = vec![to];
        let mut edges = Vec::new();
        let mut cur = to;
        while cur != from {
            let e = pred[cur].expect("reached nodes have predecessors");
            edges.push(e);
            cur = self.edges[e].other(cur);
            nodes.push(cur);
        }
        nodes.reverse();
        edges.reverse();
        Route { value, nodes, edges }
    }

    /// Discrete urban distance between two points that are graph nodes.
    pub fn urban_distance(&self, x: &Point<T>, y: &Point<T>) -> Result<Route<T>> {
        let from = self.node_index(x).ok_or(Error::UnknownNode)?;
        let to = self.node_index(y).ok_or(Error::UnknownNode)?;
        Ok(self.route(from, to))
    }

    /// The polyline traced by a node sequence.
    pub fn polyline(&self, nodes: &[usize]) -> Vec<Point<T>> {
        nodes.iter().map(|&i| self.nodes[i].point.clone()).collect()
    }
}

fn insert_node<T: Scalar>(nodes: &mut Vec<RoutingNode<T>>, point: Point<T>, mark: impl Fn(&mut NodeOrigin)) -> usize {
    let snap = T::geometry_snap();
    let i = match nodes.iter().position(|n| n.point.dist(&point) <= snap) {
        Some(i) => i,
        None => {
            nodes.push(RoutingNode { point, origin: NodeOrigin::default() });
            nodes.len() - 1
        }
    };
    mark(&mut nodes[i].origin);
    i
}

/// Builds the routing graph of `net` with the given terminals.
///
/// Refinement `k` adds, for every level `j = 1..=k`, the `j` interior
/// points splitting each segment into `j + 1` equal parts, so the node set
/// at level `k + 1` contains the one at level `k`.
pub fn build_routing_graph<T: Scalar>(
    net: &StreetNetwork<T>,
    terminals: &[Point<T>],
    refinement: usize,
) -> Result<RoutingGraph<T>> {
    if refinement > MAX_REFINEMENT {
        return Err(Error::RefinementTooLarge(refinement));
    }
    let dim = net.segments.first().map(|s| s.p.dim()).or(terminals.first().map(Point::dim));
    if let Some(d) = dim {
        if let Some(t) = terminals.iter().find(|t| t.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: t.dim() });
        }
    }
    let segs = &net.segments;
    let mut nodes: Vec<RoutingNode<T>> = Vec::new();
    for s in segs {
        insert_node(&mut nodes, s.p.clone(), |o| o.endpoint = true);
        insert_node(&mut nodes, s.q.clone(), |o| o.endpoint = true);
    }
    for t in terminals {
        insert_node(&mut nodes, t.clone(), |o| o.terminal = true);
    }
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let (s, t) = closest_params(&segs[i].p, &segs[i].q, &segs[j].p, &segs[j].q);
            let x = segs[i].p.lerp(&segs[i].q, s);
            let y = segs[j].p.lerp(&segs[j].q, t);
            if x.dist(&y) <= T::geometry_snap() {
                insert_node(&mut nodes, x, |o| o.crossing = true);
            }
        }
    }
    for s in segs {
        for level in 1..=refinement {
            for i in 1..=level {
                let t = T::from_usize(i).unwrap() / T::from_usize(level + 1).unwrap();
                insert_node(&mut nodes, s.p.lerp(&s.q, t), |o| o.subdivision = true);
            }
        }
    }
    for t in terminals {
        for s in segs {
            let proj = s.p.lerp(&s.q, crate::geometry::project_param(&s.p, &s.q, t));
            insert_node(&mut nodes, proj, |o| o.projection = true);
        }
    }

    let mut edges = Vec::new();
    for (si, s) in segs.iter().enumerate() {
        let mut along: Vec<(T, usize)> = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| s.contains(&n.point))
            .map(|(i, n)| (line_coordinates(&s.p, &s.q, &n.point).0, i))
            .collect();
        along.sort_by(|a, b| crate::scalar::cmp_f(a.0, b.0).then(a.1.cmp(&b.1)));
        for w in along.windows(2) {
            let (u, v) = (w[0].1, w[1].1);
            let length = nodes[u].point.dist(&nodes[v].point);
            if length > T::zero() {
                edges.push(RoutingEdge { u, v, length, unit_cost: s.b, tag: EdgeTag::OnNetwork(si) });
            }
        }
    }
    if let Finite(a) = net.ambient {
        let snap = T::geometry_snap();
        for u in 0..nodes.len() {
            for v in u + 1..nodes.len() {
                let (pu, pv) = (&nodes[u].point, &nodes[v].point);
                // a node strictly inside [u, v] makes this edge a two-hop detour of equal length
                let blocked = nodes.iter().enumerate().any(|(w, n)| {
                    w != u && w != v && dist_to_segment(pu, pv, &n.point) <= snap
                });
                if !blocked {
                    edges.push(RoutingEdge { u, v, length: pu.dist(pv), unit_cost: a, tag: EdgeTag::OffNetwork });
                }
            }
        }
    }
    let mut adjacency = vec![Vec::new(); nodes.len()];
    for (i, e) in edges.iter().enumerate() {
        adjacency[e.u].push(i);
        adjacency[e.v].push(i);
    }
    Ok(RoutingGraph { nodes, edges, adjacency, ambient: net.ambient })
}
