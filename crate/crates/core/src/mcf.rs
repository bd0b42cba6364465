//! Min-cost flow with real capacities by successive shortest paths.
//!
//! Shared by the transportation solver and the Beckmann solver. Arc costs
//! must be nonnegative; infinite-cost arcs are simply never added.

use crate::scalar::Scalar;
use crate::shortest::dijkstra;

#[derive(Clone, Debug)]
struct Arc<T> {
    to: usize,
    // residual capacity; `T::infinity()` for uncapacitated arcs
    cap: T,
    cost: T,
}

#[derive(Clone, Debug)]
pub(crate) struct MinCostFlow<T> {
    n: usize,
    arcs: Vec<Arc<T>>,
    adj: Vec<Vec<usize>>,
    original: Vec<T>,
}

#[derive(Clone, Debug)]
pub(crate) struct FlowSolution<T> {
    /// All supply was routed.
    pub feasible: bool,
    /// Flow on each arc, indexed by the id returned from `add_arc`.
    pub flows: Vec<T>,
    /// Node potentials with `cost(u, v) + p(u) - p(v) >= 0` on residual arcs.
    pub potentials: Vec<T>,
}

impl<T: Scalar> MinCostFlow<T> {
    pub fn new(n: usize) -> Self {
        // two extra nodes: super source and super sink
        MinCostFlow { n, arcs: Vec::new(), adj: vec![Vec::new(); n + 2], original: Vec::new() }
    }

    /// Adds `u -> v`; `cap = None` means uncapacitated. Returns the arc id.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: Option<T>, cost: T) -> usize {
        debug_assert!(cost >= T::zero());
        let cap = cap.unwrap_or_else(T::infinity);
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap, cost });
        self.arcs.push(Arc { to: u, cap: T::zero(), cost: -cost });
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        self.original.push(cap);
        id / 2
    }

    /// Routes `supply[i]` (positive: source, negative: sink) at minimum cost.
    pub fn solve(mut self, supply: &[T]) -> FlowSolution<T> {
        assert_eq!(supply.len(), self.n);
        let (s, t) = (self.n, self.n + 1);
        let total: T = supply.iter().filter(|x| **x > T::zero()).copied().sum();
        let user_arcs = self.original.len();
        for (i, &x) in supply.iter().enumerate() {
            if x > T::zero() {
                self.add_arc(s, i, Some(x), T::zero());
            } else if x < T::zero() {
                self.add_arc(i, t, Some(-x), T::zero());
            }
        }
        let eps = T::mass_tol() * (T::one() + total);
        let nodes = self.n + 2;
        let mut potential = vec![T::zero(); nodes];
        let mut pushed = T::zero();
        while total - pushed > eps {
            let arcs = &self.arcs;
            let adj = &self.adj;
            let pot = &potential;
            let (dist, pred) = dijkstra(nodes, s, |u, emit| {
                for &a in &adj[u] {
                    let arc = &arcs[a];
                    if arc.cap > eps {
                        let reduced = (arc.cost + pot[u] - pot[arc.to]).max(T::zero());
                        emit(arc.to, reduced, a);
                    }
                }
            });
            let reach = dist.iter().flatten().copied().fold(T::zero(), T::max);
            for (p, d) in potential.iter_mut().zip(&dist) {
                *p = *p + d.unwrap_or(reach);
            }
            if dist[t].is_none() {
                break;
            }
            let mut path = Vec::new();
            let mut v = t;
            while v != s {
                let a = pred[v].expect("path to sink");
                path.push(a);
                v = self.arcs[a ^ 1].to;
            }
            let bottleneck = path
                .iter()
                .map(|&a| self.arcs[a].cap)
                .fold(T::infinity(), T::min)
                .min(total - pushed);
            for &a in &path {
                self.arcs[a].cap = self.arcs[a].cap - bottleneck;
                self.arcs[a ^ 1].cap = self.arcs[a ^ 1].cap + bottleneck;
            }
            pushed = pushed + bottleneck;
        }
        let flows: Vec<T> = (0..user_arcs).map(|i| self.arcs[2 * i + 1].cap).collect();
        potential.truncate(self.n);
        FlowSolution { feasible: total - pushed <= eps, flows, potentials: potential }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefers_cheap_route_until_saturated() {
        // 0 -> 1 cheap but capped at 0.3, 0 -> 1 expensive otherwise
        let mut g = MinCostFlow::<f64>::new(2);
        let cheap = g.add_arc(0, 1, Some(0.3), 1.0);
        let pricey = g.add_arc(0, 1, None, 5.0);
        let sol = g.solve(&[1.0, -1.0]);
        assert!(sol.feasible);
        assert!((sol.flows[cheap] - 0.3).abs() < 1e-15);
        assert!((sol.flows[pricey] - 0.7).abs() < 1e-15);
        assert!((0.3 * 1.0 + sol.flows[pricey] * 5.0 - 3.8).abs() < 1e-12);
    }

    #[test]
    fn reroutes_through_residual_arcs() {
        // classic case where the second path cancels flow of the first
        let mut g = MinCostFlow::<f64>::new(4);
        let arcs = [(0, 1, 1.0), (0, 2, 2.0), (1, 2, 0.0), (1, 3, 2.0), (2, 3, 1.0)];
        for (u, v, c) in arcs {
            g.add_arc(u, v, Some(1.0), c);
        }
        let sol = g.solve(&[2.0, 0.0, 0.0, -2.0]);
        assert!(sol.feasible);
        let cost: f64 = arcs.iter().zip(&sol.flows).map(|(a, f)| a.2 * f).sum();
        assert!((cost - 6.0).abs() < 1e-12);
    }

    #[test]
    fn reports_infeasibility() {
        let g = MinCostFlow::<f64>::new(2);
        let sol = g.solve(&[1.0, -1.0]);
        assert!(!sol.feasible);
    }
}
