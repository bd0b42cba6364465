//! Dijkstra over an implicit graph, shared by the metric and flow solvers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::{cmp_f, Scalar};

struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Entry<T> {}

impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Entry<T> {
    // min-heap on distance, lowest node index first on ties
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_f(other.dist, self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source shortest paths with nonnegative arc lengths.
///
/// `arcs(u, emit)` must call `emit(v, length, arc_id)` for every arc out of
/// `u`. Returns distances (`None` when unreachable) and the arc through
/// which each node was first reached at its final distance.
pub(crate) fn dijkstra<T, F>(n: usize, source: usize, mut arcs: F) -> (Vec<Option<T>>, Vec<Option<usize>>)
where
    T: Scalar,
    F: FnMut(usize, &mut dyn FnMut(usize, T, usize)),
{
    let mut dist: Vec<Option<T>> = vec![None; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(T::zero());
    heap.push(Entry { dist: T::zero(), node: source });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        arcs(u, &mut |v, len, arc| {
            if done[v] {
                return;
            }
            let cand = d + len;
            let better = match dist[v] {
                None => true,
                Some(old) => cand < old,
            };
            if better {
                dist[v] = Some(cand);
                pred[v] = Some(arc);
                heap.push(Entry { dist: cand, node: v });
            }
        });
    }
    (dist, pred)
}
