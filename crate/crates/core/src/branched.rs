//! A desk-scale solver for the branched transport problem.
//!
//! Candidate fluxes are trees on the terminals (the atoms of
//! `mu_plus - mu_minus`) plus at most two movable branch points. Labelled
//! trees are enumerated through Prüfer sequences; on a tree the edge masses
//! are forced by mass balance, so only the branch point positions remain
//! free. For fixed masses the energy `sum_e tau(m_e) |e|` is convex in those
//! positions and is minimised by block Weiszfeld iterations with an exact
//! vertex test.
//!
//! The result is the best flux in this class, an upper bound for the
//! infimum over all fluxes. It is exact whenever an optimal flux is such a
//! tree.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::flow::{FluxEdge, MassFlux};
use crate::geometry::Point;
use crate::measures::DiscreteMeasure;
use crate::scalar::Scalar;

/// Largest `|mu_plus| + |mu_minus|` accepted by [`solve_branched`].
pub const MAX_ATOMS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchedConfig {
    /// Number of movable branch points, at most 2.
    pub max_steiner: usize,
    /// Starting configurations per topology; later ones are only tried when
    /// the descent from the earlier ones hits `max_sweeps`.
    pub grid_seed_count: usize,
    /// Stop when no branch point moves farther than this, relative to the
    /// diameter of the terminal set.
    pub descent_tol: f64,
    pub max_sweeps: usize,
    /// Also return every distinct flux within `tie_tol` of the optimum.
    pub report_ties: bool,
    pub tie_tol: f64,
    /// Branch-point levels whose raw Prüfer count exceeds this are skipped.
    pub max_sequences: u64,
}

impl Default for BranchedConfig {
    fn default() -> Self {
        BranchedConfig {
            max_steiner: 2,
            grid_seed_count: 5,
            descent_tol: 1e-12,
            max_sweeps: 20_000,
            report_ties: false,
            tie_tol: 1e-9,
            max_sequences: 5_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BranchedSolution<T> {
    pub flux: MassFlux<T>,
    pub value: T,
    /// Distinct optimal fluxes in lexicographic edge order; empty unless
    /// ties were requested.
    pub ties: Vec<MassFlux<T>>,
    /// Number of distinct weighted topologies evaluated.
    pub topologies: usize,
    /// Branch-point counts left out by the sequence budget.
    pub skipped_steiner_levels: Vec<usize>,
    /// Every tree topology on the terminals was evaluated: no level was
    /// skipped and `max_steiner >= n - 2` for `n` terminals.
    pub exhaustive: bool,
}

fn norm<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

fn dist<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
}

fn coincident<T: Scalar>(p: &[T], q: &[T]) -> bool {
    dist(p, q) <= T::epsilon() * T::lit(64.0) * (T::one() + norm(p))
}

/// Weighted neighbour locations of one (possibly merged) movable vertex,
/// with coincident locations grouped.
#[derive(Clone, Debug)]
struct Star<T> {
    dim: usize,
    locs: Vec<T>,
    wts: Vec<T>,
    force: Vec<T>,
    weighted: Vec<T>,
}

impl<T: Scalar> Star<T> {
    fn new(dim: usize) -> Self {
        Star { dim, locs: Vec::new(), wts: Vec::new(), force: vec![T::zero(); dim], weighted: vec![T::zero(); dim] }
    }

    fn clear(&mut self) {
        self.locs.clear();
        self.wts.clear();
    }

    fn loc(&self, k: usize) -> &[T] {
        &self.locs[k * self.dim..(k + 1) * self.dim]
    }

    fn push(&mut self, p: &[T], w: T) {
        if let Some(k) = (0..self.wts.len()).find(|&k| coincident(self.loc(k), p)) {
            self.wts[k] = self.wts[k] + w;
        } else {
            self.locs.extend_from_slice(p);
            self.wts.push(w);
        }
    }

    /// Fills `force` (weighted unit pulls) and `weighted` (`sum w p / d`)
    /// at `q`, ignoring locations coincident with `q`; returns `sum w / d`.
    fn pull(&mut self, q: &[T]) -> T {
        let dim = self.dim;
        self.force.iter_mut().for_each(|x| *x = T::zero());
        self.weighted.iter_mut().for_each(|x| *x = T::zero());
        let mut inv = T::zero();
        for k in 0..self.wts.len() {
            let p = &self.locs[k * dim..(k + 1) * dim];
            if coincident(p, q) {
                continue;
            }
            let c = self.wts[k] / dist(p, q);
            for i in 0..dim {
                self.force[i] = self.force[i] + (p[i] - q[i]) * c;
                self.weighted[i] = self.weighted[i] + p[i] * c;
            }
            inv = inv + c;
        }
        inv
    }

    /// One descent step for `f(s) = sum_k w_k |s - p_k|` from `current`.
    ///
    /// Returns a neighbour location when the subgradient test certifies it
    /// as the minimiser, a Vardi-Zhang step when `current` sits on a
    /// non-optimal neighbour, and a plain Weiszfeld step otherwise. None of
    /// them increases `f`.
    fn step(&mut self, current: &[T], out: &mut [T]) {
        let mut at_vertex = None;
        for k in 0..self.wts.len() {
            let q = self.loc(k).to_vec();
            self.pull(&q);
            let f = norm(&self.force);
            if f <= self.wts[k] {
                out.copy_from_slice(&q);
                return;
            }
            if coincident(&q, current) {
                at_vertex = Some((k, f));
            }
        }
        match at_vertex {
            Some((k, f)) => {
                let q = self.loc(k).to_vec();
                let inv = self.pull(&q);
                let shrink = T::one() - self.wts[k] / f;
                for i in 0..self.dim {
                    out[i] = q[i] + (self.weighted[i] / inv - q[i]) * shrink;
                }
            }
            None => {
                let inv = self.pull(current);
                for (o, &w) in out.iter_mut().zip(&self.weighted) {
                    *o = w / inv;
                }
            }
        }
    }
}

/// A weighted tree whose first `fixed` vertices are pinned.
#[derive(Clone, Debug)]
pub struct SteinerTree<T> {
    dim: usize,
    coords: Vec<T>,
    fixed: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<T>,
    merge_radius: T,
    star: Star<T>,
}

impl<T: Scalar> SteinerTree<T> {
    pub fn new(points: Vec<Point<T>>, fixed: usize, edges: Vec<(usize, usize)>, weights: Vec<T>) -> Self {
        assert_eq!(edges.len(), weights.len());
        let dim = points.first().map_or(0, Point::dim);
        let diameter = points[..fixed]
            .iter()
            .flat_map(|p| points[..fixed].iter().map(move |q| p.dist(q)))
            .fold(T::zero(), T::max);
        let coords = points.iter().flat_map(|p| p.coords().iter().copied()).collect();
        SteinerTree {
            dim,
            coords,
            fixed,
            edges,
            weights,
            merge_radius: T::lit(1e-2) * diameter,
            star: Star::new(dim),
        }
    }

    fn at(&self, v: usize) -> &[T] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    fn set(&mut self, v: usize, x: &[T]) {
        self.coords[v * self.dim..(v + 1) * self.dim].copy_from_slice(x);
    }

    fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn points(&self) -> Vec<Point<T>> {
        (0..self.len()).map(|v| Point::new(self.at(v).to_vec())).collect()
    }

    pub fn energy(&self) -> T {
        self.edges
            .iter()
            .zip(&self.weights)
            .map(|(&(u, v), &w)| w * dist(self.at(u), self.at(v)))
            .sum()
    }

    /// Loads the neighbours of the vertex set `of` into the star.
    fn load_star(&mut self, of: &[usize]) {
        let mut star = std::mem::replace(&mut self.star, Star::new(0));
        star.clear();
        for (&(u, v), &w) in self.edges.iter().zip(&self.weights) {
            match (of.contains(&u), of.contains(&v)) {
                (true, false) => star.push(self.at(v), w),
                (false, true) => star.push(self.at(u), w),
                _ => {}
            }
        }
        self.star = star;
    }

    /// Weighted sum of unit vectors from `v` towards its neighbours.
    pub fn residual(&self, v: usize) -> Point<T> {
        let here = self.at(v);
        let mut r = vec![T::zero(); self.dim];
        for (&(a, b), &w) in self.edges.iter().zip(&self.weights) {
            let other = match (a == v, b == v) {
                (true, false) => self.at(b),
                (false, true) => self.at(a),
                _ => continue,
            };
            let d = dist(other, here);
            if d > T::zero() {
                for i in 0..self.dim {
                    r[i] = r[i] + (other[i] - here[i]) * (w / d);
                }
            }
        }
        Point::new(r)
    }

    /// One pass over the movable vertices, followed by a merge attempt for
    /// every close pair of them. Returns the largest displacement.
    pub fn sweep(&mut self) -> T {
        let mut moved = T::zero();
        let mut next = vec![T::zero(); self.dim];
        for v in self.fixed..self.len() {
            self.load_star(&[v]);
            let current = self.at(v).to_vec();
            self.star.step(&current, &mut next);
            moved = moved.max(dist(&next, &current));
            self.set(v, &next);
        }
        for u in self.fixed..self.len() {
            for v in u + 1..self.len() {
                let (pu, pv) = (self.at(u).to_vec(), self.at(v).to_vec());
                if dist(&pu, &pv) > self.merge_radius {
                    continue;
                }
                // block moves crawl when the optimum merges two branch
                // points; try the merged configuration directly
                self.load_star(&[u, v]);
                let mut trial: Vec<T> = pu.iter().zip(&pv).map(|(&a, &b)| (a + b) / T::lit(2.0)).collect();
                let steps = if coincident(&pu, &pv) { 1 } else { 32 };
                for _ in 0..steps {
                    self.star.step(&trial.clone(), &mut trial);
                }
                let before = self.energy();
                self.set(u, &trial);
                self.set(v, &trial);
                if self.energy() > before {
                    self.set(u, &pu);
                    self.set(v, &pv);
                } else {
                    moved = moved.max(dist(&trial, &pu)).max(dist(&trial, &pv));
                }
            }
        }
        moved
    }

    /// Sweeps until the displacement drops to `tol`; returns the number of
    /// sweeps.
    pub fn optimize(&mut self, tol: T, max_sweeps: usize) -> usize {
        for k in 0..max_sweeps {
            if self.sweep() <= tol {
                return k + 1;
            }
        }
        max_sweeps
    }
}

/// Forced-mass tree with at least degree three at every branch point.
#[derive(Clone, Debug)]
struct Layout<T> {
    steiner: usize,
    /// Oriented along the positive mass.
    edges: Vec<(usize, usize)>,
    masses: Vec<T>,
}

type Key = Vec<(u8, u8)>;

/// Decodes Prüfer sequence `seq` over `nodes` labels, accumulating subtree
/// mass as leaves are peeled. Emits `(leaf, parent, mass leaving leaf)`.
fn decode<T: Scalar>(seq: &[usize], div: &[T], degree: &mut [usize], acc: &mut [T], out: &mut Vec<(usize, usize, T)>) {
    let nodes = div.len();
    degree.iter_mut().for_each(|d| *d = 1);
    for &x in seq {
        degree[x] += 1;
    }
    acc.copy_from_slice(div);
    out.clear();
    for &x in seq {
        let leaf = (0..nodes).find(|&i| degree[i] == 1).expect("a tree has a leaf");
        out.push((leaf, x, acc[leaf]));
        acc[x] = acc[x] + acc[leaf];
        degree[leaf] = 0;
        degree[x] -= 1;
    }
    let mut last = (0..nodes).filter(|&i| degree[i] == 1);
    let (u, v) = (last.next().expect("two left"), last.next().expect("two left"));
    out.push((u, v, acc[u]));
}

fn layout_key(edges: &[(usize, usize)], n: usize, steiner: usize) -> Key {
    let relabel = |x: usize, swap: bool| -> u8 {
        let y = if swap && x >= n { 2 * n + 1 - x } else { x };
        y as u8
    };
    let key = |swap: bool| {
        let mut k: Key = edges.iter().map(|&(u, v)| (relabel(u, swap), relabel(v, swap))).collect();
        k.sort_unstable();
        k
    };
    if steiner == 2 {
        key(false).min(key(true))
    } else {
        key(false)
    }
}

/// All distinct nonzero-mass layouts with exactly `steiner` branch points.
fn layouts<T: Scalar>(div: &[T], steiner: usize, zero: T) -> Vec<(Key, Layout<T>)> {
    let n = div.len();
    let nodes = n + steiner;
    let len = nodes - 2;
    let count = (nodes as u64).pow(len as u32);
    let chunk = 1u64 << 14;
    let chunks = count.div_ceil(chunk);
    let mut full = div.to_vec();
    full.resize(nodes, T::zero());
    let parts: Vec<BTreeMap<Key, Layout<T>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut found = BTreeMap::new();
            let mut seq = vec![0usize; len];
            let (mut degree, mut acc, mut out) = (vec![0; nodes], vec![T::zero(); nodes], Vec::new());
            for idx in c * chunk..((c + 1) * chunk).min(count) {
                let mut r = idx;
                let mut steiner_seen = [0usize; 2];
                for s in seq.iter_mut() {
                    *s = (r % nodes as u64) as usize;
                    r /= nodes as u64;
                    if *s >= n {
                        steiner_seen[*s - n] += 1;
                    }
                }
                if steiner_seen[..steiner].iter().any(|&k| k < 2) {
                    continue;
                }
                decode(&seq, &full, &mut degree, &mut acc, &mut out);
                let mut edges = Vec::with_capacity(out.len());
                let mut masses = Vec::with_capacity(out.len());
                let mut eff = [0usize; 2];
                for &(u, v, m) in &out {
                    if m.abs() <= zero {
                        continue;
                    }
                    let (a, b, m) = if m > T::zero() { (u, v, m) } else { (v, u, -m) };
                    for x in [a, b] {
                        if x >= n {
                            eff[x - n] += 1;
                        }
                    }
                    edges.push((a, b));
                    masses.push(m);
                }
                if eff[..steiner].iter().any(|&k| k < 3) {
                    continue;
                }
                let key = layout_key(&edges, n, steiner);
                found.entry(key).or_insert(Layout { steiner, edges, masses });
            }
            found
        })
        .collect();
    let mut merged = BTreeMap::new();
    for part in parts {
        for (k, v) in part {
            merged.entry(k).or_insert(v);
        }
    }
    merged.into_iter().collect()
}

fn centroid<T: Scalar>(pts: &[&Point<T>]) -> Point<T> {
    let mut c = Point::zeros(pts[0].dim());
    for p in pts {
        c = &c + *p;
    }
    &c * (T::one() / T::from_usize(pts.len()).expect("small"))
}

/// Starting positions: neighbour centroids, then rotated offsets.
fn seed<T: Scalar>(terminals: &[Point<T>], layout: &Layout<T>, k: usize, count: usize, radius: T) -> Vec<Point<T>> {
    let n = terminals.len();
    let all: Vec<&Point<T>> = terminals.iter().collect();
    (0..layout.steiner)
        .map(|i| {
            let s = n + i;
            let nbrs: Vec<&Point<T>> = layout
                .edges
                .iter()
                .filter_map(|&(u, v)| match (u == s, v == s) {
                    (true, _) if v < n => Some(&terminals[v]),
                    (_, true) if u < n => Some(&terminals[u]),
                    _ => None,
                })
                .collect();
            let mut p = centroid(if nbrs.is_empty() { &all } else { &nbrs });
            if k > 0 {
                let dim = p.dim();
                let theta = T::TAU() * T::from_usize(k - 1 + i).unwrap() / T::from_usize(count.max(2) - 1).unwrap();
                let mut off = Point::zeros(dim);
                off.0[(k - 1) % dim] = radius * theta.cos();
                off.0[k % dim] = off.0[k % dim] + radius * theta.sin();
                p = &p + &off;
            }
            p
        })
        .collect()
}

struct Evaluated<T> {
    energy: T,
    points: Vec<Point<T>>,
}

fn evaluate<T: Scalar>(
    terminals: &[Point<T>],
    layout: &Layout<T>,
    cost: &CostFunction<T>,
    config: &BranchedConfig,
    scale: T,
) -> Evaluated<T> {
    let weights: Vec<T> = layout.masses.iter().map(|&m| cost.value(m)).collect();
    // never below what the scalar type can resolve
    let tol = T::lit(config.descent_tol).max(T::epsilon() * T::lit(16.0)) * scale;
    let seeds = if layout.steiner == 0 { 1 } else { config.grid_seed_count.max(1) };
    let mut best: Option<Evaluated<T>> = None;
    for k in 0..seeds {
        let mut points = terminals.to_vec();
        points.extend(seed(terminals, layout, k, seeds, T::lit(0.1) * scale));
        let mut tree = SteinerTree::new(points, terminals.len(), layout.edges.clone(), weights.clone());
        let converged = layout.steiner == 0 || tree.optimize(tol, config.max_sweeps) < config.max_sweeps;
        let energy = tree.energy();
        if best.as_ref().is_none_or(|b| energy < b.energy) {
            best = Some(Evaluated { energy, points: tree.points() });
        }
        // the energy is convex in the positions, so a converged run is final
        if converged {
            break;
        }
    }
    best.expect("at least one seed")
}

/// Builds the flux of a layout, merging branch points that ended up on
/// another vertex.
fn layout_flux<T: Scalar>(layout: &Layout<T>, points: &[Point<T>], fixed: usize, scale: T) -> MassFlux<T> {
    let mut pts = points.to_vec();
    let snap = T::lit(1e-7) * scale;
    for s in fixed..pts.len() {
        if let Some(q) = (0..pts.len()).filter(|&i| i != s && (i < s || i < fixed)).find(|&i| pts[i].dist(&pts[s]) <= snap) {
            pts[s] = pts[q].clone();
        }
    }
    let edges = layout
        .edges
        .iter()
        .zip(&layout.masses)
        .map(|(&(u, v), &m)| FluxEdge::new(pts[u].clone(), pts[v].clone(), m))
        .collect();
    MassFlux::new(edges).expect("finite")
}

fn edge_order<T: Scalar>(f: &MassFlux<T>) -> Vec<FluxEdge<T>> {
    let mut edges = f.edges().to_vec();
    edges.sort_by(|a, b| a.tail.lex_cmp(&b.tail).then(a.head.lex_cmp(&b.head)));
    edges
}

fn lex_cmp_flux<T: Scalar>(a: &MassFlux<T>, b: &MassFlux<T>) -> std::cmp::Ordering {
    let (ea, eb) = (edge_order(a), edge_order(b));
    for (x, y) in ea.iter().zip(&eb) {
        let c = x.tail.lex_cmp(&y.tail).then(x.head.lex_cmp(&y.head)).then(crate::scalar::cmp_f(x.mass, y.mass));
        if c.is_ne() {
            return c;
        }
    }
    ea.len().cmp(&eb.len())
}

/// Minimises the Gilbert energy over trees with at most
/// `config.max_steiner` branch points.
pub fn solve_branched<T: Scalar>(
    mu_plus: &DiscreteMeasure<T>,
    mu_minus: &DiscreteMeasure<T>,
    cost: &CostFunction<T>,
    config: &BranchedConfig,
) -> Result<BranchedSolution<T>> {
    let atoms = mu_plus.len() + mu_minus.len();
    if atoms > MAX_ATOMS {
        return Err(Error::TooManyAtoms(atoms));
    }
    if config.max_steiner > 2 {
        return Err(Error::InvalidConfig(format!("max_steiner = {} exceeds 2", config.max_steiner)));
    }
    let (tp, tm) = (mu_plus.total_mass(), mu_minus.total_mass());
    if (tp - tm).abs() > T::normalization_tol() {
        return Err(Error::MassMismatch(tp.to_f64().unwrap_or(f64::NAN), tm.to_f64().unwrap_or(f64::NAN)));
    }
    let div = mu_plus.minus(mu_minus);
    let terminals: Vec<Point<T>> = div.atoms().iter().map(|a| a.point.clone()).collect();
    let masses: Vec<T> = div.atoms().iter().map(|a| a.mass).collect();
    let empty = |skipped| BranchedSolution {
        flux: MassFlux::empty(),
        value: T::zero(),
        ties: if config.report_ties { vec![MassFlux::empty()] } else { Vec::new() },
        topologies: 0,
        skipped_steiner_levels: skipped,
        exhaustive: true,
    };
    if terminals.len() < 2 {
        return Ok(empty(Vec::new()));
    }
    let n = terminals.len();
    let scale = terminals
        .iter()
        .flat_map(|p| terminals.iter().map(move |q| p.dist(q)))
        .fold(T::zero(), T::max);
    let zero = T::mass_tol() * T::lit(100.0) * (T::one() + tp);

    let mut candidates = Vec::new();
    let mut skipped = Vec::new();
    for s in 0..=config.max_steiner.min(n - 2) {
        let nodes = (n + s) as u64;
        let count = nodes.checked_pow((n + s - 2) as u32).unwrap_or(u64::MAX);
        if count > config.max_sequences {
            skipped.push(s);
            continue;
        }
        candidates.extend(layouts(&masses, s, zero).into_iter().map(|(_, l)| l));
    }
    let results: Vec<Evaluated<T>> =
        candidates.par_iter().map(|l| evaluate(&terminals, l, cost, config, scale)).collect();
    let (best_idx, best) = results
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| crate::scalar::cmp_f(a.energy, b.energy).then(i.cmp(j)))
        .expect("at least one tree");
    let flux = layout_flux(&candidates[best_idx], &best.points, n, scale);
    let value = flux.gilbert_energy(cost);

    let mut ties = Vec::new();
    if config.report_ties {
        let tol = T::lit(config.tie_tol) * (T::one() + best.energy.abs());
        for (l, r) in candidates.iter().zip(&results) {
            if r.energy - best.energy > tol {
                continue;
            }
            let f = layout_flux(l, &r.points, n, scale);
            let distinct = ties.iter().all(|t: &MassFlux<T>| {
                !(t.max_edge_deviation(&f) <= T::lit(1e-9) && f.max_edge_deviation(t) <= T::lit(1e-9))
            });
            if distinct {
                ties.push(f);
            }
        }
        ties.sort_by(lex_cmp_flux);
    }
    Ok(BranchedSolution {
        flux,
        value,
        ties,
        topologies: candidates.len(),
        exhaustive: skipped.is_empty() && config.max_steiner + 2 >= n,
        skipped_steiner_levels: skipped,
    })
}

/// `sum_e tau(m_e) u_e` over the edges at `vertex`, `u_e` the unit vector
/// from `vertex` along `e`. Vanishes at an optimally placed junction.
pub fn momentum_residual<T: Scalar>(f: &MassFlux<T>, cost: &CostFunction<T>, vertex: &Point<T>) -> Result<Point<T>> {
    let snap = T::geometry_snap();
    let known = f.edges().iter().any(|e| e.tail.dist(vertex) <= snap || e.head.dist(vertex) <= snap);
    if !known {
        return Err(Error::UnknownVertex);
    }
    if f.divergence().mass_at(vertex).abs() > T::mass_tol() * T::lit(100.0) {
        return Err(Error::TerminalVertex);
    }
    let mut r = Point::zeros(vertex.dim());
    for e in f.edges() {
        let other = if e.tail.dist(vertex) <= snap {
            &e.head
        } else if e.head.dist(vertex) <= snap {
            &e.tail
        } else {
            continue;
        };
        r = &r + &(&(other - vertex) * (cost.value(e.mass) / other.dist(vertex)));
    }
    Ok(r)
}

/// Vertices of `f` with zero divergence.
pub fn interior_vertices<T: Scalar>(f: &MassFlux<T>) -> Vec<Point<T>> {
    let div = f.divergence();
    let tol = T::mass_tol() * T::lit(100.0);
    let mut out: Vec<Point<T>> = Vec::new();
    for e in f.edges() {
        for p in [&e.tail, &e.head] {
            if div.mass_at(p).abs() <= tol && !out.iter().any(|q| q.dist(p) <= T::geometry_snap()) {
                out.push(p.clone());
            }
        }
    }
    out
}
