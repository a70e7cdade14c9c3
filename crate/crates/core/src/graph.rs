//! Random geometric graphs, vertex connectivity, and the exact critical
//! radii for minimum degree and k-connectivity.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{occupancy_cell_size, CellGrid, PointSample};

/// Undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    radius: f64,
}

impl Graph {
    /// Builds a graph from an edge list. Self-loops are rejected and
    /// duplicate edges collapsed. The radius is recorded as NaN.
    pub fn from_edges(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); vertices];
        for &(u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(Error::OutOfRange {
                    what: "edge endpoint",
                    value: u.max(v),
                    allowed: format!("0..{vertices}"),
                });
            }
            if u == v {
                return Err(Error::domain(format!("self-loop at vertex {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph {
            adjacency,
            radius: f64::NAN,
        })
    }

    pub fn complete(vertices: usize) -> Self {
        let adjacency = (0..vertices)
            .map(|v| (0..vertices).filter(|&u| u != v).collect())
            .collect();
        Graph {
            adjacency,
            radius: f64::NAN,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Build radius, or NaN for graphs not built from a sample.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adjacency.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    fn is_complete(&self) -> bool {
        let n = self.vertex_count();
        self.adjacency.iter().all(|l| l.len() + 1 == n)
    }
}

/// Graph with an edge between every pair at distance ≤ `r`.
pub fn build_rgg(sample: &PointSample, r: f64) -> Result<Graph> {
    let grid = CellGrid::new(&sample.points, grid_cell_for_radius(sample, r));
    build_rgg_on(&grid, r)
}

fn grid_cell_for_radius(sample: &PointSample, r: f64) -> f64 {
    let occ = occupancy_cell_size(&sample.points, 2.0);
    if r > 0.0 && r.is_finite() {
        r.max(occ * 0.25)
    } else {
        occ
    }
}

/// [`build_rgg`] on a prebuilt grid.
pub fn build_rgg_on(grid: &CellGrid<'_>, r: f64) -> Result<Graph> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    let adjacency = (0..grid.len())
        .map(|i| grid.neighbors_within(i, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(Graph {
        adjacency,
        radius: r,
    })
}

pub fn min_degree(g: &Graph) -> Result<usize> {
    g.adjacency
        .iter()
        .map(Vec::len)
        .min()
        .ok_or(Error::Empty("graph"))
}

/// Whether `g` is connected (vacuously true for 0 or 1 vertices).
pub fn is_connected(g: &Graph) -> bool {
    let n = g.vertex_count();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(v) = queue.pop_front() {
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                reached += 1;
                queue.push_back(u);
            }
        }
    }
    reached == n
}

/// Whether a connected graph on ≥ 3 vertices has no articulation point.
fn is_biconnected(g: &Graph) -> bool {
    let n = g.vertex_count();
    if n < 3 || !is_connected(g) {
        return false;
    }
    // Iterative DFS low-link from vertex 0.
    const UNSEEN: usize = usize::MAX;
    let mut disc = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut parent = vec![UNSEEN; n];
    let mut next_edge = vec![0usize; n];
    let mut time = 0;
    let mut root_children = 0;
    let mut stack = vec![0usize];
    disc[0] = 0;
    low[0] = 0;
    while let Some(&v) = stack.last() {
        if next_edge[v] < g.adjacency[v].len() {
            let u = g.adjacency[v][next_edge[v]];
            next_edge[v] += 1;
            if disc[u] == UNSEEN {
                time += 1;
                disc[u] = time;
                low[u] = time;
                parent[u] = v;
                if v == 0 {
                    root_children += 1;
                }
                stack.push(u);
            } else if u != parent[v] {
                low[v] = low[v].min(disc[u]);
            }
        } else {
            stack.pop();
            let p = parent[v];
            if p != UNSEEN {
                low[p] = low[p].min(low[v]);
                if p != 0 && low[v] >= disc[p] {
                    return false;
                }
            }
        }
    }
    root_children < 2
}

/// Residual network of the vertex-split digraph: vertex `v` becomes
/// `v_in = 2v` and `v_out = 2v + 1` joined by a unit arc.
struct SplitNetwork {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<u8>,
    base: Vec<u8>,
    /// `first[node]..first[node + 1]` indexes `arcs`.
    first: Vec<usize>,
    arcs: Vec<usize>,
    parent_arc: Vec<usize>,
    mark: Vec<u32>,
    stamp: u32,
}

impl SplitNetwork {
    fn new(g: &Graph) -> Self {
        let n = g.vertex_count();
        let mut head = Vec::new();
        let mut to = Vec::new();
        let mut base = Vec::new();
        let mut add = |a: usize, b: usize| {
            head.push(a);
            to.push(b);
            base.push(1u8);
            head.push(b);
            to.push(a);
            base.push(0u8);
        };
        for v in 0..n {
            add(2 * v, 2 * v + 1);
        }
        for (u, v) in g.edges() {
            add(2 * u + 1, 2 * v);
            add(2 * v + 1, 2 * u);
        }
        let nodes = 2 * n;
        let mut first = vec![0usize; nodes + 1];
        for &h in &head {
            first[h + 1] += 1;
        }
        for i in 0..nodes {
            first[i + 1] += first[i];
        }
        let mut fill = first.clone();
        let mut arcs = vec![0usize; head.len()];
        for (a, &h) in head.iter().enumerate() {
            arcs[fill[h]] = a;
            fill[h] += 1;
        }
        SplitNetwork {
            cap: base.clone(),
            head,
            to,
            base,
            first,
            arcs,
            parent_arc: vec![usize::MAX; nodes],
            mark: vec![0; nodes],
            stamp: 0,
        }
    }

    /// Number of internally vertex-disjoint `s`–`t` paths, capped at `limit`.
    /// `s` and `t` must be distinct and non-adjacent.
    fn local_connectivity(&mut self, s: usize, t: usize, limit: usize) -> usize {
        self.cap.copy_from_slice(&self.base);
        let source = 2 * s + 1;
        let sink = 2 * t;
        let mut flow = 0;
        while flow < limit && self.augment(source, sink) {
            flow += 1;
        }
        flow
    }

    fn augment(&mut self, source: usize, sink: usize) -> bool {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.fill(0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        self.mark[source] = stamp;
        let mut queue = VecDeque::from([source]);
        'bfs: while let Some(x) = queue.pop_front() {
            for &a in &self.arcs[self.first[x]..self.first[x + 1]] {
                let y = self.to[a];
                if self.cap[a] > 0 && self.mark[y] != stamp {
                    self.mark[y] = stamp;
                    self.parent_arc[y] = a;
                    if y == sink {
                        break 'bfs;
                    }
                    queue.push_back(y);
                }
            }
        }
        if self.mark[sink] != stamp {
            return false;
        }
        let mut y = sink;
        while y != source {
            let a = self.parent_arc[y];
            self.cap[a] -= 1;
            self.cap[a ^ 1] += 1;
            y = self.head[a];
        }
        true
    }
}

/// Runs the Esfahanian–Hakimi sweep with every local flow capped at
/// `target`, returning min(κ, target). Assumes the graph is not complete.
fn connectivity_capped(g: &Graph, target: usize) -> usize {
    let n = g.vertex_count();
    let v = (0..n)
        .min_by_key(|&v| g.adjacency[v].len())
        .expect("nonempty graph");
    let mut best = target.min(g.adjacency[v].len());
    if best == 0 {
        return 0;
    }
    let mut net = SplitNetwork::new(g);
    for w in 0..n {
        if w != v && !g.has_edge(v, w) {
            best = best.min(net.local_connectivity(v, w, best));
            if best == 0 {
                return 0;
            }
        }
    }
    let nbrs = g.neighbors(v);
    for (i, &x) in nbrs.iter().enumerate() {
        for &y in &nbrs[i + 1..] {
            if !g.has_edge(x, y) {
                best = best.min(net.local_connectivity(x, y, best));
            }
        }
    }
    best
}

/// Vertex connectivity κ(g), with κ(K_m) = m − 1.
pub fn vertex_connectivity(g: &Graph) -> Result<usize> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::Empty("graph"));
    }
    if g.is_complete() {
        return Ok(n - 1);
    }
    Ok(connectivity_capped(g, n))
}

/// Whether κ(g) ≥ k.
pub fn is_k_connected(g: &Graph, k: usize) -> bool {
    let n = g.vertex_count();
    if k == 0 {
        return true;
    }
    if n < k + 1 {
        return false;
    }
    if g.adjacency.iter().any(|l| l.len() < k) {
        return false;
    }
    match k {
        1 => is_connected(g),
        2 => is_biconnected(g),
        _ => g.is_complete() || connectivity_capped(g, k) >= k,
    }
}

/// The two critical radii of one sample at a common level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRadii {
    /// Least r with minimum degree ≥ `k`.
    pub rho_delta: f64,
    /// Least r with κ ≥ `k`.
    pub rho_kappa: f64,
    pub k: usize,
    pub equal: bool,
}

fn check_level(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::OutOfRange {
            what: "k",
            value: 0,
            allowed: "k ≥ 1".into(),
        });
    }
    if n < k + 1 {
        return Err(Error::TooFewPoints {
            needed: k + 1,
            actual: n,
        });
    }
    Ok(())
}

fn knn_grid(sample: &PointSample, k: usize) -> CellGrid<'_> {
    CellGrid::new(
        &sample.points,
        occupancy_cell_size(&sample.points, (k + 1) as f64),
    )
}

/// Least r at which every vertex has degree ≥ `k`: the largest
/// k-th-nearest-neighbour distance.
pub fn critical_radius_min_degree(sample: &PointSample, k: usize) -> Result<f64> {
    check_level(sample.len(), k)?;
    critical_radius_min_degree_on(&knn_grid(sample, k), k)
}

/// [`critical_radius_min_degree`] on a prebuilt grid.
pub fn critical_radius_min_degree_on(grid: &CellGrid<'_>, k: usize) -> Result<f64> {
    check_level(grid.len(), k)?;
    let mut rho = 0.0f64;
    for i in 0..grid.len() {
        rho = rho.max(grid.kth_nn_distance(i, k)?);
    }
    Ok(rho)
}

/// Least r at which the graph is k-connected.
pub fn critical_radius_k_connectivity(sample: &PointSample, k: usize) -> Result<f64> {
    Ok(critical_radii(sample, k)?.rho_kappa)
}

/// Both critical radii at level `k`.
pub fn critical_radii(sample: &PointSample, k: usize) -> Result<CriticalRadii> {
    check_level(sample.len(), k)?;
    critical_radii_on(&knn_grid(sample, k), k)
}

/// [`critical_radii`] on a prebuilt grid.
///
/// κ is monotone in r, so the search starts at ρ_δ and grows an upper
/// bracket geometrically; the answer is then found by bisection over the
/// realized pairwise distances inside the bracket.
pub fn critical_radii_on(grid: &CellGrid<'_>, k: usize) -> Result<CriticalRadii> {
    check_level(grid.len(), k)?;
    let n = grid.len();
    let rho_delta = critical_radius_min_degree_on(grid, k)?;
    let done = |rho_kappa: f64| CriticalRadii {
        rho_delta,
        rho_kappa,
        k,
        equal: rho_kappa == rho_delta,
    };
    if is_k_connected(&build_rgg_on(grid, rho_delta)?, k) {
        return Ok(done(rho_delta));
    }

    let diameter = grid.bounding_box().diagonal();
    let mut lo = rho_delta;
    let mut hi = rho_delta;
    let lists = loop {
        let next = if hi * 1.5 >= diameter {
            f64::INFINITY
        } else {
            hi * 1.5
        };
        let lists = (0..n)
            .map(|i| grid.neighbors_within_with_dist(i, next))
            .collect::<Result<Vec<_>>>()?;
        let g = graph_from_lists(&lists, f64::INFINITY, next);
        if is_k_connected(&g, k) {
            hi = next;
            break lists;
        }
        if next.is_infinite() {
            // Complete graph on n ≥ k + 1 vertices is always k-connected.
            unreachable!("complete graph failed k-connectivity");
        }
        lo = next;
        hi = next;
    };

    let mut candidates: Vec<f64> = lists
        .iter()
        .enumerate()
        .flat_map(|(i, l)| {
            l.iter()
                .filter(move |&&(j, d)| j > i && d > lo && d <= hi)
                .map(|&(_, d)| d)
        })
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // Invariant: candidates[..a] fail, candidates[b..] succeed.
    let (mut a, mut b) = (0usize, candidates.len() - 1);
    while a < b {
        let mid = a + (b - a) / 2;
        let g = graph_from_lists(&lists, candidates[mid], candidates[mid]);
        if is_k_connected(&g, k) {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    Ok(done(candidates[b]))
}

fn graph_from_lists(lists: &[Vec<(usize, f64)>], r: f64, label: f64) -> Graph {
    let adjacency = lists
        .iter()
        .map(|l| {
            l.iter()
                .filter(|&&(_, d)| d <= r)
                .map(|&(j, _)| j)
                .collect()
        })
        .collect();
    Graph {
        adjacency,
        radius: label,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn collinear() -> PointSample {
        PointSample::from_points(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(3.0, 0.0, 0.0),
        ])
    }

    fn uniform(n: usize, seed: u64) -> PointSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointSample::from_points(
            (0..n)
                .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
                .collect(),
        )
    }

    fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    /// κ by exhaustive search over vertex subsets.
    fn brute_connectivity(g: &Graph) -> usize {
        let n = g.vertex_count();
        for size in 0..n.saturating_sub(1) {
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != size {
                    continue;
                }
                if disconnected_without(g, mask) {
                    return size;
                }
            }
        }
        n.saturating_sub(1)
    }

    fn disconnected_without(g: &Graph, removed: u32) -> bool {
        let n = g.vertex_count();
        let alive: Vec<usize> = (0..n).filter(|v| removed & (1 << v) == 0).collect();
        if alive.len() < 2 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![alive[0]];
        seen[alive[0]] = true;
        while let Some(v) = stack.pop() {
            for &u in g.neighbors(v) {
                if removed & (1 << u) == 0 && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        alive.iter().any(|&v| !seen[v])
    }

    fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
        let n = rng.random_range(1..=9);
        let p: f64 = rng.random_range(0.2..0.95);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    fn pairwise(sample: &PointSample) -> Vec<f64> {
        let p = &sample.points;
        let mut d = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d.push(p[i].dist(p[j]));
            }
        }
        d.sort_by(f64::total_cmp);
        d.dedup();
        d
    }

    fn brute_graph(sample: &PointSample, r: f64) -> Graph {
        let p = &sample.points;
        let mut edges = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i].dist(p[j]) <= r {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(p.len(), &edges).unwrap()
    }

    #[test]
    fn collinear_graphs() {
        let s = collinear();
        assert_eq!(build_rgg(&s, 1.0).unwrap().edges(), vec![(0, 1)]);
        assert_eq!(build_rgg(&s, 2.0).unwrap().edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(
            build_rgg(&s, 3.0).unwrap().edges(),
            vec![(0, 1), (0, 2), (1, 2)]
        );
        assert!(build_rgg(&s, -0.5).is_err());
    }

    #[test]
    fn degree_and_connectivity_of_small_graphs() {
        assert_eq!(min_degree(&Graph::complete(4)).unwrap(), 3);
        assert_eq!(min_degree(&path(4)).unwrap(), 1);
        assert_eq!(min_degree(&Graph::complete(1)).unwrap(), 0);
        assert!(min_degree(&Graph::complete(0)).is_err());

        assert!(is_k_connected(&cycle(5), 2));
        assert!(!is_k_connected(&cycle(5), 3));
        assert!(is_k_connected(&path(4), 1));
        assert!(!is_k_connected(&path(4), 2));
        assert!(is_k_connected(&path(4), 0));

        assert_eq!(vertex_connectivity(&Graph::complete(4)).unwrap(), 3);
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(vertex_connectivity(&two).unwrap(), 0);
        assert!(!is_k_connected(&two, 1));
        assert_eq!(vertex_connectivity(&cycle(6)).unwrap(), 2);
    }

    #[test]
    fn complete_graph_convention() {
        for m in 1..6 {
            let g = Graph::complete(m);
            assert_eq!(vertex_connectivity(&g).unwrap(), m - 1);
            assert!(is_k_connected(&g, m - 1));
            assert!(!is_k_connected(&g, m));
        }
    }

    #[test]
    fn petersen_and_hypercube() {
        let outer: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let inner: Vec<_> = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5)).collect();
        let spokes: Vec<_> = (0..5).map(|i| (i, i + 5)).collect();
        let edges: Vec<_> = [outer, inner, spokes].concat();
        let petersen = Graph::from_edges(10, &edges).unwrap();
        assert_eq!(vertex_connectivity(&petersen).unwrap(), 3);
        assert!(is_k_connected(&petersen, 3));
        assert!(!is_k_connected(&petersen, 4));

        let cube: Vec<_> = (0..16usize)
            .flat_map(|v| {
                (0..4)
                    .map(move |b| (v, v ^ (1 << b)))
                    .filter(|(a, b)| a < b)
            })
            .collect();
        let q4 = Graph::from_edges(16, &cube).unwrap();
        assert_eq!(vertex_connectivity(&q4).unwrap(), 4);
    }

    #[test]
    fn articulation_point_detection() {
        // Two triangles sharing vertex 2.
        let bowtie =
            Graph::from_edges(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]).unwrap();
        assert!(is_k_connected(&bowtie, 1));
        assert!(!is_k_connected(&bowtie, 2));
        assert_eq!(vertex_connectivity(&bowtie).unwrap(), 1);
    }

    #[test]
    fn connectivity_matches_exhaustive_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let g = random_graph(&mut rng);
            let kappa = brute_connectivity(&g);
            assert_eq!(vertex_connectivity(&g).unwrap(), kappa, "{:?}", g.edges());
            for k in 0..=g.vertex_count() {
                assert_eq!(is_k_connected(&g, k), k <= kappa, "k={k} {:?}", g.edges());
            }
        }
    }

    #[test]
    fn collinear_critical_radii() {
        let s = collinear();
        assert_eq!(critical_radius_min_degree(&s, 1).unwrap(), 2.0);
        assert_eq!(critical_radius_min_degree(&s, 2).unwrap(), 3.0);
        assert_eq!(critical_radius_k_connectivity(&s, 1).unwrap(), 2.0);
        assert_eq!(critical_radius_k_connectivity(&s, 2).unwrap(), 3.0);
        assert!(critical_radius_min_degree(&s, 3).is_err());
        assert!(critical_radius_k_connectivity(&s, 0).is_err());
    }

    /// Pairs sorted by distance; the radius at which the running degree
    /// count first reaches `k` everywhere.
    fn degree_scan(s: &PointSample, k: usize) -> f64 {
        let p = &s.points;
        let mut pairs = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                pairs.push((p[i].dist(p[j]), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut deg = vec![0usize; p.len()];
        let mut short = p.len();
        for (d, i, j) in pairs {
            for v in [i, j] {
                deg[v] += 1;
                if deg[v] == k {
                    short -= 1;
                }
            }
            if short == 0 {
                return d;
            }
        }
        unreachable!()
    }

    #[test]
    fn min_degree_radius_matches_scan() {
        for seed in 0..10 {
            let s = uniform(200, seed);
            for k in 1..=3 {
                assert_eq!(
                    critical_radius_min_degree(&s, k).unwrap(),
                    degree_scan(&s, k)
                );
            }
        }
    }

    #[test]
    fn connectivity_radius_matches_scan() {
        for seed in 100..104 {
            let s = uniform(60, seed);
            let dists = pairwise(&s);
            for k in 1..=3 {
                let start = degree_scan(&s, k);
                let oracle = dists
                    .iter()
                    .copied()
                    .filter(|&r| r >= start)
                    .find(|&r| brute_connectivity_large(&brute_graph(&s, r), k) >= k)
                    .unwrap();
                let cr = critical_radii(&s, k).unwrap();
                assert_eq!(cr.rho_kappa, oracle, "seed={seed} k={k}");
                assert!(cr.rho_kappa >= cr.rho_delta);
            }
        }
    }

    /// min(κ, cap) for graphs too large for subset enumeration: min over
    /// all non-adjacent pairs of a max-flow.
    fn brute_connectivity_large(g: &Graph, cap: usize) -> usize {
        let n = g.vertex_count();
        if g.is_complete() {
            return n - 1;
        }
        let mut net = SplitNetwork::new(g);
        let mut best = n - 1;
        for s in 0..n {
            for t in s + 1..n {
                if !g.has_edge(s, t) {
                    best = best.min(net.local_connectivity(s, t, cap));
                }
            }
        }
        best
    }

    #[test]
    fn k_connectivity_search_handles_gap_above_min_degree() {
        // Two dense clusters joined only when r reaches the gap.
        let mut pts = Vec::new();
        for i in 0..6 {
            let t = i as f64 * 0.1;
            pts.push(Point3::new(t, (i % 2) as f64 * 0.1, 0.0));
            pts.push(Point3::new(5.0 + t, (i % 2) as f64 * 0.1, 0.0));
        }
        let s = PointSample::from_points(pts);
        let cr = critical_radii(&s, 1).unwrap();
        assert!(cr.rho_delta < 0.2);
        assert!(cr.rho_kappa > 4.0);
        assert!(!cr.equal);
        let oracle = pairwise(&s)
            .into_iter()
            .find(|&r| brute_connectivity_large(&brute_graph(&s, r), 1) >= 1)
            .unwrap();
        assert_eq!(cr.rho_kappa, oracle);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn critical_radii_invariants(seed in any::<u64>(), n in 4usize..40, k in 1usize..3) {
            let s = uniform(n, seed);
            let cr = critical_radii(&s, k).unwrap();
            prop_assert!(cr.rho_kappa >= cr.rho_delta);
            let dists = pairwise(&s);
            prop_assert!(dists.contains(&cr.rho_delta));
            prop_assert!(dists.contains(&cr.rho_kappa));

            let at = |r: f64| build_rgg(&s, r).unwrap();
            prop_assert!(min_degree(&at(cr.rho_delta)).unwrap() >= k);
            prop_assert!(is_k_connected(&at(cr.rho_kappa), k));
            let pos = dists.iter().position(|&d| d == cr.rho_delta).unwrap();
            if pos > 0 {
                prop_assert!(min_degree(&at(dists[pos - 1])).unwrap() < k);
            }
            let pos = dists.iter().position(|&d| d == cr.rho_kappa).unwrap();
            if pos > 0 {
                prop_assert!(!is_k_connected(&at(dists[pos - 1]), k));
            }
        }

        #[test]
        fn rgg_monotone_and_kappa_below_delta(seed in any::<u64>(), n in 2usize..50, r1 in 0.0f64..0.8, dr in 0.0f64..0.5) {
            let s = uniform(n, seed);
            let g1 = build_rgg(&s, r1).unwrap();
            let g2 = build_rgg(&s, r1 + dr).unwrap();
            for (u, v) in g1.edges() {
                prop_assert!(g2.has_edge(u, v));
            }
            prop_assert_eq!(&g1, &brute_graph(&s, r1).with_radius(r1));
            prop_assert!(vertex_connectivity(&g1).unwrap() <= min_degree(&g1).unwrap());
        }
    }

    impl Graph {
        fn with_radius(mut self, r: f64) -> Self {
            self.radius = r;
            self
        }
    }
}
