//! Brute-force oracles shared by the integration tests. Each one follows a
//! definition directly; only `Point3::dist` is shared with the library, so
//! that radii can be compared for exact equality.

#![allow(dead_code)]

use rand::Rng;
use rgg_core::Point3;

pub fn uniform_points<R: Rng>(rng: &mut R, n: usize) -> Vec<Point3> {
    (0..n)
        .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
        .collect()
}

/// Sorted distances from point `i` to every other point.
pub fn sorted_distances_from(points: &[Point3], i: usize) -> Vec<f64> {
    let mut d: Vec<f64> = (0..points.len())
        .filter(|&j| j != i)
        .map(|j| points[i].dist(points[j]))
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

/// All pairwise distances `(d, i, j)` with `i < j`, ascending.
pub fn sorted_pairs(points: &[Point3]) -> Vec<(f64, usize, usize)> {
    let mut pairs = Vec::with_capacity(points.len() * points.len() / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            pairs.push((points[i].dist(points[j]), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Least pairwise distance at which every vertex has degree ≥ k, found by
/// adding edges in distance order.
pub fn degree_scan(points: &[Point3], k: usize) -> f64 {
    let mut deg = vec![0usize; points.len()];
    let mut short = points.len();
    for (d, i, j) in sorted_pairs(points) {
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
    panic!("degree {k} unreachable with {} points", points.len());
}

pub fn brute_adjacency(points: &[Point3], r: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); points.len()];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].dist(points[j]) <= r {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Whether the graph minus `removed` is connected (an empty or single
/// vertex remainder counts as connected).
pub fn connected_without(adj: &[Vec<usize>], removed: &[bool]) -> bool {
    let alive: Vec<usize> = (0..adj.len()).filter(|&v| !removed[v]).collect();
    let Some(&start) = alive.first() else {
        return true;
    };
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut stack = vec![start];
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !removed[u] && !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == alive.len()
}

/// k-connectivity straight from the definition: more than k vertices and
/// no set of k − 1 vertices whose removal disconnects the graph.
pub fn k_connected_by_definition(adj: &[Vec<usize>], k: usize) -> bool {
    let n = adj.len();
    if k == 0 {
        return true;
    }
    if n < k + 1 {
        return false;
    }
    let mut removed = vec![false; n];
    fn rec(adj: &[Vec<usize>], removed: &mut [bool], start: usize, left: usize) -> bool {
        if left == 0 {
            return connected_without(adj, removed);
        }
        for v in start..adj.len() {
            removed[v] = true;
            let ok = rec(adj, removed, v + 1, left - 1);
            removed[v] = false;
            if !ok {
                return false;
            }
        }
        true
    }
    rec(adj, &mut removed, 0, k - 1)
}

/// κ by trying every vertex subset in increasing size; `n − 1` if no
/// subset disconnects the graph.
pub fn connectivity_exhaustive(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    assert!(n <= 16);
    for size in 0..n.saturating_sub(1) {
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let removed: Vec<bool> = (0..n).map(|v| mask & (1 << v) != 0).collect();
            if !connected_without(adj, &removed) {
                return size;
            }
        }
    }
    n.saturating_sub(1)
}

/// Least pairwise distance at which the graph is k-connected, scanning all
/// distances upward from the min-degree radius (k-connectivity needs
/// minimum degree ≥ k).
pub fn k_connectivity_scan(points: &[Point3], k: usize) -> f64 {
    let start = degree_scan(points, k);
    let mut dists: Vec<f64> = sorted_pairs(points)
        .into_iter()
        .map(|p| p.0)
        .filter(|&d| d >= start)
        .collect();
    dists.dedup();
    for r in dists {
        if k_connected_by_definition(&brute_adjacency(points, r), k) {
            return r;
        }
    }
    panic!("never {k}-connected");
}

/// Random graph on 1..=max_n vertices with a random edge density.
pub fn random_edges<R: Rng>(rng: &mut R, max_n: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.random_range(1..=max_n);
    let p: f64 = rng.random_range(0.1..0.95);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    (n, edges)
}

pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}

/// Uniform point in the ball of radius `r` about the origin by rejection
/// from the enclosing cube.
fn in_ball<R: Rng>(rng: &mut R, r: f64) -> [f64; 3] {
    loop {
        let p = [
            rng.random_range(-r..r),
            rng.random_range(-r..r),
            rng.random_range(-r..r),
        ];
        if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= r * r {
            return p;
        }
    }
}

/// Monte Carlo estimate and standard error of a sub-volume of the ball of
/// radius `r`, given as a membership test.
pub fn mc_ball_fraction<R: Rng, F: Fn([f64; 3]) -> bool>(
    rng: &mut R,
    r: f64,
    samples: usize,
    inside: F,
) -> (f64, f64) {
    let hits = (0..samples).filter(|_| inside(in_ball(rng, r))).count();
    let vol = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    let f = hits as f64 / samples as f64;
    (vol * f, vol * (f * (1.0 - f) / samples as f64).sqrt())
}

/// `|B(0, r) ∩ {x₁ ≤ s}|` by Monte Carlo.
pub fn mc_halfspace_clip<R: Rng>(rng: &mut R, r: f64, s: f64, samples: usize) -> (f64, f64) {
    mc_ball_fraction(rng, r, samples, |p| p[0] <= s)
}

/// Part of the half of `B(0, r)` facing `y = (d, 0, 0)` outside `B(y, r)`,
/// by Monte Carlo.
pub fn mc_lens_deficit<R: Rng>(rng: &mut R, r: f64, d: f64, samples: usize) -> (f64, f64) {
    mc_ball_fraction(rng, r, samples, |p| {
        p[0] >= 0.0 && (p[0] - d).powi(2) + p[1] * p[1] + p[2] * p[2] > r * r
    })
}
