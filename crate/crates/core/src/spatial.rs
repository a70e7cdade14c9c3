//! Uniform cell grid over a point sample: exact k-nearest-neighbour
//! distances and fixed-radius neighbour queries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3};

/// How a point sample was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    /// Exactly `n` i.i.d. uniform points.
    #[default]
    Binomial,
    /// Poisson(`n`·|Ω|) many i.i.d. uniform points.
    Poisson,
}

impl std::fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProcessKind::Binomial => "binomial",
            ProcessKind::Poisson => "poisson",
        })
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binomial" => Ok(ProcessKind::Binomial),
            "poisson" => Ok(ProcessKind::Poisson),
            other => Err(Error::Config(format!(
                "unknown process `{other}` (expected binomial or poisson)"
            ))),
        }
    }
}

/// A realized point process with its generation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub points: Vec<Point3>,
    /// Region token the sample was drawn from.
    pub region: String,
    pub process: ProcessKind,
    pub seed: u64,
    /// `n` of the binomial process, or the Poisson intensity.
    pub n_param: u64,
}

impl PointSample {
    /// Wraps hand-made points as a binomial sample.
    pub fn from_points(points: Vec<Point3>) -> Self {
        let n = points.len() as u64;
        PointSample {
            points,
            region: "custom".into(),
            process: ProcessKind::Binomial,
            seed: 0,
            n_param: n,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounding_box(&self) -> Aabb {
        bbox_of(&self.points)
    }
}

fn bbox_of(points: &[Point3]) -> Aabb {
    if points.is_empty() {
        return Aabb {
            min: Point3::ORIGIN,
            max: Point3::ORIGIN,
        };
    }
    let mut min = points[0];
    let mut max = points[0];
    for p in &points[1..] {
        min = Point3::new(min.x.min(p.x), min.y.min(p.y), min.z.min(p.z));
        max = Point3::new(max.x.max(p.x), max.y.max(p.y), max.z.max(p.z));
    }
    Aabb { min, max }
}

/// Cell edge length for a grid serving radius-`r` queries: `r` clamped to
/// `[extent/128, extent/4]` of the longest bounding-box side.
pub fn default_cell_size(expected_radius: f64, bbox: &Aabb) -> f64 {
    let e = bbox.extent();
    let longest = e.x.max(e.y).max(e.z);
    if longest <= 0.0 {
        return 1.0;
    }
    let r = if expected_radius.is_finite() && expected_radius > 0.0 {
        expected_radius
    } else {
        longest / 16.0
    };
    r.clamp(longest / 128.0, longest / 4.0)
}

/// Cell size giving roughly `per_cell` points per occupied cell.
pub fn occupancy_cell_size(points: &[Point3], per_cell: f64) -> f64 {
    let bb = bbox_of(points);
    let e = bb.extent();
    let longest = e.x.max(e.y).max(e.z);
    if points.len() < 2 || longest <= 0.0 {
        return 1.0;
    }
    let vol = (e.x.max(longest * 1e-3)) * (e.y.max(longest * 1e-3)) * (e.z.max(longest * 1e-3));
    (vol * per_cell / points.len() as f64).cbrt()
}

/// Immutable bucket grid over a borrowed point set.
#[derive(Debug, Clone)]
pub struct CellGrid<'a> {
    points: &'a [Point3],
    origin: Point3,
    cell: f64,
    dims: [usize; 3],
    /// `starts[c]..starts[c + 1]` indexes `order` for cell `c`.
    starts: Vec<u32>,
    order: Vec<u32>,
    coords: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Builds a grid over a sample.
pub fn build_grid(sample: &PointSample, cell_size: f64) -> CellGrid<'_> {
    CellGrid::new(&sample.points, cell_size)
}

impl<'a> CellGrid<'a> {
    /// Builds the grid. The effective cell size may be enlarged so that the
    /// cell count stays proportional to the point count; query results do
    /// not depend on it.
    pub fn new(points: &'a [Point3], cell_size: f64) -> Self {
        let bb = bbox_of(points);
        let e = bb.extent();
        let mut cell = if cell_size.is_finite() && cell_size > 0.0 {
            cell_size
        } else {
            1.0
        };
        let budget = (8 * points.len()).max(64) as f64;
        let count = |c: f64| [e.x, e.y, e.z].map(|v| (v / c).floor() + 1.0);
        loop {
            let d = count(cell);
            if d[0] * d[1] * d[2] <= budget {
                break;
            }
            cell *= 1.25;
        }
        let d = count(cell);
        let dims = [d[0] as usize, d[1] as usize, d[2] as usize];
        let origin = bb.min;
        let coords: Vec<[usize; 3]> = points
            .iter()
            .map(|p| {
                let rel = [
                    (p.x - origin.x) / cell,
                    (p.y - origin.y) / cell,
                    (p.z - origin.z) / cell,
                ];
                [0, 1, 2].map(|a| (rel[a].floor().max(0.0) as usize).min(dims[a] - 1))
            })
            .collect();
        let n_cells = dims[0] * dims[1] * dims[2];
        let flat = |c: [usize; 3]| (c[2] * dims[1] + c[1]) * dims[0] + c[0];
        let mut starts = vec![0u32; n_cells + 1];
        for c in &coords {
            starts[flat(*c) + 1] += 1;
        }
        for i in 0..n_cells {
            starts[i + 1] += starts[i];
        }
        let mut fill = starts.clone();
        let mut order = vec![0u32; points.len()];
        // Ascending point index within each bucket.
        for (i, c) in coords.iter().enumerate() {
            let slot = &mut fill[flat(*c)];
            order[*slot as usize] = i as u32;
            *slot += 1;
        }
        CellGrid {
            points,
            origin,
            cell,
            dims,
            starts,
            order,
            coords,
        }
    }

    pub fn points(&self) -> &'a [Point3] {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bounding box of the indexed points.
    pub fn bounding_box(&self) -> Aabb {
        bbox_of(self.points)
    }

    /// Effective cell edge length.
    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    fn bucket(&self, c: [usize; 3]) -> &[u32] {
        let f = self.flat(c);
        &self.order[self.starts[f] as usize..self.starts[f + 1] as usize]
    }

    /// Bucket sizes, one per cell.
    pub fn bucket_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.starts.windows(2).map(|w| (w[1] - w[0]) as usize)
    }

    pub fn occupied_cells(&self) -> usize {
        self.bucket_sizes().filter(|&s| s > 0).count()
    }

    /// Cell coordinates of point `i`.
    pub fn cell_of(&self, i: usize) -> [usize; 3] {
        self.coords[i]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.points.len() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "point index",
                value: i,
                allowed: format!("0..{}", self.points.len()),
            })
        }
    }

    /// The `k` nearest other points of point `i`, ascending by distance
    /// (ties by index).
    pub fn k_nearest(&self, i: usize, k: usize) -> Result<Vec<(f64, usize)>> {
        self.check_index(i)?;
        let n = self.points.len();
        if k == 0 || k >= n {
            return Err(Error::OutOfRange {
                what: "k",
                value: k,
                allowed: format!("1..={}", n.saturating_sub(1)),
            });
        }
        let p = self.points[i];
        let home = self.coords[i];
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let max_shell = self.dims.iter().copied().max().unwrap_or(1);
        for shell in 0..=max_shell {
            self.for_each_cell_in_shell(home, shell, |c| {
                for &j in self.bucket(c) {
                    let j = j as usize;
                    if j == i {
                        continue;
                    }
                    let cand = Candidate {
                        dist: p.dist(self.points[j]),
                        index: j,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            });
            if heap.len() == k {
                let worst = heap.peek().expect("heap is full").dist;
                if worst <= self.unexplored_bound(p, home, shell) {
                    break;
                }
            }
        }
        let mut out: Vec<(f64, usize)> = heap.into_iter().map(|c| (c.dist, c.index)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(out)
    }

    /// Distance from point `i` to its `k`-th nearest other point.
    pub fn kth_nn_distance(&self, i: usize, k: usize) -> Result<f64> {
        Ok(self.k_nearest(i, k)?.last().expect("k ≥ 1").0)
    }

    /// Lower bound on the distance from `p` to any point in a cell outside
    /// the block of Chebyshev radius `shell` around `home`.
    fn unexplored_bound(&self, p: Point3, home: [usize; 3], shell: usize) -> f64 {
        let pc = p.to_array();
        let o = self.origin.to_array();
        let mut bound = f64::INFINITY;
        for a in 0..3 {
            if home[a] > shell {
                let edge = o[a] + (home[a] - shell) as f64 * self.cell;
                bound = bound.min(pc[a] - edge);
            }
            if home[a] + shell + 1 < self.dims[a] {
                let edge = o[a] + (home[a] + shell + 1) as f64 * self.cell;
                bound = bound.min(edge - pc[a]);
            }
        }
        bound.max(0.0)
    }

    fn for_each_cell_in_shell<F: FnMut([usize; 3])>(
        &self,
        home: [usize; 3],
        shell: usize,
        mut f: F,
    ) {
        let s = shell as isize;
        let h = home.map(|v| v as isize);
        let d = self.dims.map(|v| v as isize);
        let range = |a: usize| (h[a] - s).max(0)..=(h[a] + s).min(d[a] - 1);
        for z in range(2) {
            let on_z = (z - h[2]).abs() == s;
            for y in range(1) {
                let on_y = on_z || (y - h[1]).abs() == s;
                if on_y {
                    for x in range(0) {
                        f([x as usize, y as usize, z as usize]);
                    }
                } else {
                    for x in [h[0] - s, h[0] + s] {
                        if x >= 0 && x < d[0] {
                            f([x as usize, y as usize, z as usize]);
                        }
                        if s == 0 {
                            break;
                        }
                    }
                }
            }
        }
    }

    /// All `j ≠ i` with `dist(i, j) ≤ r` together with the distance,
    /// sorted by index.
    pub fn neighbors_within_with_dist(&self, i: usize, r: f64) -> Result<Vec<(usize, f64)>> {
        self.check_index(i)?;
        if !(r >= 0.0) {
            return Err(Error::domain(format!(
                "query radius must be nonnegative, got {r}"
            )));
        }
        let p = self.points[i];
        let pc = p.to_array();
        let o = self.origin.to_array();
        let lo_hi = |a: usize| {
            let lo = ((pc[a] - r - o[a]) / self.cell).floor();
            let hi = ((pc[a] + r - o[a]) / self.cell).floor();
            let lo = if lo.is_finite() {
                lo.max(0.0) as usize
            } else {
                0
            };
            let hi = if hi.is_finite() {
                (hi.max(0.0) as usize).min(self.dims[a] - 1)
            } else {
                self.dims[a] - 1
            };
            (lo, hi)
        };
        let (x0, x1) = lo_hi(0);
        let (y0, y1) = lo_hi(1);
        let (z0, z1) = lo_hi(2);
        let mut out = Vec::new();
        for z in z0..=z1 {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    for &j in self.bucket([x, y, z]) {
                        let j = j as usize;
                        if j != i {
                            let d = p.dist(self.points[j]);
                            if d <= r {
                                out.push((j, d));
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable_by_key(|&(j, _)| j);
        Ok(out)
    }

    /// All `j ≠ i` with `dist(i, j) ≤ r`, sorted by index.
    pub fn neighbors_within(&self, i: usize, r: f64) -> Result<Vec<usize>> {
        Ok(self
            .neighbors_within_with_dist(i, r)?
            .into_iter()
            .map(|(j, _)| j)
            .collect())
    }
}
