//! Convex regions of R³, uniform sampling, and ball-intersection volumes.
//!
//! Regions are normalized to unit volume before use. Boxes occupy
//! `[0, lx] × [0, ly] × [0, lz]`; balls and ellipsoids are centred at the
//! origin; polytopes are intersections of halfspaces `n · x ≤ offset`.
//! All regions are closed: boundary points are members.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, UnitBall};

use crate::error::{Error, Result};
use crate::quadrature::composite_rule;

/// Default number of low-discrepancy points used by the clipped-volume
/// integrator.
pub const DEFAULT_QMC_POINTS: usize = 32_768;

/// Attempt cap for rejection sampling from the bounding box.
pub const REJECTION_ATTEMPT_CAP: usize = 1_000_000;

const POLYTOPE_EPS: f64 = 1e-9;
const BALL_BOX_REL_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Euclidean distance. Symmetric bit-for-bit: `a.dist(b) == b.dist(a)`.
    pub fn dist(self, o: Point3) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// The closed halfspace `normal · x ≤ offset`, with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    pub normal: Point3,
    pub offset: f64,
}

impl Halfspace {
    /// Builds a halfspace, rescaling so the normal has unit length.
    pub fn new(normal: Point3, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0) || !offset.is_finite() {
            return Err(Error::DegenerateRegion(format!(
                "halfspace normal ({}, {}, {}) with offset {offset} is not usable",
                normal.x, normal.y, normal.z
            )));
        }
        Ok(Halfspace {
            normal: normal * (1.0 / len),
            offset: offset / len,
        })
    }

    /// Signed slack `offset − normal · p`; nonnegative inside.
    pub fn slack(&self, p: Point3) -> f64 {
        self.offset - self.normal.dot(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }
}

/// Raw shape parameters, before normalization to unit volume.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSpec {
    Ball { radius: f64 },
    Box { sides: [f64; 3] },
    Ellipsoid { semi_axes: [f64; 3] },
    Polytope { halfspaces: Vec<Halfspace> },
}

impl RegionSpec {
    /// Parses the region grammar: `ball`, `cube`, `box:LX,LY,LZ`,
    /// `ellipsoid:A,B,C` or `polytope:<path>`.
    pub fn parse(token: &str) -> Result<Self> {
        let bad = |reason: &str| Error::RegionSpec {
            token: token.to_string(),
            reason: reason.to_string(),
        };
        let (kind, args) = match token.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (token.trim(), None),
        };
        match (kind, args) {
            ("ball", None) => Ok(RegionSpec::Ball { radius: 1.0 }),
            ("cube", None) => Ok(RegionSpec::Box { sides: [1.0; 3] }),
            ("box", Some(a)) => Ok(RegionSpec::Box {
                sides: parse_triple(a).map_err(|e| bad(&e))?,
            }),
            ("ellipsoid", Some(a)) => Ok(RegionSpec::Ellipsoid {
                semi_axes: parse_triple(a).map_err(|e| bad(&e))?,
            }),
            ("polytope", Some(path)) if !path.is_empty() => RegionSpec::from_halfspace_file(path),
            ("ball" | "cube", Some(_)) => Err(bad("takes no parameters")),
            ("box" | "ellipsoid" | "polytope", None) => Err(bad("missing parameters after `:`")),
            _ => Err(bad(
                "unknown region kind (expected ball, cube, box, ellipsoid or polytope)",
            )),
        }
    }

    /// Reads one halfspace per line as `nx ny nz offset`. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_halfspace_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut halfspaces = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |reason: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| parse_err(format!("`{t}`: {e}")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != 4 {
                return Err(parse_err(format!(
                    "expected 4 numbers, found {}",
                    vals.len()
                )));
            }
            let h = Halfspace::new(Point3::new(vals[0], vals[1], vals[2]), vals[3])
                .map_err(|e| parse_err(e.to_string()))?;
            halfspaces.push(h);
        }
        if halfspaces.len() < 4 {
            return Err(Error::DegenerateRegion(format!(
                "{}: a bounded polytope needs at least 4 halfspaces, found {}",
                path.display(),
                halfspaces.len()
            )));
        }
        Ok(RegionSpec::Polytope { halfspaces })
    }
}

impl FromStr for RegionSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RegionSpec::parse(s)
    }
}

fn parse_triple(args: &str) -> std::result::Result<[f64; 3], String> {
    let vals: Vec<f64> = args
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("`{}`: {e}", t.trim()))
        })
        .collect::<std::result::Result<_, _>>()?;
    if vals.len() != 3 {
        return Err(format!(
            "expected 3 comma-separated values, found {}",
            vals.len()
        ));
    }
    if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err("all parameters must be positive and finite".into());
    }
    Ok([vals[0], vals[1], vals[2]])
}

/// Concrete shape of a normalized region.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Ball centred at the origin.
    Ball { radius: f64 },
    /// Box `[0, sides[0]] × [0, sides[1]] × [0, sides[2]]`.
    Box { sides: [f64; 3] },
    /// Axis-aligned ellipsoid centred at the origin.
    Ellipsoid { semi_axes: [f64; 3] },
    /// Intersection of halfspaces, with its vertex set.
    Polytope {
        halfspaces: Vec<Halfspace>,
        vertices: Vec<Point3>,
    },
}

impl Shape {
    fn kind_name(&self) -> &'static str {
        match self {
            Shape::Ball { .. } => "ball",
            Shape::Box { .. } => "box",
            Shape::Ellipsoid { .. } => "ellipsoid",
            Shape::Polytope { .. } => "polytope",
        }
    }
}

/// A unit-volume convex body.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRegion {
    shape: Shape,
    volume: f64,
    surface_area: f64,
    bbox: Aabb,
}

impl fmt::Display for ConvexRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Ball { radius } => write!(f, "ball(R={radius})"),
            Shape::Box { sides } => write!(f, "box({}x{}x{})", sides[0], sides[1], sides[2]),
            Shape::Ellipsoid { semi_axes: a } => write!(f, "ellipsoid({},{},{})", a[0], a[1], a[2]),
            Shape::Polytope { halfspaces, .. } => write!(f, "polytope({} faces)", halfspaces.len()),
        }
    }
}

/// Scales a raw shape isotropically so that its volume is one.
pub fn normalize_unit_volume(spec: &RegionSpec) -> Result<ConvexRegion> {
    let raw = measure(spec)?;
    if !(raw.volume.is_finite() && raw.volume > 0.0) {
        return Err(Error::DegenerateRegion(format!(
            "{} has volume {}",
            raw.shape.kind_name(),
            raw.volume
        )));
    }
    let s = raw.volume.cbrt().recip();
    let shape = scale_shape(&raw.shape, s);
    let region = build(shape, raw.surface_area * s * s)?;
    if (region.volume - 1.0).abs() > 1e-9 {
        return Err(Error::DegenerateRegion(format!(
            "normalized volume {} differs from 1",
            region.volume
        )));
    }
    Ok(region)
}

struct Measured {
    shape: Shape,
    volume: f64,
    surface_area: f64,
}

fn measure(spec: &RegionSpec) -> Result<Measured> {
    let positive = |vals: &[f64], what: &str| -> Result<()> {
        if vals.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::DegenerateRegion(format!(
                "{what} parameters must be positive and finite: {vals:?}"
            )))
        }
    };
    match spec {
        RegionSpec::Ball { radius } => {
            positive(&[*radius], "ball")?;
            Ok(Measured {
                shape: Shape::Ball { radius: *radius },
                volume: 4.0 * PI * radius.powi(3) / 3.0,
                surface_area: 4.0 * PI * radius * radius,
            })
        }
        RegionSpec::Box { sides } => {
            positive(sides, "box")?;
            let [a, b, c] = *sides;
            Ok(Measured {
                shape: Shape::Box { sides: *sides },
                volume: a * b * c,
                surface_area: 2.0 * (a * b + b * c + a * c),
            })
        }
        RegionSpec::Ellipsoid { semi_axes } => {
            positive(semi_axes, "ellipsoid")?;
            let [a, b, c] = *semi_axes;
            Ok(Measured {
                shape: Shape::Ellipsoid {
                    semi_axes: *semi_axes,
                },
                volume: 4.0 * PI * a * b * c / 3.0,
                surface_area: ellipsoid_surface_area(*semi_axes),
            })
        }
        RegionSpec::Polytope { halfspaces } => {
            let poly = polytope_geometry(halfspaces)?;
            Ok(Measured {
                shape: Shape::Polytope {
                    halfspaces: halfspaces.clone(),
                    vertices: poly.vertices,
                },
                volume: poly.volume,
                surface_area: poly.surface_area,
            })
        }
    }
}

fn scale_shape(shape: &Shape, s: f64) -> Shape {
    match shape {
        Shape::Ball { radius } => Shape::Ball { radius: radius * s },
        Shape::Box { sides } => Shape::Box {
            sides: sides.map(|v| v * s),
        },
        Shape::Ellipsoid { semi_axes } => Shape::Ellipsoid {
            semi_axes: semi_axes.map(|v| v * s),
        },
        Shape::Polytope {
            halfspaces,
            vertices,
        } => Shape::Polytope {
            halfspaces: halfspaces
                .iter()
                .map(|h| Halfspace {
                    normal: h.normal,
                    offset: h.offset * s,
                })
                .collect(),
            vertices: vertices.iter().map(|&v| v * s).collect(),
        },
    }
}

fn build(shape: Shape, surface_area: f64) -> Result<ConvexRegion> {
    let (volume, bbox) = match &shape {
        Shape::Ball { radius } => (
            4.0 * PI * radius.powi(3) / 3.0,
            Aabb {
                min: Point3::new(-radius, -radius, -radius),
                max: Point3::new(*radius, *radius, *radius),
            },
        ),
        Shape::Box { sides } => (
            sides[0] * sides[1] * sides[2],
            Aabb {
                min: Point3::ORIGIN,
                max: Point3::from_array(*sides),
            },
        ),
        Shape::Ellipsoid { semi_axes: a } => (
            4.0 * PI * a[0] * a[1] * a[2] / 3.0,
            Aabb {
                min: Point3::new(-a[0], -a[1], -a[2]),
                max: Point3::from_array(*a),
            },
        ),
        Shape::Polytope {
            halfspaces,
            vertices,
        } => {
            let poly = polytope_geometry(halfspaces)?;
            debug_assert_eq!(poly.vertices.len(), vertices.len());
            (poly.volume, vertex_bbox(&poly.vertices))
        }
    };
    if !(surface_area.is_finite() && surface_area > 0.0) {
        return Err(Error::DegenerateRegion(format!(
            "surface area {surface_area}"
        )));
    }
    Ok(ConvexRegion {
        shape,
        volume,
        surface_area,
        bbox,
    })
}

impl ConvexRegion {
    /// The unit cube `[0,1]³`.
    pub fn unit_cube() -> Self {
        normalize_unit_volume(&RegionSpec::Box { sides: [1.0; 3] }).expect("unit cube is valid")
    }

    /// The unit-volume ball centred at the origin.
    pub fn unit_ball() -> Self {
        normalize_unit_volume(&RegionSpec::Ball { radius: 1.0 }).expect("unit ball is valid")
    }

    /// Parses a region token and normalizes it.
    pub fn from_token(token: &str) -> Result<Self> {
        normalize_unit_volume(&RegionSpec::parse(token)?)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn surface_area(&self) -> f64 {
        self.surface_area
    }

    pub fn bounding_box(&self) -> Aabb {
        self.bbox
    }

    pub fn contains(&self, p: Point3) -> bool {
        match &self.shape {
            Shape::Ball { radius } => p.dot(p) <= radius * radius,
            Shape::Box { sides } => {
                let c = p.to_array();
                (0..3).all(|i| c[i] >= 0.0 && c[i] <= sides[i])
            }
            Shape::Ellipsoid { semi_axes: a } => {
                let q = (p.x / a[0]).powi(2) + (p.y / a[1]).powi(2) + (p.z / a[2]).powi(2);
                q <= 1.0
            }
            Shape::Polytope { halfspaces, .. } => {
                let tol = 1e-12 * (1.0 + self.bbox.diagonal());
                halfspaces.iter().all(|h| h.slack(p) >= -tol)
            }
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn dist_to_boundary(&self, p: Point3) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::OutsideRegion(p));
        }
        let d = match &self.shape {
            Shape::Ball { radius } => radius - p.norm(),
            Shape::Box { sides } => {
                let c = p.to_array();
                (0..3)
                    .map(|i| c[i].min(sides[i] - c[i]))
                    .fold(f64::INFINITY, f64::min)
            }
            Shape::Ellipsoid { semi_axes } => ellipsoid_distance(*semi_axes, p),
            Shape::Polytope { halfspaces, .. } => halfspaces
                .iter()
                .map(|h| h.slack(p))
                .fold(f64::INFINITY, f64::min),
        };
        Ok(d.max(0.0))
    }

    /// Radius of the largest ball contained in the region.
    pub fn inradius(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => *radius,
            Shape::Box { sides } => 0.5 * sides.iter().copied().fold(f64::INFINITY, f64::min),
            Shape::Ellipsoid { semi_axes } => {
                semi_axes.iter().copied().fold(f64::INFINITY, f64::min)
            }
            Shape::Polytope { halfspaces, .. } => chebyshev_radius(halfspaces),
        }
    }

    /// Draws one point uniformly from the region.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point3> {
        match &self.shape {
            Shape::Ball { radius } => {
                let u: [f64; 3] = UnitBall.sample(rng);
                Ok(Point3::from_array(u) * *radius)
            }
            Shape::Box { sides } => Ok(Point3::new(
                rng.random::<f64>() * sides[0],
                rng.random::<f64>() * sides[1],
                rng.random::<f64>() * sides[2],
            )),
            Shape::Ellipsoid { semi_axes: a } => {
                // A linear image of a uniform ball point is uniform in the image.
                let u: [f64; 3] = UnitBall.sample(rng);
                Ok(Point3::new(u[0] * a[0], u[1] * a[1], u[2] * a[2]))
            }
            Shape::Polytope { .. } => {
                let e = self.bbox.extent();
                for _ in 0..REJECTION_ATTEMPT_CAP {
                    let p = self.bbox.min
                        + Point3::new(
                            rng.random::<f64>() * e.x,
                            rng.random::<f64>() * e.y,
                            rng.random::<f64>() * e.z,
                        );
                    if self.contains(p) {
                        return Ok(p);
                    }
                }
                Err(Error::SamplingExhausted(REJECTION_ATTEMPT_CAP))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Ball-intersection volumes
// ---------------------------------------------------------------------------

fn ball_volume(r: f64) -> f64 {
    // Twice the half-ball cap, so that two caps at t = 0 sum to it exactly.
    2.0 * (PI / 3.0 * r * r * (2.0 * r))
}

/// Volume of the part of a ball of radius `r` lying at signed distance at
/// least `t` from its centre along a fixed axis: `π/3 (r−t)² (2r+t)`.
pub fn cap_volume_beyond(r: f64, t: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::domain(format!(
            "cap radius must be finite and nonnegative, got {r}"
        )));
    }
    if !(0.0..=r).contains(&t) {
        return Err(Error::domain(format!(
            "cap offset t = {t} outside [0, {r}]"
        )));
    }
    Ok(PI / 3.0 * (r - t) * (r - t) * (2.0 * r + t))
}

/// Volume of `B(x, r)` intersected with a halfspace whose boundary plane is
/// at distance `s` from `x`, with `x` on the inside.
pub fn halfspace_clipped_ball_volume(r: f64, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain(format!(
            "plane distance must be nonnegative, got {s}"
        )));
    }
    Ok(ball_volume(r) - cap_volume_beyond(r, s.min(r))?)
}

/// Volume of the half-ball of `B(x, r)` facing `y` that is not covered by
/// `B(y, r)`, when `‖xy‖ = d < r`. Equals `π d³ / 4` independently of `r`.
pub fn lens_deficit(d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::domain(format!(
            "center distance must be nonnegative, got {d}"
        )));
    }
    Ok(0.25 * PI * d * d * d)
}

/// A volume estimate together with its standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
}

impl VolumeEstimate {
    fn exact(value: f64) -> Self {
        VolumeEstimate {
            value,
            std_error: 0.0,
            exact: true,
        }
    }
}

/// Fixed low-discrepancy point set filling the unit ball.
#[derive(Debug, Clone)]
pub struct QmcBall {
    points: Vec<Point3>,
}

impl QmcBall {
    /// First `count` points of the Halton sequence in bases (2, 3, 5),
    /// mapped into the unit ball by the volume-preserving spherical map.
    pub fn new(count: usize) -> Self {
        assert!(count > 0, "QMC point count must be positive");
        let points = (1..=count as u64)
            .map(|i| {
                let u = radical_inverse(i, 2);
                let v = radical_inverse(i, 3);
                let w = radical_inverse(i, 5);
                let rad = u.cbrt();
                let cos_t = 1.0 - 2.0 * v;
                let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
                let phi = 2.0 * PI * w;
                Point3::new(
                    rad * sin_t * phi.cos(),
                    rad * sin_t * phi.sin(),
                    rad * cos_t,
                )
            })
            .collect();
        QmcBall { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shared default-size point set.
    pub fn default_set() -> &'static QmcBall {
        static SET: OnceLock<QmcBall> = OnceLock::new();
        SET.get_or_init(|| QmcBall::new(DEFAULT_QMC_POINTS))
    }

    fn estimate(&self, region: &ConvexRegion, x: Point3, r: f64) -> VolumeEstimate {
        let inside = self
            .points
            .iter()
            .filter(|&&u| region.contains(x + u * r))
            .count();
        let m = self.points.len() as f64;
        let p = inside as f64 / m;
        let vol = ball_volume(r);
        VolumeEstimate {
            value: vol * p,
            std_error: vol * (p * (1.0 - p) / m).sqrt(),
            exact: false,
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// `|B(x, r) ∩ Ω|` using the default low-discrepancy set where no exact
/// formula applies.
pub fn clipped_ball_volume(region: &ConvexRegion, x: Point3, r: f64) -> Result<f64> {
    Ok(clipped_ball_volume_with(region, x, r, QmcBall::default_set())?.value)
}

/// `|B(x, r) ∩ Ω|` with an explicit low-discrepancy point set.
///
/// Exact for balls (two-sphere lens) and boxes (slice integration of the
/// disk–rectangle area), exact whenever the ball is interior or cut by a
/// single polytope face, and a low-discrepancy estimate otherwise.
pub fn clipped_ball_volume_with(
    region: &ConvexRegion,
    x: Point3,
    r: f64,
    qmc: &QmcBall,
) -> Result<VolumeEstimate> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain(format!(
            "ball radius must be positive, got {r}"
        )));
    }
    let depth = region.dist_to_boundary(x)?;
    if depth >= r {
        return Ok(VolumeEstimate::exact(ball_volume(r)));
    }
    match region.shape() {
        Shape::Ball { radius } => Ok(VolumeEstimate::exact(ball_ball_volume(
            r,
            *radius,
            x.norm(),
        ))),
        Shape::Box { sides } => {
            let c = x.to_array();
            let lo = [-c[0], -c[1], -c[2]];
            let hi = [sides[0] - c[0], sides[1] - c[1], sides[2] - c[2]];
            Ok(VolumeEstimate::exact(ball_box_volume(r, lo, hi)))
        }
        Shape::Polytope { halfspaces, .. } => {
            let mut cutting = halfspaces.iter().map(|h| h.slack(x)).filter(|&s| s < r);
            match (cutting.next(), cutting.next()) {
                (Some(s), None) => Ok(VolumeEstimate::exact(halfspace_clipped_ball_volume(
                    r,
                    s.max(0.0),
                )?)),
                _ => Ok(qmc.estimate(region, x, r)),
            }
        }
        Shape::Ellipsoid { .. } => Ok(qmc.estimate(region, x, r)),
    }
}

/// Volume of the intersection of balls of radii `r` and `big` whose
/// centres are `d` apart.
pub(crate) fn ball_ball_volume(r: f64, big: f64, d: f64) -> f64 {
    if d + r <= big {
        return ball_volume(r);
    }
    if d + big <= r {
        return ball_volume(big);
    }
    if d >= r + big {
        return 0.0;
    }
    let s = big + r - d;
    PI * s
        * s
        * (d * d + 2.0 * d * r - 3.0 * r * r + 2.0 * d * big + 6.0 * r * big - 3.0 * big * big)
        / (12.0 * d)
}

/// Volume of `B(0, r) ∩ Π [lo_i, hi_i]`.
///
/// Slices along the first axis; each slice is a disk clipped to a
/// rectangle, whose area is closed form. The slice integral is piecewise
/// smooth between the radii at which the disk meets a rectangle edge or
/// corner, so it is integrated panel by panel.
pub(crate) fn ball_box_volume(r: f64, lo: [f64; 3], hi: [f64; 3]) -> f64 {
    let a = lo[0].max(-r);
    let b = hi[0].min(r);
    if b <= a || r <= 0.0 {
        return 0.0;
    }
    let mut breaks = vec![a, b];
    let mut push_level = |c2: f64| {
        if c2 < r * r {
            let y = (r * r - c2).sqrt();
            for v in [-y, y] {
                if v > a && v < b {
                    breaks.push(v);
                }
            }
        }
    };
    for c in [lo[1], hi[1], lo[2], hi[2]] {
        push_level(c * c);
    }
    for c1 in [lo[1], hi[1]] {
        for c2 in [lo[2], hi[2]] {
            push_level(c1 * c1 + c2 * c2);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let slice = |y: f64| {
        let rho = (r * r - y * y).max(0.0).sqrt();
        disk_rect_area(rho, lo[1], hi[1], lo[2], hi[2])
    };
    let scale = ball_volume(r);
    breaks
        .windows(2)
        .map(|w| {
            // Smoothstep substitution removes the (ρ − c)^{3/2} edge behaviour
            // at panel ends.
            let (p, q) = (w[0], w[1]);
            let len = q - p;
            let g = |u: f64| {
                let y = p + len * u * u * (3.0 - 2.0 * u);
                slice(y) * len * 6.0 * u * (1.0 - u)
            };
            gauss_bisect(&g, 0.0, 1.0, BALL_BOX_REL_TOL * scale, 0)
        })
        .sum()
}

/// Gauss–Legendre on `[a, b]`, bisected until one- and two-panel rules
/// agree to `tol`.
fn gauss_bisect<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let rule = gl12();
    let on = |p: f64, q: f64| {
        let (h, m) = (0.5 * (q - p), 0.5 * (p + q));
        h * rule.iter().map(|&(x, w)| w * g(m + h * x)).sum::<f64>()
    };
    let mid = 0.5 * (a + b);
    let whole = on(a, b);
    let (left, right) = (on(a, mid), on(mid, b));
    if (left + right - whole).abs() <= tol || depth >= 30 {
        left + right
    } else {
        gauss_bisect(g, a, mid, 0.5 * tol, depth + 1)
            + gauss_bisect(g, mid, b, 0.5 * tol, depth + 1)
    }
}

fn gl12() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = crate::quadrature::gauss_legendre(12);
        x.into_iter().zip(w).collect()
    })
}

/// Area of the disk `u² + v² ≤ ρ²` inside `[u_lo, u_hi] × [v_lo, v_hi]`.
pub(crate) fn disk_rect_area(rho: f64, u_lo: f64, u_hi: f64, v_lo: f64, v_hi: f64) -> f64 {
    if rho <= 0.0 || u_hi <= u_lo || v_hi <= v_lo {
        return 0.0;
    }
    let q = |a: f64, b: f64| disk_quadrant_area(rho, a, b);
    let area = q(u_hi, v_hi) - q(u_lo, v_hi) - q(u_hi, v_lo) + q(u_lo, v_lo);
    area.clamp(0.0, PI * rho * rho)
}

/// Area of the disk of radius `rho` inside `{u ≤ a, v ≤ b}`.
fn disk_quadrant_area(rho: f64, a: f64, b: f64) -> f64 {
    let top = a.clamp(-rho, rho);
    if top <= -rho || b <= -rho {
        return 0.0;
    }
    let r2 = rho * rho;
    let prim = |u: f64| {
        let u = u.clamp(-rho, rho);
        0.5 * (u * (r2 - u * u).max(0.0).sqrt() + r2 * (u / rho).clamp(-1.0, 1.0).asin())
    };
    // ∫ 2h(u) du and ∫ (b + h(u)) du over [lo, hi], clipped at `top`.
    let full = |lo: f64, hi: f64| {
        let hi = hi.min(top);
        if hi > lo {
            2.0 * (prim(hi) - prim(lo))
        } else {
            0.0
        }
    };
    let partial = |lo: f64, hi: f64| {
        let hi = hi.min(top);
        if hi > lo {
            b * (hi - lo) + prim(hi) - prim(lo)
        } else {
            0.0
        }
    };
    if b >= rho {
        return full(-rho, rho);
    }
    let w = (r2 - b * b).max(0.0).sqrt();
    if b >= 0.0 {
        full(-rho, -w) + partial(-w, w) + full(w, rho)
    } else {
        partial(-w, w)
    }
}

// ---------------------------------------------------------------------------
// Ellipsoid helpers
// ---------------------------------------------------------------------------

fn ellipsoid_surface_area(axes: [f64; 3]) -> f64 {
    let [a, b, c] = axes;
    // A = ∫_{-1}^{1} ∫_0^{2π} sqrt(b²c²(1−u²)cos²φ + a²c²(1−u²)sin²φ + a²b²u²) dφ du
    let u_rule = composite_rule(&[-1.0, -0.5, 0.0, 0.5, 1.0], 24);
    let n_phi = 256;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut total = 0.0;
    for &(u, wu) in &u_rule {
        let s2 = 1.0 - u * u;
        let mut inner = 0.0;
        for j in 0..n_phi {
            let phi = dphi * j as f64;
            let (sp, cp) = phi.sin_cos();
            inner += (b * b * c * c * s2 * cp * cp
                + a * a * c * c * s2 * sp * sp
                + a * a * b * b * u * u)
                .sqrt();
        }
        total += wu * inner * dphi;
    }
    total
}

/// Distance from a point to the surface of an axis-aligned ellipsoid
/// centred at the origin, by reduction to a monotone scalar root.
fn ellipsoid_distance(axes: [f64; 3], p: Point3) -> f64 {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| axes[j].total_cmp(&axes[i]));
    let e = [axes[idx[0]], axes[idx[1]], axes[idx[2]]];
    let c = p.to_array();
    let y = [c[idx[0]].abs(), c[idx[1]].abs(), c[idx[2]].abs()];
    distance_ellipsoid_sorted(e, y)
}

fn bisect_root<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v > 0.0 {
            lo = mid;
        } else if v < 0.0 {
            hi = mid;
        } else {
            return mid;
        }
    }
    0.5 * (lo + hi)
}

fn distance_ellipse_sorted(e: [f64; 2], y: [f64; 2]) -> f64 {
    if y[1] > 0.0 {
        if y[0] > 0.0 {
            let z = [y[0] / e[0], y[1] / e[1]];
            let r0 = (e[0] / e[1]).powi(2);
            let g = |s: f64| (r0 * z[0] / (s + r0)).powi(2) + (z[1] / (s + 1.0)).powi(2) - 1.0;
            let g0 = g(0.0);
            if g0 == 0.0 {
                return 0.0;
            }
            let s0 = z[1] - 1.0;
            let s1 = if g0 < 0.0 {
                0.0
            } else {
                (r0 * r0 * z[0] * z[0] + z[1] * z[1]).sqrt() - 1.0
            };
            let s = bisect_root(g, s0, s1);
            let x0 = r0 * y[0] / (s + r0);
            let x1 = y[1] / (s + 1.0);
            ((x0 - y[0]).powi(2) + (x1 - y[1]).powi(2)).sqrt()
        } else {
            (y[1] - e[1]).abs()
        }
    } else {
        let numer = e[0] * y[0];
        let denom = e[0] * e[0] - e[1] * e[1];
        if numer < denom {
            let xde = numer / denom;
            let x0 = e[0] * xde;
            let x1 = e[1] * (1.0 - xde * xde).max(0.0).sqrt();
            ((x0 - y[0]).powi(2) + x1 * x1).sqrt()
        } else {
            (y[0] - e[0]).abs()
        }
    }
}

fn distance_ellipsoid_sorted(e: [f64; 3], y: [f64; 3]) -> f64 {
    if y[2] > 0.0 {
        if y[1] > 0.0 {
            if y[0] > 0.0 {
                let z = [y[0] / e[0], y[1] / e[1], y[2] / e[2]];
                let r0 = (e[0] / e[2]).powi(2);
                let r1 = (e[1] / e[2]).powi(2);
                let g = |s: f64| {
                    (r0 * z[0] / (s + r0)).powi(2)
                        + (r1 * z[1] / (s + r1)).powi(2)
                        + (z[2] / (s + 1.0)).powi(2)
                        - 1.0
                };
                let g0 = g(0.0);
                if g0 == 0.0 {
                    return 0.0;
                }
                let s0 = z[2] - 1.0;
                let s1 = if g0 < 0.0 {
                    0.0
                } else {
                    (r0 * r0 * z[0] * z[0] + r1 * r1 * z[1] * z[1] + z[2] * z[2]).sqrt() - 1.0
                };
                let s = bisect_root(g, s0, s1);
                let x = [r0 * y[0] / (s + r0), r1 * y[1] / (s + r1), y[2] / (s + 1.0)];
                ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt()
            } else {
                distance_ellipse_sorted([e[1], e[2]], [y[1], y[2]])
            }
        } else if y[0] > 0.0 {
            distance_ellipse_sorted([e[0], e[2]], [y[0], y[2]])
        } else {
            (y[2] - e[2]).abs()
        }
    } else {
        let denom0 = e[0] * e[0] - e[2] * e[2];
        let denom1 = e[1] * e[1] - e[2] * e[2];
        let numer0 = e[0] * y[0];
        let numer1 = e[1] * y[1];
        if numer0 < denom0 && numer1 < denom1 {
            let xde0 = numer0 / denom0;
            let xde1 = numer1 / denom1;
            let discr = 1.0 - xde0 * xde0 - xde1 * xde1;
            if discr > 0.0 {
                let x = [e[0] * xde0, e[1] * xde1, e[2] * discr.sqrt()];
                return ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + x[2] * x[2]).sqrt();
            }
        }
        distance_ellipse_sorted([e[0], e[1]], [y[0], y[1]])
    }
}

// ---------------------------------------------------------------------------
// Polytope helpers
// ---------------------------------------------------------------------------

struct PolytopeGeometry {
    vertices: Vec<Point3>,
    volume: f64,
    surface_area: f64,
}

fn vertex_bbox(vertices: &[Point3]) -> Aabb {
    let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        min = Point3::new(min.x.min(v.x), min.y.min(v.y), min.z.min(v.z));
        max = Point3::new(max.x.max(v.x), max.y.max(v.y), max.z.max(v.z));
    }
    Aabb { min, max }
}

fn solve3(rows: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<Point3> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(rows);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut m = rows;
        for (row, &b) in rhs.iter().enumerate() {
            m[row][col] = b;
        }
        *slot = det(m) / d;
    }
    Some(Point3::from_array(out))
}

fn polytope_geometry(halfspaces: &[Halfspace]) -> Result<PolytopeGeometry> {
    if halfspaces.len() < 4 {
        return Err(Error::DegenerateRegion(format!(
            "a bounded polytope needs at least 4 halfspaces, found {}",
            halfspaces.len()
        )));
    }
    // Guard planes far outside any sensible region detect unboundedness.
    const GUARD: f64 = 1e6;
    let mut planes: Vec<Halfspace> = halfspaces.to_vec();
    let n_user = planes.len();
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut n = [0.0; 3];
            n[axis] = sign;
            planes.push(Halfspace {
                normal: Point3::from_array(n),
                offset: GUARD,
            });
        }
    }
    let scale = 1.0
        + halfspaces
            .iter()
            .map(|h| h.offset.abs())
            .fold(0.0, f64::max);
    let eps = POLYTOPE_EPS * scale;
    let mut vertices: Vec<Point3> = Vec::new();
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            for k in j + 1..planes.len() {
                let rows = [
                    planes[i].normal.to_array(),
                    planes[j].normal.to_array(),
                    planes[k].normal.to_array(),
                ];
                let Some(v) = solve3(rows, [planes[i].offset, planes[j].offset, planes[k].offset])
                else {
                    continue;
                };
                if planes.iter().all(|h| h.slack(v) >= -eps)
                    && !vertices.iter().any(|u| u.dist(v) < eps)
                {
                    vertices.push(v);
                }
            }
        }
    }
    if vertices
        .iter()
        .any(|v| planes[n_user..].iter().any(|h| h.slack(*v).abs() < eps))
    {
        return Err(Error::DegenerateRegion(
            "halfspaces do not bound a finite region".into(),
        ));
    }
    if vertices.len() < 4 {
        return Err(Error::DegenerateRegion(
            "halfspace set has empty interior".into(),
        ));
    }
    let centroid =
        vertices.iter().fold(Point3::ORIGIN, |acc, &v| acc + v) * (1.0 / vertices.len() as f64);
    let mut volume = 0.0;
    let mut area = 0.0;
    for h in halfspaces {
        let mut face: Vec<Point3> = vertices
            .iter()
            .copied()
            .filter(|&v| h.slack(v).abs() < eps)
            .collect();
        if face.len() < 3 {
            continue;
        }
        let fc = face.iter().fold(Point3::ORIGIN, |acc, &v| acc + v) * (1.0 / face.len() as f64);
        let seed = if h.normal.x.abs() < 0.9 {
            Point3::new(1.0, 0.0, 0.0)
        } else {
            Point3::new(0.0, 1.0, 0.0)
        };
        let e1 = {
            let t = seed - h.normal * seed.dot(h.normal);
            t * (1.0 / t.norm())
        };
        let e2 = h.normal.cross(e1);
        face.sort_by(|&p, &q| {
            let ap = (p - fc).dot(e2).atan2((p - fc).dot(e1));
            let aq = (q - fc).dot(e2).atan2((q - fc).dot(e1));
            ap.total_cmp(&aq)
        });
        let mut twice = Point3::ORIGIN;
        for i in 0..face.len() {
            twice = twice + face[i].cross(face[(i + 1) % face.len()]);
        }
        let a = 0.5 * twice.dot(h.normal).abs();
        area += a;
        volume += a * h.slack(centroid) / 3.0;
    }
    if !(volume > 1e-12 * scale.powi(3)) {
        return Err(Error::DegenerateRegion(format!(
            "polytope volume {volume} is not positive"
        )));
    }
    Ok(PolytopeGeometry {
        vertices,
        volume,
        surface_area: area,
    })
}

/// Largest `t` such that a ball of radius `t` fits in the polytope,
/// by enumerating the vertices of `{(x, t) : n·x + t ≤ b}`.
fn chebyshev_radius(halfspaces: &[Halfspace]) -> f64 {
    let m = halfspaces.len();
    let mut best = 0.0f64;
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                for d in c + 1..m {
                    let rows = [a, b, c, d].map(|i| {
                        let n = halfspaces[i].normal;
                        [n.x, n.y, n.z, 1.0, halfspaces[i].offset]
                    });
                    let Some(sol) = solve4(rows) else { continue };
                    let x = Point3::new(sol[0], sol[1], sol[2]);
                    let t = sol[3];
                    if t > best && halfspaces.iter().all(|h| h.slack(x) >= t - 1e-12) {
                        best = t;
                    }
                }
            }
        }
    }
    best
}

fn solve4(mut m: [[f64; 5]; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        let pivot = m[col];
        for (row, line) in m.iter_mut().enumerate() {
            if row != col {
                let f = line[col] / pivot[col];
                for (x, p) in line[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    Some([
        m[0][4] / m[0][0],
        m[1][4] / m[1][1],
        m[2][4] / m[2][2],
        m[3][4] / m[3][3],
    ])
}
