//! Closed-form critical radii, the ψ-function and the integrals built on
//! it.
//!
//! Point counts are taken as `f64` so that the calculators stay usable far
//! beyond the range of simulated sample sizes.

use std::f64::consts::PI;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ball_ball_volume, ball_box_volume, cap_volume_beyond, clipped_ball_volume_with, ConvexRegion,
    QmcBall, Shape,
};
use crate::quadrature::{adaptive_simpson, composite_rule};

/// Relative tolerance of the one-dimensional quadratures.
pub const QUADRATURE_REL_TOL: f64 = 1e-8;
/// Integrand evaluation cap of the one-dimensional quadratures.
pub const QUADRATURE_MAX_NODES: usize = 1 << 20;
/// Sample count of the Monte Carlo fallback for regions without a layered
/// estimator.
pub const FALLBACK_MC_SAMPLES: usize = 200_000;

const MC_BLOCK: usize = 1 << 14;
const FALLBACK_QMC_POINTS: usize = 4096;
/// Depth panels `[r 2^{-j-1}, r 2^{-j}]` used by the layered box estimator.
const LAYER_LEVELS: i32 = 10;

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn check_k3(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::OutOfRange {
            what: "k",
            value: 0,
            allowed: "k ≥ 1 in three dimensions".into(),
        })
    } else {
        Ok(())
    }
}

fn check_n(n: f64) -> Result<()> {
    if n.is_finite() && n >= 3.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "n must be finite and at least 3, got {n}"
        )))
    }
}

/// `ln` of `(4/(3π))·(5π/16)^{2/3}·(2/3)^k/k!`.
fn ln_layer_constant(k: usize) -> f64 {
    (4.0 / (3.0 * PI)).ln() + (2.0 / 3.0) * (5.0 * PI / 16.0).ln() + k as f64 * (2.0f64 / 3.0).ln()
        - ln_factorial(k)
}

/// ξ such that `area·(4/(3π))·e^{−2ξ/3}·(5π/16)^{2/3}·(2/3)^k/k! = e^{−c}`.
pub fn solve_xi_3d(c: f64, k: usize, area: f64) -> Result<f64> {
    check_k3(k)?;
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::domain(format!(
            "area must be positive and finite, got {area}"
        )));
    }
    if !c.is_finite() {
        return Err(Error::domain(format!("c must be finite, got {c}")));
    }
    Ok(1.5 * (c + area.ln() + ln_layer_constant(k)))
}

/// Relative residual of the ξ-equation: `area·asymptote(k, ξ)·e^{c} − 1`.
pub fn xi_residual_3d(xi: f64, c: f64, k: usize, area: f64) -> f64 {
    area * boundary_layer_asymptote(k, xi) * c.exp() - 1.0
}

/// Bisection solve of the ξ-equation; a cross-check for [`solve_xi_3d`].
pub fn solve_xi_3d_bisection(c: f64, k: usize, area: f64) -> Result<f64> {
    check_k3(k)?;
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::domain(format!(
            "area must be positive and finite, got {area}"
        )));
    }
    // In log form the residual is linear in ξ and decreasing.
    let g = |xi: f64| area.ln() + ln_layer_constant(k) - 2.0 * xi / 3.0 + c;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while g(lo) < 0.0 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ln n + (3k/2 − 1)·ln ln n + ξ`.
pub fn radius_numerator_3d(n: f64, k: usize, xi: f64) -> f64 {
    n.ln() + (1.5 * k as f64 - 1.0) * n.ln().ln() + xi
}

/// `r_n = ((16/(5π))·(ln n + (3k/2 − 1)·ln ln n + ξ)/n)^{1/3}`.
pub fn radius_3d(n: f64, k: usize, xi: f64) -> Result<f64> {
    check_k3(k)?;
    check_n(n)?;
    let lnn = n.ln();
    let mid = (1.5 * k as f64 - 1.0) * lnn.ln();
    let num = lnn + mid + xi;
    if !(num > 0.0) {
        return Err(Error::domain(format!(
            "radius numerator is nonpositive ({num}): term ξ = {xi} outweighs ln n = {lnn} and (3k/2-1)·ln ln n = {mid}"
        )));
    }
    Ok((16.0 / (5.0 * PI) * num / n).cbrt())
}

/// `exp(−e^{−c})`.
pub fn limit_probability(c: f64) -> f64 {
    (-(-c).exp()).exp()
}

/// Planar ξ for perimeter `l`; `k = 0` has no ξ (see [`radius_2d`]).
pub fn solve_xi_2d(c: f64, k: usize, l: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::OutOfRange {
            what: "k",
            value: 0,
            allowed: "k ≥ 1 (k = 0 takes c directly in the radius)".into(),
        });
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::domain(format!(
            "perimeter must be positive and finite, got {l}"
        )));
    }
    let sp = PI.sqrt();
    if k == 1 {
        let root = ((-c).exp() + PI * l * l / 64.0).sqrt();
        Ok(-2.0 * (root - l * sp / 8.0).ln())
    } else {
        let ln_den = (k as f64 + 1.0) * 2f64.ln() + ln_factorial(k);
        Ok(2.0 * ((l * sp).ln() - ln_den) + 2.0 * c)
    }
}

/// Planar radius. `param` is ξ for `k ≥ 1` and c for `k = 0`.
pub fn radius_2d(n: f64, k: usize, param: f64) -> Result<f64> {
    check_n(n)?;
    let lnn = n.ln();
    let num = if k == 0 {
        lnn + param
    } else {
        lnn + (2.0 * k as f64 - 1.0) * lnn.ln() + param
    };
    if !(num > 0.0) {
        let name = if k == 0 { "c" } else { "ξ" };
        return Err(Error::domain(format!(
            "radius numerator is nonpositive ({num}): term {name} = {param} outweighs ln n = {lnn}"
        )));
    }
    Ok((num / (PI * n)).sqrt())
}

/// `ψ = (n v)^k e^{−n v} / k!`, evaluated in log space.
pub fn psi(n: f64, k: usize, v: f64) -> f64 {
    let m = n * v;
    if m == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * m.ln() - m - ln_factorial(k)).exp()
}

/// Closed form that the boundary-layer integral approaches:
/// `(4/(3π))·e^{−2ξ/3}·(5π/16)^{2/3}·(2/3)^k/k!`.
pub fn boundary_layer_asymptote(k: usize, xi: f64) -> f64 {
    (ln_layer_constant(k) - 2.0 * xi / 3.0).exp()
}

/// Which estimator produced an [`IntegralReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Layered,
    MonteCarlo,
    Quadrature1d,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Layered => "layered",
            Estimator::MonteCarlo => "monte-carlo",
            Estimator::Quadrature1d => "quadrature-1d",
        })
    }
}

/// A numerical integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub value: f64,
    pub estimator: Estimator,
    /// Integrand evaluations or Monte Carlo samples.
    pub nodes: usize,
    /// Quadrature residual or Monte Carlo standard error.
    pub error: f64,
}

/// `n·∫₀^{r/2} ψ(n, k, a(t)) dt` with `a(t)` the cap volume beyond depth
/// `t` and `r = radius_3d(n, k, ξ)`.
pub fn boundary_layer_integral(n: f64, k: usize, xi: f64) -> Result<IntegralReport> {
    let r = radius_3d(n, k, xi)?;
    let f = |t: f64| n * psi(n, k, cap_volume_beyond(r, t.clamp(0.0, r)).unwrap_or(0.0));
    let q = adaptive_simpson(f, 0.0, 0.5 * r, QUADRATURE_REL_TOL, QUADRATURE_MAX_NODES);
    Ok(IntegralReport {
        value: q.value,
        estimator: Estimator::Quadrature1d,
        nodes: q.evaluations,
        error: q.error,
    })
}

/// Parameters tying a point count to its theoretical radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub n: f64,
    pub k: usize,
    pub c: f64,
    pub xi: f64,
    pub r_n: f64,
    /// Surface area of the region boundary.
    pub area: f64,
}

impl TheoryParams {
    /// Runs the chain c → ξ → r_n.
    pub fn new(n: f64, k: usize, c: f64, area: f64) -> Result<Self> {
        let xi = solve_xi_3d(c, k, area)?;
        let r_n = radius_3d(n, k, xi)?;
        Ok(TheoryParams {
            n,
            k,
            c,
            xi,
            r_n,
            area,
        })
    }

    pub fn for_region(region: &ConvexRegion, n: f64, k: usize, c: f64) -> Result<Self> {
        Self::new(n, k, c, region.surface_area())
    }

    /// `n·ψ` at the full-ball volume: bounds the integrand on the interior
    /// `{dist ≥ r_n}`.
    pub fn interior_density(&self) -> f64 {
        self.n * psi(self.n, self.k, 4.0 / 3.0 * PI * self.r_n.powi(3))
    }
}

/// `n·∫_Ω ψ(n, k, |B(x, r_n) ∩ Ω|) dx`.
///
/// Interior points contribute in closed form. The boundary layer is
/// integrated by depth quadrature for boxes and balls; other regions fall
/// back to Monte Carlo.
pub fn psi_integral_over_region(
    region: &ConvexRegion,
    params: &TheoryParams,
) -> Result<IntegralReport> {
    let inradius = region.inradius();
    if params.r_n > inradius {
        return Err(Error::Regime {
            radius: params.r_n,
            inradius,
        });
    }
    match region.shape() {
        Shape::Box { sides } => Ok(layered_box(*sides, params)),
        Shape::Ball { radius } => Ok(layered_ball(*radius, params)),
        _ => psi_integral_monte_carlo(region, params, FALLBACK_MC_SAMPLES, 0),
    }
}

/// Composite Gauss–Legendre rule on `[0, r]` with panels refined
/// geometrically toward depth 0.
fn graded_rule(r: f64, order: usize) -> Vec<(f64, f64)> {
    let mut breaks: Vec<f64> = (0..=LAYER_LEVELS)
        .rev()
        .map(|j| r * 2f64.powi(-j))
        .collect();
    breaks.insert(0, 0.0);
    composite_rule(&breaks, order)
}

fn layered_box(sides: [f64; 3], p: &TheoryParams) -> IntegralReport {
    let fine = layered_box_with(sides, p, 8);
    let coarse = layered_box_with(sides, p, 5);
    IntegralReport {
        value: fine.0,
        estimator: Estimator::Layered,
        nodes: fine.1 + coarse.1,
        error: (fine.0 - coarse.0).abs(),
    }
}

/// Sums over the faces, edges and corners near which the ball is clipped.
/// Within `r` of the boundary each coordinate is near at most one face, so
/// the region splits into products of depth intervals `[0, r]` and
/// unclipped middles `[r, L − r]`. The clipped volume depends only on the
/// depths, so one depth integral per dimension serves every face, edge and
/// corner.
fn layered_box_with(sides: [f64; 3], p: &TheoryParams, order: usize) -> (f64, usize) {
    let r = p.r_n;
    let (n, k) = (p.n, p.k);
    let rule = graded_rule(r, order);
    let m = rule.len();
    let density = |t: [f64; 3]| n * psi(n, k, ball_box_volume(r, [-t[0], -t[1], -t[2]], [r; 3]));

    let face: f64 = rule.iter().map(|&(t, w)| w * density([t, r, r])).sum();
    let mut edge = 0.0;
    for i in 0..m {
        let (ti, wi) = rule[i];
        edge += wi * wi * density([ti, ti, r]);
        for &(tj, wj) in &rule[i + 1..] {
            edge += 2.0 * wi * wj * density([ti, tj, r]);
        }
    }
    // The corner integrand is symmetric in its three depths.
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let (ti, wi) = rule[i];
            let mut s = 0.0;
            for j in i..m {
                let (tj, wj) = rule[j];
                for &(tl, wl) in &rule[j..] {
                    let mult = match (j == i, tl == tj) {
                        (true, true) => 1.0,
                        (false, false) => 6.0,
                        _ => 3.0,
                    };
                    s += mult * wi * wj * wl * density([ti, tj, tl]);
                }
            }
            s
        })
        .collect();
    let corner: f64 = rows.iter().sum();
    let nodes = 1 + m + m * (m + 1) / 2 + m * (m + 1) * (m + 2) / 6;

    let mid = sides.map(|l| l - 2.0 * r);
    let interior = mid[0] * mid[1] * mid[2] * p.interior_density();
    let faces = 2.0 * (mid[1] * mid[2] + mid[0] * mid[2] + mid[0] * mid[1]) * face;
    let edges = 4.0 * (mid[0] + mid[1] + mid[2]) * edge;
    (interior + faces + edges + 8.0 * corner, nodes)
}

fn layered_ball(radius: f64, p: &TheoryParams) -> IntegralReport {
    let (n, k, r) = (p.n, p.k, p.r_n);
    let inner = radius - r;
    let interior = 4.0 / 3.0 * PI * inner.powi(3) * p.interior_density();
    let f = |rho: f64| n * 4.0 * PI * rho * rho * psi(n, k, ball_ball_volume(r, radius, rho));
    let q = adaptive_simpson(f, inner, radius, QUADRATURE_REL_TOL, QUADRATURE_MAX_NODES);
    IntegralReport {
        value: interior + q.value,
        estimator: Estimator::Layered,
        nodes: q.evaluations + 1,
        error: q.error,
    }
}

/// Plain Monte Carlo estimate of `n·∫_Ω ψ dx`.
///
/// Samples are drawn in fixed-size blocks, each from its own stream of
/// `seed`, so the result does not depend on the thread count.
pub fn psi_integral_monte_carlo(
    region: &ConvexRegion,
    params: &TheoryParams,
    samples: usize,
    seed: u64,
) -> Result<IntegralReport> {
    if samples < 2 {
        return Err(Error::domain(format!(
            "need at least 2 Monte Carlo samples, got {samples}"
        )));
    }
    let qmc = QmcBall::new(FALLBACK_QMC_POINTS);
    let (n, k, r) = (params.n, params.k, params.r_n);
    let blocks = samples.div_ceil(MC_BLOCK);
    let partial: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let x = region.sample_uniform(&mut rng)?;
                let v = clipped_ball_volume_with(region, x, r, &qmc)?.value;
                let y = n * psi(n, k, v);
                s += y;
                s2 += y * y;
            }
            Ok((s, s2))
        })
        .collect::<Result<_>>()?;
    let (s, s2) = partial
        .iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = s / m;
    let var = ((s2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
    let vol = region.volume();
    Ok(IntegralReport {
        value: vol * mean,
        estimator: Estimator::MonteCarlo,
        nodes: samples,
        error: vol * (var / m).sqrt(),
    })
}
