//! Critical transmission radii of random geometric graphs over convex
//! regions of R³.
//!
//! The crate is split along the pipeline it serves:
//!
//! - [`geometry`]: unit-volume convex regions, uniform sampling and the
//!   ball-intersection volumes (spherical caps, halfspace clips, lens
//!   deficits, clipped balls).
//! - [`spatial`]: cell-grid index over a point sample with exact k-NN and
//!   fixed-radius queries.
//! - [`graph`]: random geometric graphs, vertex connectivity and the two
//!   exact critical radii (minimum degree, k-connectivity).
//! - [`theory`]: closed-form radii, the ψ-integral and the boundary-layer
//!   integral with its asymptote.
//! - [`experiments`]: seeded Monte Carlo harness producing per-trial records
//!   and aggregate estimates, with CSV/JSON persistence.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod quadrature;
pub mod spatial;
pub mod theory;

pub use error::{Error, Result};
pub use geometry::{ConvexRegion, Point3, RegionSpec};
pub use graph::{CriticalRadii, Graph};
pub use spatial::{CellGrid, PointSample, ProcessKind};
pub use theory::{IntegralReport, TheoryParams};
