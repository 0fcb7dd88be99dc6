//! Proximal splitting fixed-point iterations for sums of geodesically convex
//! distance-power functions on p-uniformly convex metric spaces.
//!
//! The building blocks are:
//!
//! * [`geometry`]: Euclidean space, the unit sphere and the SPD cone with
//!   distances, geodesics and random sampling.
//! * [`fourpoint`]: the four-point quantities `Δ` and `ψ`.
//! * [`prox`]: closed-form prox mappings, projections and relaxation.
//! * [`splitting`]: the cyclic composite map and its iteration driver.
//! * [`diagnostics`]: regularity constants and empirical inequality checks.
//! * [`experiment`]: Fréchet-mean sweeps with CSV/JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod fourpoint;
pub mod geometry;
pub mod linalg;
pub mod prox;
pub mod splitting;

pub use error::{Error, Result};
pub use geometry::{GeodesicSegment, Point, SpaceKind, SpaceParams};
pub use prox::{BallIndicator, ProxTerm, WeightConvention};
pub use splitting::{CompositeMap, StopReason, Trace, Variant};
