//! Divisible statistical structures on single-chart Riemannian manifolds.
//!
//! A manifold `(M, g)` with a smooth potential `σ` carries the statistical
//! structure `(g, ∇)` whose difference tensor is built from `dσ`. This crate
//! evaluates that structure, its curvatures and geodesics, and the
//! connectivity and contrast-function machinery built on top of it.

pub mod analyze;
pub mod connect;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod geodesic;
pub mod manifold;
pub mod statstruct;
pub mod tensor;

pub use error::{GeometryError, ManifoldError};
pub use manifold::{load_manifold, Coord, FrameVec, ManifoldDef};
