//! Numerical geometry of Lorentzian products `ℝ × F` with metric `−dt² + g_t`.
//!
//! The crate integrates geodesics, checks Riccati-type length bounds, builds
//! ε-nets of the slices `F_T`, evaluates curvature and Jacobi fields, and
//! acts on de Sitter space by Lorentz transformations.

pub mod comparison;
pub mod covering;
pub mod curvature;
pub mod error;
pub mod geodesic;
pub mod isometry;
pub mod metric_family;
pub mod metric_space;
pub mod ode;
pub mod sampling;

pub use error::{GeometryError, Result};
pub use metric_family::{Fiber, FiberPoint, HypothesisCertificate, MetricFamily};
