//! Numerical laboratory for geodesic integral geometry on simple metrics of the unit disk.

pub mod boundary;
pub mod diffeo;
pub mod error;
pub mod fft;
pub mod fiber;
pub mod geodesic;
pub mod grid;
pub mod lab;
pub mod laplace;
pub mod metric;
pub mod spec;
pub mod util;
pub mod xray;

pub use diffeo::{boundary_normal_gauge, pullback, DiskDiffeo};
pub use error::{GeoError, Result};
pub use metric::{Mat2, MetricField, MetricKind, Vec2};
