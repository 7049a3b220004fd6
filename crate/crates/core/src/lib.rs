//! Internal and external 5-cyclidic harmonics of kinds 1 to 3 and the
//! eigenfunction expansions of the reciprocal distance.
//!
//! Coordinates and the separated ODE are generic over the float type; the
//! eigenvalue solver, harmonics and expansions work in `f64`.

// `!(x < y)` is used on purpose so that NaN fails the test
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checks;
pub mod eigen;
pub mod error;
pub mod expansion;
pub mod fuchsian;
pub mod geometry;
pub mod harmonics;
pub mod hexfloat;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Params64 = geometry::Params<f64>;
pub type Point64 = geometry::Point3<f64>;
pub type Coords64 = geometry::CyclidicCoords<f64>;
pub type Lambda64 = fuchsian::LambdaPair<f64>;
pub type Solution64 = fuchsian::SeparatedSolution<f64>;

pub type Params32 = geometry::Params<f32>;
pub type Point32 = geometry::Point3<f32>;
pub type Coords32 = geometry::CyclidicCoords<f32>;
