//! Geometry of spacelike marginally trapped surfaces in Minkowski 4-space.
//!
//! The crate covers the forward analysis (fundamental forms, the geometric
//! moving frame, the seven invariant functions and their integrability
//! system), the construction of canonical principal parameters by gauge-line
//! quadrature, and the inverse problem of rebuilding a surface from three
//! prescribed invariants via a hyperbolic Cauchy problem and moving-frame
//! integration.
//!
//! All numerics are generic over the scalar (`scalar::Real`, implemented for
//! `f32` and `f64`); the aliases below fix `f64` for ordinary use.

pub mod bonnet;
pub mod canonical;
pub mod error;
pub mod framefield;
pub mod grid;
pub mod meridian;
pub mod minkowski;
pub mod numerics;
pub mod scalar;
pub mod surface;

pub use error::{GeomError, Result};
pub use scalar::Real;

/// `f64` working aliases.
pub type Vec4 = minkowski::Vector4<f64>;
pub type NullFrame = minkowski::NullNormalFrame<f64>;
pub type Jet = surface::SurfaceJet<f64>;
pub type Patch = surface::SurfacePatch<f64>;
pub type Domain = surface::Rect<f64>;
pub type Gauge = canonical::CanonicalGauge<f64>;
pub type Quadrature = canonical::QuadratureSpec<f64>;
pub type Grid = grid::Grid2D<f64>;
pub type Field = numerics::Mat<f64>;
