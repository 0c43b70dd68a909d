//! Haptic rendering of thin point-cloud surfaces with spatially varying stiffness.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// banded and stencil loops read better with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod force;
pub mod model;
pub mod plate;
pub mod projection;
pub mod proxy;
pub mod session;
pub mod sphere;

/// Three-vector in model coordinates (cm).
pub type Vec3 = nalgebra::Vector3<f64>;
