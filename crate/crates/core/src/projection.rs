//! Gall-Peters equal-area mapping of a fitted sphere onto the plane.
//!
//! A [`PatchFrame`] rotates the sphere so that the proxy sits at latitude
//! 0, longitude 0. In rotated coordinates `q = R (p − c)` the pole is `+y`,
//! longitude `α = atan2(q.x, q.z)` and latitude `β = asin(q.y / r)`; the
//! plane point is `(r α / √2, r √2 sin β)`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Rotation3, Unit};

use crate::sphere::AlgebraicSphere;
use crate::Vec3;

/// How far off the sphere (relative to its radius) an input may lie.
const ON_SPHERE_TOLERANCE: f64 = 1e-9;
/// Relative distance from the polar axis at which longitude is undefined.
const POLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub z: f64,
    pub source_id: usize,
}

impl PlanarPoint {
    pub fn new(x: f64, z: f64, source_id: usize) -> Self {
        Self { x, z, source_id }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectionError {
    #[error("point lies on the polar axis; longitude is undefined")]
    PoleSingularity,
    #[error("point is {distance:e} cm off the sphere")]
    OffSphere { distance: f64 },
    #[error("planar point ({x}, {z}) lies outside the projection range")]
    OutOfRange { x: f64, z: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchFrame {
    pub rotation: Matrix3<f64>,
    pub sphere: AlgebraicSphere,
}

impl PatchFrame {
    /// Rotated coordinates of `p` relative to the sphere center.
    pub fn local(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p - self.sphere.center)
    }

    /// Inverse of [`PatchFrame::local`].
    pub fn global(&self, q: &Vec3) -> Vec3 {
        self.sphere.center + self.rotation.transpose() * q
    }
}

/// Minimal rotation taking the proxy direction to the prime direction `+z`.
pub fn build_frame(sphere: &AlgebraicSphere, proxy_on_sphere: &Vec3) -> PatchFrame {
    let d = (proxy_on_sphere - sphere.center).normalize();
    let target = Vec3::z();
    let cos = d.dot(&target).clamp(-1.0, 1.0);
    let axis = d.cross(&target);
    let sin = axis.norm();
    let rotation = if sin <= 1e-15 && cos > 0.0 {
        Matrix3::identity()
    } else if sin <= 1e-15 {
        // antipodal: half-turn about the first basis axis orthogonal to d
        let pick = [Vec3::x(), Vec3::y()].into_iter().find(|e| e.dot(&d).abs() < 1e-12).unwrap_or(Vec3::x());
        let perp = (pick - d * pick.dot(&d)).normalize();
        Rotation3::from_axis_angle(&Unit::new_unchecked(perp), PI).into_inner()
    } else {
        Rotation3::from_axis_angle(&Unit::new_unchecked(axis / sin), sin.atan2(cos)).into_inner()
    };
    PatchFrame { rotation, sphere: *sphere }
}

/// Longitude and latitude (radians) of a point in the frame.
pub fn lon_lat(point: &Vec3, frame: &PatchFrame) -> Result<(f64, f64), ProjectionError> {
    let q = frame.local(point);
    let len = q.norm();
    let r = frame.sphere.radius;
    let off = (len - r).abs();
    if off > ON_SPHERE_TOLERANCE * r.max(1.0) {
        return Err(ProjectionError::OffSphere { distance: off });
    }
    if q.x.hypot(q.z) <= POLE_TOLERANCE * len {
        return Err(ProjectionError::PoleSingularity);
    }
    Ok((q.x.atan2(q.z), (q.y / len).clamp(-1.0, 1.0).asin()))
}

pub fn to_plane(point: &Vec3, frame: &PatchFrame, source_id: usize) -> Result<PlanarPoint, ProjectionError> {
    let q = frame.local(point);
    let (alpha, _) = lon_lat(point, frame)?;
    let r = frame.sphere.radius;
    let sin_beta = (q.y / q.norm()).clamp(-1.0, 1.0);
    Ok(PlanarPoint::new(r * alpha / SQRT_2, r * SQRT_2 * sin_beta, source_id))
}

pub fn from_plane(p: &PlanarPoint, frame: &PatchFrame) -> Result<Vec3, ProjectionError> {
    let r = frame.sphere.radius;
    if !(p.z.abs() <= r * SQRT_2 && p.x.abs() <= r * PI / SQRT_2) {
        return Err(ProjectionError::OutOfRange { x: p.x, z: p.z });
    }
    let alpha = SQRT_2 * p.x / r;
    let sin_beta = (p.z / (r * SQRT_2)).clamp(-1.0, 1.0);
    let cos_beta = (1.0 - sin_beta * sin_beta).max(0.0).sqrt();
    let q = Vec3::new(cos_beta * alpha.sin(), sin_beta, cos_beta * alpha.cos()) * r;
    Ok(frame.global(&q))
}

/// Spherical area of a latitude/longitude cell.
pub fn sphere_cell_area(r: f64, lon: (f64, f64), lat: (f64, f64)) -> f64 {
    r * r * (lon.1 - lon.0) * (lat.1.sin() - lat.0.sin())
}

/// Planar area of the image of the same cell.
pub fn planar_cell_area(r: f64, lon: (f64, f64), lat: (f64, f64)) -> f64 {
    let width = r * (lon.1 - lon.0) / SQRT_2;
    let height = r * SQRT_2 * (lat.1.sin() - lat.0.sin());
    width * height
}
