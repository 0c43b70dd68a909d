//! Proxy tracking and collision detection.
//!
//! The proxy is the center of a ball of radius `proxy_radius`. While in
//! contact it rides on the offset surface one radius above a locally fitted
//! sphere (or plane, where the sphere fit degenerates), so the ball rests on
//! the cloud and `hip − proxy` measures penetration.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::model::{MaterialConfig, PointCloudModel};
use crate::sphere::{fit_sphere, AlgebraicSphere, FitError, MIN_FIT_POINTS};
use crate::Vec3;

/// Support radius of the surface fit that constrains the proxy, in proxy radii.
pub const CONSTRAINT_FIT_RADII: f64 = 3.0;
/// Largest free-space step, in proxy radii, before a motion is subdivided.
const FREE_STEP_RADII: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    pub hip: Vec3,
    pub proxy: Vec3,
    /// Outward unit normal while in contact, zero otherwise.
    pub normal: Vec3,
    pub in_contact: bool,
}

impl ContactState {
    /// Out of contact, with the proxy on the HIP.
    pub fn free(hip: Vec3) -> Self {
        Self { hip, proxy: hip, normal: Vec3::zeros(), in_contact: false }
    }

    /// `v_h = hip − proxy`.
    pub fn hip_vector(&self) -> Vec3 {
        self.hip - self.proxy
    }

    pub fn penetration(&self) -> f64 {
        self.hip_vector().norm()
    }
}

/// Overshoot-weighted direction from the points inside the ball to its center.
pub fn estimate_normal(model: &PointCloudModel, proxy: &Vec3, proxy_radius: f64) -> Option<Vec3> {
    let mut sum = Vec3::zeros();
    let mut mass = 0.0;
    for id in model.neighbor_ids(proxy, proxy_radius) {
        let d = proxy - model.point(id).position;
        let r = d.norm();
        if r == 0.0 {
            continue;
        }
        let w = (proxy_radius - r) / r;
        sum += d * w;
        mass += w * r;
    }
    let len = sum.norm();
    if !(len > 1e-12 * mass) {
        return None;
    }
    Some(sum / len)
}

/// `v_n · v_h < 0`, strictly.
pub fn detect_collision(state: &ContactState) -> bool {
    state.normal.dot(&state.hip_vector()) < 0.0
}

/// Surface model used to constrain the proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalSurface {
    Sphere(AlgebraicSphere),
    Plane { point: Vec3, normal: Vec3 },
}

impl LocalSurface {
    /// Sphere fit, falling back to a least-squares plane when the points are flat.
    pub fn fit(points: &[Vec3]) -> Option<Self> {
        match fit_sphere(points) {
            Ok(s) => Some(Self::Sphere(s)),
            Err(FitError::Degenerate) => fit_plane(points),
            Err(FitError::InsufficientData(_)) if points.len() >= 3 => fit_plane(points),
            Err(_) => None,
        }
    }

    /// Closest surface point to `p` and the unit normal there, oriented along `reference`.
    pub fn foot(&self, p: &Vec3, reference: &Vec3) -> Option<(Vec3, Vec3)> {
        let (foot, normal) = match self {
            Self::Sphere(s) => {
                let dir = s.direction(p).ok()?;
                (s.center + dir * s.radius, dir)
            }
            Self::Plane { point, normal } => (p - normal * (p - point).dot(normal), *normal),
        };
        let sign = if normal.dot(reference) < 0.0 { -1.0 } else { 1.0 };
        Some((foot, normal * sign))
    }
}

fn fit_plane(points: &[Vec3]) -> Option<LocalSurface> {
    if points.len() < 3 {
        return None;
    }
    let mean = points.iter().fold(Vec3::zeros(), |a, p| a + p) / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // collinear points leave the normal undetermined
    if !(eig.eigenvalues[order[1]] > 1e-12 * eig.eigenvalues[order[2]]) {
        return None;
    }
    let normal = eig.eigenvectors.column(order[0]).normalize();
    Some(LocalSurface::Plane { point: mean, normal })
}

/// Fits the surface near `around`, widening to the neighborhood radius if sparse.
pub fn local_surface(model: &PointCloudModel, around: &Vec3, config: &MaterialConfig) -> Option<LocalSurface> {
    let mut ids = model.neighbor_ids(around, CONSTRAINT_FIT_RADII * config.proxy_radius);
    if ids.len() < MIN_FIT_POINTS {
        ids = model.neighbor_ids(around, config.neighborhood_radius);
    }
    let points: Vec<Vec3> = ids.iter().map(|&id| model.point(id).position).collect();
    LocalSurface::fit(&points)
}

/// Places the proxy one radius above the surface point nearest to `candidate`.
fn constrain(
    model: &PointCloudModel,
    candidate: &Vec3,
    reference: &Vec3,
    config: &MaterialConfig,
) -> Option<(Vec3, Vec3)> {
    let rho = config.proxy_radius;
    let surface = local_surface(model, &(candidate - reference * rho), config)?;
    let (foot, normal) = surface.foot(candidate, reference)?;
    Some((foot + normal * rho, normal))
}

fn settle(hip: Vec3, placed: Option<(Vec3, Vec3)>) -> ContactState {
    match placed {
        Some((proxy, normal)) => {
            let state = ContactState { hip, proxy, normal, in_contact: false };
            if detect_collision(&state) {
                ContactState { in_contact: true, ..state }
            } else {
                ContactState::free(hip)
            }
        }
        None => ContactState::free(hip),
    }
}

/// Advances the proxy towards `new_hip`.
pub fn update_proxy(
    model: &PointCloudModel,
    state: &ContactState,
    new_hip: Vec3,
    config: &MaterialConfig,
) -> ContactState {
    if !state.in_contact {
        return first_contact(model, state.proxy, new_hip, config);
    }
    let n = state.normal;
    let v = new_hip - state.proxy;
    let into = v.dot(&n);
    let slide = if into < 0.0 { v - n * into } else { v };
    let candidate = state.proxy + slide;
    settle(new_hip, constrain(model, &candidate, &n, config))
}

/// Sweeps the free proxy from `from` to `to` in sub-radius steps until the ball touches the cloud.
fn first_contact(model: &PointCloudModel, from: Vec3, to: Vec3, config: &MaterialConfig) -> ContactState {
    let rho = config.proxy_radius;
    let travel = to - from;
    let steps = ((travel.norm() / (FREE_STEP_RADII * rho)).ceil() as usize).max(1);
    let mut previous = from;
    for s in 1..=steps {
        let p = if s == steps { to } else { from + travel * (s as f64 / steps as f64) };
        if !model.neighbor_ids(&p, rho).is_empty() {
            let Some(surface) = local_surface(model, &p, config) else {
                return ContactState::free(to);
            };
            let outward = estimate_normal(model, &p, rho).unwrap_or(previous - p);
            let placed = surface.foot(&p, &outward).map(|(foot, normal)| (foot + normal * rho, normal));
            return settle(to, placed);
        }
        previous = p;
    }
    ContactState::free(to)
}
