//! Force law and deformation back-projection.

use crate::model::{MaterialConfig, PointCloudModel};
use crate::proxy::ContactState;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ForceError {
    #[error("no force outside contact")]
    NotInContact,
    #[error("elastic modulus must be positive, got {0}")]
    InvalidModulus(f64),
    #[error("{points} points but {values} deflections")]
    LengthMismatch { points: usize, values: usize },
    #[error("force direction has length {0}, expected 1")]
    NotUnit(f64),
}

/// Rendered reaction force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub magnitude: f64,
    /// Outward surface normal: the reaction pushes the HIP out.
    pub direction: Vec3,
    /// Seconds on the session clock.
    pub timestamp: f64,
}

impl ForceSample {
    pub fn vector(&self) -> Vec3 {
        self.direction * self.magnitude
    }
}

/// `(E A / h) |X_h − X_p|` along the outward normal.
pub fn compute_force(
    state: &ContactState,
    elastic_modulus: f64,
    config: &MaterialConfig,
    timestamp: f64,
) -> Result<ForceSample, ForceError> {
    if !state.in_contact {
        return Err(ForceError::NotInContact);
    }
    if !(elastic_modulus > 0.0 && elastic_modulus.is_finite()) {
        return Err(ForceError::InvalidModulus(elastic_modulus));
    }
    let magnitude = config.contact_stiffness(elastic_modulus) * state.penetration();
    Ok(ForceSample { magnitude, direction: state.normal, timestamp })
}

/// Modulus of the point nearest to `contact`.
pub fn lookup_local_modulus(model: &PointCloudModel, contact: &Vec3) -> f64 {
    model.point(model.nearest(contact)).elastic_modulus
}

/// Moves each point by its deflection along the applied-force direction.
pub fn back_project(
    patch_points: &[(usize, Vec3)],
    deflections: &[f64],
    force_dir: &Vec3,
) -> Result<Vec<(usize, Vec3)>, ForceError> {
    if patch_points.len() != deflections.len() {
        return Err(ForceError::LengthMismatch { points: patch_points.len(), values: deflections.len() });
    }
    let len = force_dir.norm();
    if (len - 1.0).abs() > 1e-9 {
        return Err(ForceError::NotUnit(len));
    }
    Ok(patch_points.iter().zip(deflections).map(|(&(id, p), &w)| (id, p + force_dir * w)).collect())
}
