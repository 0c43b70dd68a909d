//! Variable-rigidity Kirchhoff plate on a uniform grid with clamped edges.
//!
//! The deflection `w` is held at zero on the two outermost node rings,
//! which pins both the value and the slope at the plate edge. Two solvers
//! share one discretization: damped Jacobi relaxation and a banded LU
//! factorization. [`oracle`] provides an independently assembled dense
//! solve for cross-checking.

mod banded;
mod grid;
mod jacobi;
mod load;
pub mod matrix_io;
pub mod oracle;
mod rigidity;
mod stencil;

pub use banded::{solve_direct, PlateFactorization};
pub use grid::{GridSpec, NodeField, CLAMPED_RINGS, MIN_NODES};
pub use jacobi::{solve_deformation, solve_deformation_with_cancel, CancelToken, SolverMethod, SolverSettings};
pub use load::{assemble_load, LoadField};
pub use oracle::oracle_direct_solve;
pub use rigidity::{rasterize_rigidity, RigidityGrid};
pub use stencil::{PlateOperator, OFFSETS};

use crate::projection::PlanarPoint;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum PlateError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("flexural rigidity must be positive and finite, got {0}")]
    NonPositiveRigidity(f64),
    #[error("poisson ratio {0} outside [0, 0.5)")]
    InvalidPoisson(f64),
    #[error("no rigidity samples to rasterize")]
    NoSamples,
    #[error("force magnitude must be finite and non-negative, got {0}")]
    InvalidForce(f64),
    #[error("point ({x}, {z}) lies outside the solvable grid interior")]
    OutOfDomain { x: f64, z: f64 },
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
    #[error("ill-conditioned rigidity: centre coefficient {coefficient} at node ({i}, {j})")]
    IllConditioned { i: usize, j: usize, coefficient: f64 },
    #[error("jacobi did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("jacobi diverged after {iterations} iterations (residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },
    #[error("plate operator is singular")]
    SingularOperator,
    #[error("solve cancelled")]
    Cancelled,
}

/// Solved transverse deflection.
#[derive(Debug, Clone)]
pub struct DeformationField {
    pub spec: GridSpec,
    pub w: NodeField,
    pub iterations: usize,
    /// Max-norm of `q − A w` over the free nodes.
    pub residual: f64,
}

impl DeformationField {
    pub fn max_abs(&self) -> f64 {
        self.w.max_abs()
    }

    /// Deflection at the node nearest the grid centre.
    pub fn center_value(&self) -> f64 {
        let c = self.spec.n / 2;
        if self.spec.n % 2 == 1 {
            self.w.get(c, c)
        } else {
            0.25 * (self.w.get(c - 1, c - 1) + self.w.get(c, c - 1) + self.w.get(c - 1, c) + self.w.get(c, c))
        }
    }
}

/// Solves with the method selected in `settings`.
pub fn solve_plate(
    rig: &RigidityGrid,
    load: &LoadField,
    settings: &SolverSettings,
    cancel: &CancelToken,
) -> Result<DeformationField, PlateError> {
    match settings.method {
        SolverMethod::Jacobi => solve_deformation_with_cancel(rig, load, settings, cancel),
        SolverMethod::Direct => PlateFactorization::factor_with_cancel(rig, cancel)?.solve(load),
    }
}

/// Bilinear interpolation of the deflection at a planar location.
pub fn sample_deformation(field: &DeformationField, p: &PlanarPoint) -> Result<f64, PlateError> {
    let spec = field.spec;
    let [fx, fz] = spec.fractional(p.x, p.z);
    let last = (spec.n - 1) as f64;
    if !(fx >= 0.0 && fx <= last && fz >= 0.0 && fz <= last) {
        return Err(PlateError::OutOfDomain { x: p.x, z: p.z });
    }
    let split = |f: f64| {
        let i = (f.floor() as usize).min(spec.n - 2);
        (i, f - i as f64)
    };
    let (i, tx) = split(fx);
    let (j, tz) = split(fz);
    let w = &field.w;
    Ok((1.0 - tx) * (1.0 - tz) * w.get(i, j)
        + tx * (1.0 - tz) * w.get(i + 1, j)
        + (1.0 - tx) * tz * w.get(i, j + 1)
        + tx * tz * w.get(i + 1, j + 1))
}
