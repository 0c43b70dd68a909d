//! Dense reference solve used to validate the production solvers.
//!
//! The operator here is evaluated term by term from composed difference
//! quotients (∇⁴ as the five-point Laplacian applied twice, gradients of
//! the Laplacian as centred differences of it) rather than from the
//! precomputed 13-coefficient stencil, so the two assemblies check each
//! other.

use nalgebra::{DMatrix, DVector};

use super::grid::{NodeField, CLAMPED_RINGS};
use super::load::LoadField;
use super::rigidity::RigidityGrid;
use super::{DeformationField, PlateError};

/// Largest grid the dense oracle accepts.
pub const ORACLE_MAX_NODES: usize = 64;

fn lap(w: &NodeField, i: usize, j: usize, h2: f64) -> f64 {
    (w.get(i + 1, j) + w.get(i - 1, j) + w.get(i, j + 1) + w.get(i, j - 1) - 4.0 * w.get(i, j)) / h2
}

/// Discrete left-hand side at one free node.
pub fn reference_operator_at(rig: &RigidityGrid, w: &NodeField, i: usize, j: usize) -> f64 {
    let h = rig.spec.spacing;
    let h2 = h * h;
    let bih = (lap(w, i + 1, j, h2) + lap(w, i - 1, j, h2) + lap(w, i, j + 1, h2) + lap(w, i, j - 1, h2)
        - 4.0 * lap(w, i, j, h2))
        / h2;
    let dlap_x = (lap(w, i + 1, j, h2) - lap(w, i - 1, j, h2)) / (2.0 * h);
    let dlap_z = (lap(w, i, j + 1, h2) - lap(w, i, j - 1, h2)) / (2.0 * h);
    let w_xx = (w.get(i + 1, j) - 2.0 * w.get(i, j) + w.get(i - 1, j)) / h2;
    let w_zz = (w.get(i, j + 1) - 2.0 * w.get(i, j) + w.get(i, j - 1)) / h2;
    let w_xz = (w.get(i + 1, j + 1) - w.get(i + 1, j - 1) - w.get(i - 1, j + 1) + w.get(i - 1, j - 1)) / (4.0 * h2);

    rig.d.get(i, j) * bih
        + 2.0 * rig.dx.get(i, j) * dlap_x
        + 2.0 * rig.dz.get(i, j) * dlap_z
        + rig.lap_d.get(i, j) * lap(w, i, j, h2)
        - (1.0 - rig.poisson)
            * (rig.dxx.get(i, j) * w_zz - 2.0 * rig.dxz.get(i, j) * w_xz + rig.dzz.get(i, j) * w_xx)
}

/// Dense matrix of the discrete operator over the free nodes.
pub fn assemble_dense(rig: &RigidityGrid) -> DMatrix<f64> {
    let spec = rig.spec;
    let m = spec.free_side();
    let size = m * m;
    let mut a = DMatrix::zeros(size, size);
    let mut probe = NodeField::zeros(spec.n);
    for col in 0..size {
        let (ci, cj) = (col / m + CLAMPED_RINGS, col % m + CLAMPED_RINGS);
        probe.set(ci, cj, 1.0);
        for i in ci.saturating_sub(2).max(CLAMPED_RINGS)..=(ci + 2).min(spec.n - 1 - CLAMPED_RINGS) {
            for j in cj.saturating_sub(2).max(CLAMPED_RINGS)..=(cj + 2).min(spec.n - 1 - CLAMPED_RINGS) {
                let row = (i - CLAMPED_RINGS) * m + (j - CLAMPED_RINGS);
                a[(row, col)] = reference_operator_at(rig, &probe, i, j);
            }
        }
        probe.set(ci, cj, 0.0);
    }
    a
}

/// Assembles the full operator and solves it with dense LU.
pub fn oracle_direct_solve(rig: &RigidityGrid, load: &LoadField) -> Result<DeformationField, PlateError> {
    let spec = rig.spec;
    if spec.n > ORACLE_MAX_NODES {
        return Err(PlateError::InvalidGrid(format!(
            "dense oracle supports n <= {ORACLE_MAX_NODES}, got {}",
            spec.n
        )));
    }
    if !spec.same_layout(&load.spec) {
        return Err(PlateError::ShapeMismatch("rigidity and load grids differ".into()));
    }
    let m = spec.free_side();
    let a = assemble_dense(rig);
    let b = DVector::from_fn(m * m, |k, _| load.q.get(k / m + CLAMPED_RINGS, k % m + CLAMPED_RINGS));
    let x = a.clone().lu().solve(&b).ok_or(PlateError::SingularOperator)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(PlateError::SingularOperator);
    }
    let mut w = NodeField::zeros(spec.n);
    for (k, v) in x.iter().enumerate() {
        w.set(k / m + CLAMPED_RINGS, k % m + CLAMPED_RINGS, *v);
    }
    let r = &b - &a * &x;
    let residual = r.amax();
    Ok(DeformationField { spec, w, iterations: 1, residual })
}
