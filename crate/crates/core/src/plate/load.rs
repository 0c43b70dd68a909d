use super::grid::{GridSpec, NodeField, CLAMPED_RINGS};
use super::PlateError;
use crate::projection::PlanarPoint;

/// Transverse pressure on the grid nodes (force per unit area).
#[derive(Debug, Clone)]
pub struct LoadField {
    pub spec: GridSpec,
    pub q: NodeField,
}

impl LoadField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, q: NodeField::zeros(spec.n) }
    }

    /// Uniform pressure on every free node.
    pub fn uniform(spec: GridSpec, pressure: f64) -> Self {
        let q = NodeField::from_fn(spec.n, |i, j| if spec.is_free(i, j) { pressure } else { 0.0 });
        Self { spec, q }
    }

    pub fn from_nodes(spec: GridSpec, q: NodeField) -> Result<Self, PlateError> {
        if q.n() != spec.n {
            return Err(PlateError::ShapeMismatch(format!("load is {}x{}, grid is {}x{}", q.n(), q.n(), spec.n, spec.n)));
        }
        Ok(Self { spec, q })
    }

    /// Integrated force, `sum(q) * spacing^2`.
    pub fn total_force(&self) -> f64 {
        self.q.sum() * self.spec.spacing * self.spec.spacing
    }
}

/// Spreads a point force over the four nodes around `contact` with
/// bilinear weights.
pub fn assemble_load(force_magnitude: f64, contact: &PlanarPoint, spec: GridSpec) -> Result<LoadField, PlateError> {
    if !(force_magnitude >= 0.0 && force_magnitude.is_finite()) {
        return Err(PlateError::InvalidForce(force_magnitude));
    }
    let [fx, fz] = spec.fractional(contact.x, contact.z);
    let lo = CLAMPED_RINGS as f64;
    let hi = (spec.n - 1 - CLAMPED_RINGS) as f64;
    if !(fx >= lo && fx <= hi && fz >= lo && fz <= hi) {
        return Err(PlateError::OutOfDomain { x: contact.x, z: contact.z });
    }
    let mut load = LoadField::zeros(spec);
    if force_magnitude == 0.0 {
        return Ok(load);
    }
    let pressure = force_magnitude / (spec.spacing * spec.spacing);
    let (i0, tx) = cell(fx, spec.n - 1 - CLAMPED_RINGS);
    let (j0, tz) = cell(fz, spec.n - 1 - CLAMPED_RINGS);
    let weights = [
        (i0, j0, (1.0 - tx) * (1.0 - tz)),
        (i0 + 1, j0, tx * (1.0 - tz)),
        (i0, j0 + 1, (1.0 - tx) * tz),
        (i0 + 1, j0 + 1, tx * tz),
    ];
    for (i, j, w) in weights {
        if w != 0.0 {
            load.q.add(i, j, w * pressure);
        }
    }
    Ok(load)
}

/// Lower cell index and fractional offset, keeping the upper node at or
/// below `last`.
fn cell(f: f64, last: usize) -> (usize, f64) {
    let i0 = f.floor() as usize;
    if i0 >= last {
        (last - 1, 1.0)
    } else {
        (i0, f - i0 as f64)
    }
}
