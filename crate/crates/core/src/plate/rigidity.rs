use super::grid::{diff2_i, diff2_j, diff_i, diff_j, GridSpec, NodeField};
use super::PlateError;
use crate::projection::PlanarPoint;

/// Flexural rigidity sampled on the solver grid, together with the
/// derivative fields the variable-coefficient plate operator consumes.
#[derive(Debug, Clone)]
pub struct RigidityGrid {
    pub spec: GridSpec,
    pub poisson: f64,
    pub d: NodeField,
    pub dx: NodeField,
    pub dz: NodeField,
    pub dxx: NodeField,
    pub dzz: NodeField,
    pub dxz: NodeField,
    pub lap_d: NodeField,
}

impl RigidityGrid {
    /// Builds the derivative fields from nodal rigidity values.
    pub fn from_nodes(spec: GridSpec, poisson: f64, d: NodeField) -> Result<Self, PlateError> {
        if d.n() != spec.n {
            return Err(PlateError::ShapeMismatch(format!(
                "rigidity field is {}x{}, grid is {}x{}",
                d.n(),
                d.n(),
                spec.n,
                spec.n
            )));
        }
        if let Some(bad) = d.values().iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(PlateError::NonPositiveRigidity(*bad));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(PlateError::InvalidPoisson(poisson));
        }
        let h = spec.spacing;
        let dx = diff_i(&d, h);
        let dz = diff_j(&d, h);
        let dxx = diff2_i(&d, h);
        let dzz = diff2_j(&d, h);
        let dxz = diff_j(&dx, h);
        let lap_d = NodeField::from_fn(spec.n, |i, j| dxx.get(i, j) + dzz.get(i, j));
        Ok(Self { spec, poisson, d, dx, dz, dxx, dzz, dxz, lap_d })
    }

    pub fn constant(spec: GridSpec, poisson: f64, value: f64) -> Result<Self, PlateError> {
        Self::from_nodes(spec, poisson, NodeField::from_fn(spec.n, |_, _| value))
    }

    /// Same grid with every rigidity value multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self, PlateError> {
        Self::from_nodes(self.spec, self.poisson, self.d.scaled(k))
    }

    /// Coefficient multiplying the centre node in the discrete operator.
    pub fn center_coefficient(&self, i: usize, j: usize) -> f64 {
        let h = self.spec.spacing;
        let h2 = h * h;
        20.0 * self.d.get(i, j) / (h2 * h2) - 4.0 * self.lap_d.get(i, j) / h2
            + 2.0 * (1.0 - self.poisson) * (self.dxx.get(i, j) + self.dzz.get(i, j)) / h2
    }
}

/// Nearest-sample rasterization of rigidity onto the grid.
///
/// Each node takes the rigidity of the closest planar sample; equal
/// distances go to the smaller source id.
pub fn rasterize_rigidity(
    samples: &[(PlanarPoint, f64)],
    spec: GridSpec,
    poisson: f64,
) -> Result<RigidityGrid, PlateError> {
    if samples.is_empty() {
        return Err(PlateError::NoSamples);
    }
    if let Some((_, bad)) = samples.iter().find(|(_, d)| !(*d > 0.0 && d.is_finite())) {
        return Err(PlateError::NonPositiveRigidity(*bad));
    }
    let d = NodeField::from_fn(spec.n, |i, j| {
        let [x, z] = spec.node_position(i, j);
        let mut best = (f64::INFINITY, usize::MAX, 0.0);
        for (p, value) in samples {
            let dist2 = (p.x - x).powi(2) + (p.z - z).powi(2);
            if dist2 < best.0 || (dist2 == best.0 && p.source_id < best.1) {
                best = (dist2, p.source_id, *value);
            }
        }
        best.2
    });
    RigidityGrid::from_nodes(spec, poisson, d)
}
