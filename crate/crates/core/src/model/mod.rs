//! Point-cloud models with per-point elastic modulus.

mod index;
mod io;
pub mod synthetic;

pub use index::VoxelIndex;
pub use io::{load_model, load_model_with_voxel, save_csv, save_csv_fixed, ModelFormat};

use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record {record}: elastic modulus must be positive, got {value}")]
    InvalidModulus { record: usize, value: f64 },
    #[error("record {record}: position is not finite")]
    NonFinitePosition { record: usize },
    #[error("model contains no points")]
    Empty,
    #[error("unsupported PLY layout: {0}")]
    UnsupportedPly(String),
    #[error("invalid material configuration: {0}")]
    InvalidConfig(String),
}

/// One surface sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPoint {
    pub position: Vec3,
    /// Local elastic modulus `E`, force per cm².
    pub elastic_modulus: f64,
}

impl MaterialPoint {
    pub fn new(position: Vec3, elastic_modulus: f64) -> Self {
        Self { position, elastic_modulus }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }
}

/// Immutable point cloud with a uniform voxel index.
#[derive(Debug, Clone)]
pub struct PointCloudModel {
    points: Vec<MaterialPoint>,
    index: VoxelIndex,
    bounds: Bounds,
}

impl PointCloudModel {
    /// Validates the points and builds the index with the given voxel edge.
    pub fn new(points: Vec<MaterialPoint>, voxel_size: f64) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::Empty);
        }
        for (record, p) in points.iter().enumerate() {
            if !p.position.iter().all(|c| c.is_finite()) {
                return Err(ModelError::NonFinitePosition { record });
            }
            if !(p.elastic_modulus > 0.0 && p.elastic_modulus.is_finite()) {
                return Err(ModelError::InvalidModulus { record, value: p.elastic_modulus });
            }
        }
        let mut min = points[0].position;
        let mut max = points[0].position;
        for p in &points {
            min = min.inf(&p.position);
            max = max.sup(&p.position);
        }
        let index = VoxelIndex::build(points.iter().map(|p| p.position), voxel_size);
        Ok(Self { points, index, bounds: Bounds { min, max } })
    }

    pub fn points(&self) -> &[MaterialPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn index(&self) -> &VoxelIndex {
        &self.index
    }

    pub fn point(&self, id: usize) -> &MaterialPoint {
        &self.points[id]
    }

    /// All points within `radius` of `center` (inclusive), by ascending id.
    pub fn query_neighborhood(&self, center: &Vec3, radius: f64) -> Vec<(usize, MaterialPoint)> {
        self.neighbor_ids(center, radius).into_iter().map(|id| (id, self.points[id])).collect()
    }

    pub fn neighbor_ids(&self, center: &Vec3, radius: f64) -> Vec<usize> {
        if !(radius > 0.0) {
            return Vec::new();
        }
        self.index.within(center, radius, |id| self.points[id].position)
    }

    /// Id of the closest point; equal distances go to the smaller id.
    pub fn nearest(&self, target: &Vec3) -> usize {
        let mut radius = self.index.voxel_size();
        let reach = self.bounds.diagonal() + (target - self.bounds.min).norm();
        loop {
            let ids = self.neighbor_ids(target, radius);
            if !ids.is_empty() || radius > reach {
                if ids.is_empty() {
                    // only possible through rounding at the outer radius
                    return self.nearest_linear(target);
                }
                return self.closest_of(target, ids.into_iter());
            }
            radius *= 2.0;
        }
    }

    fn nearest_linear(&self, target: &Vec3) -> usize {
        self.closest_of(target, 0..self.points.len())
    }

    fn closest_of(&self, target: &Vec3, ids: impl Iterator<Item = usize>) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        for id in ids {
            let d2 = (self.points[id].position - target).norm_squared();
            if d2 < best.0 || (d2 == best.0 && id < best.1) {
                best = (d2, id);
            }
        }
        best.1
    }
}

/// Global material and contact parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MaterialConfig {
    /// Plate thickness `h`, cm.
    pub thickness: f64,
    /// Poisson ratio ν.
    pub poisson: f64,
    /// Radius of the spherical proxy, cm.
    pub proxy_radius: f64,
    /// Radius of the patch handed to the sphere fit, cm.
    pub neighborhood_radius: f64,
    /// Contact area `A` in the force law, cm².
    pub contact_area: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        let proxy_radius = 0.1;
        Self {
            thickness: 0.2,
            poisson: 0.2,
            proxy_radius,
            neighborhood_radius: 8.0 * proxy_radius,
            contact_area: 0.01,
        }
    }
}

impl MaterialConfig {
    /// Defaults with the neighborhood tied to a new proxy radius.
    pub fn with_proxy_radius(proxy_radius: f64) -> Self {
        Self { proxy_radius, neighborhood_radius: 8.0 * proxy_radius, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if !(self.thickness > 0.0) {
            return bad(format!("thickness {} must be positive", self.thickness));
        }
        if !(0.0..0.3).contains(&self.poisson) {
            return bad(format!("poisson ratio {} outside [0, 0.3)", self.poisson));
        }
        if !(self.proxy_radius > 0.0) {
            return bad(format!("proxy radius {} must be positive", self.proxy_radius));
        }
        if !(self.neighborhood_radius > self.proxy_radius) {
            return bad(format!(
                "neighborhood radius {} must exceed proxy radius {}",
                self.neighborhood_radius, self.proxy_radius
            ));
        }
        if !(self.contact_area > 0.0) {
            return bad(format!("contact area {} must be positive", self.contact_area));
        }
        Ok(())
    }

    /// Force per unit penetration for modulus `e`: `E A / h`.
    pub fn contact_stiffness(&self, e: f64) -> f64 {
        e * self.contact_area / self.thickness
    }
}

/// Plate bending stiffness `E h³ / (12 (1 − ν²))`.
pub fn flexural_rigidity(elastic_modulus: f64, config: &MaterialConfig) -> f64 {
    let h = config.thickness;
    elastic_modulus * h * h * h / (12.0 * (1.0 - config.poisson * config.poisson))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(h: f64, nu: f64) -> MaterialConfig {
        MaterialConfig { thickness: h, poisson: nu, ..MaterialConfig::default() }
    }

    #[test]
    fn rigidity_reference_values() {
        assert_eq!(flexural_rigidity(12.0, &cfg(1.0, 0.0)), 1.0);
        assert!((flexural_rigidity(1.0, &cfg(1.0, 0.0)) - 1.0 / 12.0).abs() < 1e-15);
        assert!((flexural_rigidity(11.52, &cfg(1.0, 0.2)) - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn rigidity_homogeneity(e in 0.01..100.0f64, h in 0.01..2.0f64, k in 0.1..10.0f64, nu in 0.0..0.29f64) {
            let base = flexural_rigidity(e, &cfg(h, nu));
            let scaled_e = flexural_rigidity(k * e, &cfg(h, nu));
            let scaled_h = flexural_rigidity(e, &cfg(k * h, nu));
            prop_assert!((scaled_e - k * base).abs() <= 1e-12 * scaled_e);
            prop_assert!((scaled_h - k * k * k * base).abs() <= 1e-12 * scaled_h);
            prop_assert!(flexural_rigidity(e * 1.01, &cfg(h, nu)) > base);
        }
    }

    #[test]
    fn config_invariants() {
        assert!(MaterialConfig::default().validate().is_ok());
        assert!(cfg(1.0, 0.3).validate().is_err());
        let mut c = MaterialConfig::default();
        c.neighborhood_radius = c.proxy_radius;
        assert!(c.validate().is_err());
    }

    #[test]
    fn nearest_ties_prefer_smaller_id() {
        let pts = vec![
            MaterialPoint::new(Vec3::new(1.0, 0.0, 0.0), 3.0),
            MaterialPoint::new(Vec3::new(-1.0, 0.0, 0.0), 5.0),
        ];
        let model = PointCloudModel::new(pts, 0.2).unwrap();
        assert_eq!(model.nearest(&Vec3::zeros()), 0);
        assert_eq!(model.nearest(&Vec3::new(-0.9, 3.0, 0.0)), 1);
        assert_eq!(model.nearest(&Vec3::new(50.0, 0.0, 0.0)), 0);
    }

    #[test]
    fn empty_and_invalid_models() {
        assert!(matches!(PointCloudModel::new(vec![], 1.0), Err(ModelError::Empty)));
        let bad = vec![MaterialPoint::new(Vec3::zeros(), 0.0)];
        assert!(matches!(PointCloudModel::new(bad, 1.0), Err(ModelError::InvalidModulus { record: 0, .. })));
        let bad = vec![MaterialPoint::new(Vec3::new(f64::NAN, 0.0, 0.0), 1.0)];
        assert!(matches!(PointCloudModel::new(bad, 1.0), Err(ModelError::NonFinitePosition { record: 0 })));
    }
}
