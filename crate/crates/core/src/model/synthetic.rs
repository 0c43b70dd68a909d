//! Deterministic synthetic clouds for demos and tests.

use super::MaterialPoint;
use crate::Vec3;

/// Ellipsoid sample with modulus varying linearly along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidSpec {
    pub semi_axes: [f64; 3],
    pub count: usize,
    /// Modulus at `x = -a`.
    pub modulus_min: f64,
    /// Modulus at `x = +a`.
    pub modulus_max: f64,
}

impl Default for EllipsoidSpec {
    fn default() -> Self {
        Self { semi_axes: [2.0, 1.5, 1.0], count: 40_000, modulus_min: 20.0, modulus_max: 200.0 }
    }
}

/// Fibonacci-lattice sample of an origin-centred ellipsoid.
///
/// The six axis endpoints come first so the bounding box is exactly
/// `[-a, a] × [-b, b] × [-c, c]`.
pub fn ellipsoid(spec: &EllipsoidSpec) -> Vec<MaterialPoint> {
    let [a, b, c] = spec.semi_axes;
    let modulus = |x: f64| spec.modulus_min + (spec.modulus_max - spec.modulus_min) * (x + a) / (2.0 * a);
    let mut out: Vec<MaterialPoint> = [
        Vec3::new(a, 0.0, 0.0),
        Vec3::new(-a, 0.0, 0.0),
        Vec3::new(0.0, b, 0.0),
        Vec3::new(0.0, -b, 0.0),
        Vec3::new(0.0, 0.0, c),
        Vec3::new(0.0, 0.0, -c),
    ]
    .into_iter()
    .take(spec.count)
    .map(|p| MaterialPoint::new(p, modulus(p.x)))
    .collect();

    let lattice = spec.count.saturating_sub(out.len());
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for k in 0..lattice {
        let y = 1.0 - (2 * k + 1) as f64 / lattice as f64;
        let ring = (1.0 - y * y).max(0.0).sqrt();
        let phi = golden * k as f64;
        let p = Vec3::new(a * ring * phi.cos(), b * y, c * ring * phi.sin());
        out.push(MaterialPoint::new(p, modulus(p.x)));
    }
    out
}

/// Rectangular sheet `z = 0` over `[-half, half]²` with constant modulus.
pub fn flat_sheet(half: f64, per_side: usize, modulus: f64) -> Vec<MaterialPoint> {
    grid_sheet(half, per_side, |_, _| (0.0, modulus))
}

/// Sheet sampled on a square grid; `surface(x, y)` gives height and modulus.
pub fn grid_sheet(half: f64, per_side: usize, surface: impl Fn(f64, f64) -> (f64, f64)) -> Vec<MaterialPoint> {
    assert!(per_side >= 2);
    let step = 2.0 * half / (per_side - 1) as f64;
    let mut out = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            let x = -half + step * i as f64;
            let y = -half + step * j as f64;
            let (z, e) = surface(x, y);
            out.push(MaterialPoint::new(Vec3::new(x, y, z), e));
        }
    }
    out
}

/// Shallow spherical cap of radius `radius` bulging towards `+z`, apex at the origin.
pub fn cap_sheet(half: f64, per_side: usize, radius: f64, modulus: impl Fn(f64, f64) -> f64) -> Vec<MaterialPoint> {
    grid_sheet(half, per_side, |x, y| {
        let z = (radius * radius - x * x - y * y).sqrt() - radius;
        (z, modulus(x, y))
    })
}
