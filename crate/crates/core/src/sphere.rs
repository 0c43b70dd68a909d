//! Algebraic sphere fit under the Pratt normalization.
//!
//! A sphere is the zero set of `u0 |x|² + u1 x + u2 y + u3 z + u4`, scaled
//! so that `u1² + u2² + u3² − 4 u0 u4 = 1`. Minimising `|D u|²` under that
//! constraint is the generalized problem `DᵀD u = λ C u`.
//!
//! The fit runs on centred, unit-scaled points: a thin QR of the design
//! matrix gives `R`, its SVD gives `Y = V S Vᵀ` with `Y² = DᵀD`, and the
//! pencil reduces to the symmetric matrix `Y C⁻¹ Y`, whose eigenvalues are
//! the λ above. `C⁻¹` is known in closed form.

use nalgebra::{DMatrix, Matrix5, SymmetricEigen, Vector5};

use crate::Vec3;

/// Smallest number of samples a fit accepts.
pub const MIN_FIT_POINTS: usize = 5;
/// `|u0| / |u|` below which the fit is treated as a plane.
const PLANE_LIMIT: f64 = 1e-9;
/// Relative singular value treated as an exact interpolation.
const EXACT_FIT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least {MIN_FIT_POINTS} points, got {0}")]
    InsufficientData(usize),
    #[error("points are coplanar or collinear; no finite sphere fits")]
    Degenerate,
    #[error("eigen-solver produced no admissible solution")]
    Numerical,
    #[error("point coincides with the sphere center")]
    UndefinedDirection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicSphere {
    pub u: [f64; 5],
    pub center: Vec3,
    pub radius: f64,
}

impl AlgebraicSphere {
    /// The sphere through `center` with `radius`, Pratt-normalized with `u0 > 0`.
    pub fn from_center_radius(center: Vec3, radius: f64) -> Self {
        assert!(radius > 0.0, "radius must be positive");
        let s = 1.0 / (2.0 * radius);
        let u = [s, -2.0 * center.x * s, -2.0 * center.y * s, -2.0 * center.z * s, (center.norm_squared() - radius * radius) * s];
        Self { u, center, radius }
    }

    /// Algebraic distance `u0 |p|² + u1 px + u2 py + u3 pz + u4`.
    pub fn algebraic(&self, p: &Vec3) -> f64 {
        let u = &self.u;
        u[0] * p.norm_squared() + u[1] * p.x + u[2] * p.y + u[3] * p.z + u[4]
    }

    /// `u1² + u2² + u3² − 4 u0 u4`.
    pub fn pratt_norm(&self) -> f64 {
        pratt(&Vector5::from(self.u))
    }

    /// Unit direction from the center towards `p`.
    pub fn direction(&self, p: &Vec3) -> Result<Vec3, FitError> {
        let d = p - self.center;
        let len = d.norm();
        if !(len > 0.0) {
            return Err(FitError::UndefinedDirection);
        }
        Ok(d / len)
    }
}

fn pratt(u: &Vector5<f64>) -> f64 {
    u[1] * u[1] + u[2] * u[2] + u[3] * u[3] - 4.0 * u[0] * u[4]
}

fn c_inverse() -> Matrix5<f64> {
    let mut m = Matrix5::zeros();
    m[(0, 4)] = -0.5;
    m[(4, 0)] = -0.5;
    for k in 1..4 {
        m[(k, k)] = 1.0;
    }
    m
}

/// Pratt fit of a sphere to `points`.
pub fn fit_sphere(points: &[Vec3]) -> Result<AlgebraicSphere, FitError> {
    if points.len() < MIN_FIT_POINTS {
        return Err(FitError::InsufficientData(points.len()));
    }
    if !points.iter().all(|p| p.iter().all(|c| c.is_finite())) {
        return Err(FitError::Numerical);
    }
    let count = points.len() as f64;
    let mean = points.iter().fold(Vec3::zeros(), |a, p| a + p) / count;
    let scale = (points.iter().map(|p| (p - mean).norm_squared()).sum::<f64>() / count).sqrt();
    if !(scale > 0.0) {
        return Err(FitError::Degenerate);
    }

    let design = DMatrix::from_fn(points.len(), 5, |row, col| {
        let p = (points[row] - mean) / scale;
        match col {
            0 => p.norm_squared(),
            1 => p.x,
            2 => p.y,
            3 => p.z,
            _ => 1.0,
        }
    });
    let r: Matrix5<f64> = design.clone().qr().r().fixed_view::<5, 5>(0, 0).into_owned();
    let svd = r.svd(false, true);
    let v_t = svd.v_t.ok_or(FitError::Numerical)?;
    let sigma = svd.singular_values;
    let sigma_max = sigma.max();
    if !(sigma_max > 0.0) {
        return Err(FitError::Degenerate);
    }
    let v = v_t.transpose();
    let residual = |u: &Vector5<f64>| (&design * u).norm();

    let smallest = sigma.imin();
    let candidate = if sigma[smallest] < EXACT_FIT * sigma_max {
        // the data interpolate a quadric of this family exactly
        let u: Vector5<f64> = v.column(smallest).into_owned();
        if pratt(&u) > 0.0 {
            Some(u)
        } else {
            None
        }
    } else {
        let y = v * Matrix5::from_diagonal(&sigma) * v_t;
        let y_inv = v * Matrix5::from_diagonal(&sigma.map(|s| 1.0 / s)) * v_t;
        let mut q = y * c_inverse() * y;
        q = (q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(q);
        let mut best: Option<(f64, f64, Vector5<f64>)> = None;
        for k in 0..5 {
            let lambda = eig.eigenvalues[k];
            let u: Vector5<f64> = y_inv * eig.eigenvectors.column(k);
            // λ = uᵀDᵀDu / uᵀCu, so the admissible side is λ > 0
            if !(lambda > 0.0) || !(pratt(&u) > 0.0) {
                continue;
            }
            let u = u / pratt(&u).sqrt();
            let res = residual(&u);
            let better = match &best {
                None => true,
                Some((bl, br, _)) => {
                    let tie = (lambda - bl).abs() <= 1e-12 * bl.abs().max(lambda.abs());
                    if tie {
                        res < *br
                    } else {
                        lambda < *bl
                    }
                }
            };
            if better {
                best = Some((lambda, res, u));
            }
        }
        best.map(|(_, _, u)| u)
    };
    let mut u = candidate.ok_or(FitError::Numerical)?;
    u /= pratt(&u).sqrt();
    if u[0] < 0.0 {
        u = -u;
    }
    if u[0].abs() < PLANE_LIMIT * u.norm() {
        return Err(FitError::Degenerate);
    }

    let c_norm = -Vec3::new(u[1], u[2], u[3]) / (2.0 * u[0]);
    let r2 = c_norm.norm_squared() - u[4] / u[0];
    if !(r2 > 0.0) {
        return Err(FitError::Degenerate);
    }
    let center = mean + c_norm * scale;
    let radius = r2.sqrt() * scale;
    if !(radius.is_finite() && center.iter().all(|c| c.is_finite())) {
        return Err(FitError::Degenerate);
    }
    Ok(AlgebraicSphere::from_center_radius(center, radius))
}

/// Radial projection of `p` onto the sphere (the nearer ray intersection).
pub fn project_to_sphere(p: &Vec3, sphere: &AlgebraicSphere) -> Result<Vec3, FitError> {
    Ok(sphere.center + sphere.direction(p)? * sphere.radius)
}

/// Keeps the closed hemisphere facing `proxy_on_sphere`.
pub fn cull_hemisphere(
    projected: &[(usize, Vec3)],
    sphere: &AlgebraicSphere,
    proxy_on_sphere: &Vec3,
) -> Vec<(usize, Vec3)> {
    let axis = proxy_on_sphere - sphere.center;
    projected.iter().filter(|(_, p)| (p - sphere.center).dot(&axis) >= 0.0).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> Vec3 {
        loop {
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                return v / n;
            }
        }
    }

    #[test]
    fn unit_sphere_from_26_points() {
        let mut pts = Vec::new();
        for x in -1..=1 {
            for y in -1..=1 {
                for z in -1..=1 {
                    if (x, y, z) != (0, 0, 0) {
                        pts.push(Vec3::new(x as f64, y as f64, z as f64).normalize());
                    }
                }
            }
        }
        assert_eq!(pts.len(), 26);
        let s = fit_sphere(&pts).unwrap();
        assert!(s.center.norm() < 1e-9);
        assert!((s.radius - 1.0).abs() < 1e-9);
        assert!((s.pratt_norm() - 1.0).abs() < 1e-12);
        for e in [Vec3::x(), Vec3::y(), Vec3::z()] {
            assert!(s.algebraic(&(s.center + e * s.radius)).abs() < 1e-12);
            assert!(s.algebraic(&(s.center - e * s.radius)).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_offset_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = Vec3::new(1.0, 2.0, 3.0);
        let pts: Vec<Vec3> = (0..200)
            .map(|_| {
                let noise = Vec3::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3));
                c + random_unit(&mut rng) * 2.0 + noise
            })
            .collect();
        let s = fit_sphere(&pts).unwrap();
        assert!((s.center - c).norm() < 5e-3);
        assert!((s.radius - 2.0).abs() < 5e-3);
    }

    #[test]
    fn coplanar_and_short_inputs() {
        let plane: Vec<Vec3> = (0..8).map(|k| Vec3::new((k % 3) as f64, (k / 3) as f64 * 0.7, 0.0)).collect();
        assert_eq!(fit_sphere(&plane), Err(FitError::Degenerate));
        let tilted: Vec<Vec3> = (0..12).map(|k| Vec3::new(k as f64, (k * k % 5) as f64, 0.5 * k as f64 - 0.2 * (k * k % 5) as f64)).collect();
        assert_eq!(fit_sphere(&tilted), Err(FitError::Degenerate));
        assert_eq!(fit_sphere(&plane[..4]), Err(FitError::InsufficientData(4)));
        assert_eq!(fit_sphere(&[Vec3::zeros(); 6]), Err(FitError::Degenerate));
    }

    #[test]
    fn projection_examples() {
        let unit = AlgebraicSphere::from_center_radius(Vec3::zeros(), 1.0);
        assert_eq!(project_to_sphere(&Vec3::new(0.0, 0.0, 2.0), &unit).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(project_to_sphere(&Vec3::new(0.3, 0.0, 0.0), &unit).unwrap(), Vec3::new(1.0, 0.0, 0.0));
        let on = Vec3::new(0.6, 0.8, 0.0);
        assert!((project_to_sphere(&on, &unit).unwrap() - on).norm() < 1e-15);
        assert_eq!(project_to_sphere(&Vec3::zeros(), &unit), Err(FitError::UndefinedDirection));
    }

    #[test]
    fn culling_keeps_the_facing_half() {
        let s = AlgebraicSphere::from_center_radius(Vec3::new(1.0, 0.0, 0.0), 2.0);
        let proxy = Vec3::new(3.0, 0.0, 0.0);
        let pts = vec![(0, proxy), (1, Vec3::new(-1.0, 0.0, 0.0)), (2, Vec3::new(1.0, 2.0, 0.0))];
        let kept: Vec<usize> = cull_hemisphere(&pts, &s, &proxy).into_iter().map(|(id, _)| id).collect();
        assert_eq!(kept, vec![0, 2]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sample: Vec<(usize, Vec3)> = (0..1000).map(|k| (k, s.center + random_unit(&mut rng) * 2.0)).collect();
        let frac = cull_hemisphere(&sample, &s, &proxy).len() as f64 / 1000.0;
        assert!((frac - 0.5).abs() < 0.05, "{frac}");
    }

    proptest! {
        #[test]
        fn exact_recovery(seed in any::<u64>(), count in 5usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = Vec3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let r = rng.gen_range(0.5..5.0);
            let pts: Vec<Vec3> = (0..count).map(|_| c + random_unit(&mut rng) * r).collect();
            let s = fit_sphere(&pts).unwrap();
            prop_assert!((s.center - c).norm() < 1e-8, "center {:?} vs {:?}", s.center, c);
            prop_assert!((s.radius - r).abs() < 1e-8);
            prop_assert!((s.pratt_norm() - 1.0).abs() < 1e-6);
        }

        #[test]
        fn rigid_motion_equivariance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let r = rng.gen_range(0.5..5.0);
            // noisy data, so the fit is a genuine least-squares compromise
            let pts: Vec<Vec3> = (0..30)
                .map(|_| c + random_unit(&mut rng) * r * rng.gen_range(0.98..1.02))
                .collect();
            let rot = Rotation3::from_axis_angle(&Unit::new_normalize(random_unit(&mut rng)), rng.gen_range(0.0..6.0));
            let shift = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let moved: Vec<Vec3> = pts.iter().map(|p| rot * p + shift).collect();
            let a = fit_sphere(&pts).unwrap();
            let b = fit_sphere(&moved).unwrap();
            prop_assert!((rot * a.center + shift - b.center).norm() < 1e-8);
            prop_assert!((a.radius - b.radius).abs() < 1e-8);
        }

        #[test]
        fn projection_is_idempotent(x in -3.0..3.0f64, y in -3.0..3.0f64, z in -3.0..3.0f64, r in 0.1..4.0f64) {
            let s = AlgebraicSphere::from_center_radius(Vec3::new(0.5, -0.25, 1.0), r);
            let p = Vec3::new(x, y, z);
            prop_assume!((p - s.center).norm() > 1e-6);
            let once = project_to_sphere(&p, &s).unwrap();
            let twice = project_to_sphere(&once, &s).unwrap();
            prop_assert!(((once - s.center).norm() - r).abs() < 1e-12 * r.max(1.0) * 4.0);
            prop_assert!((once - twice).norm() < 1e-12 * r.max(1.0) * 4.0);
        }
    }
}
