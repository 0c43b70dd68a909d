//! Contact patch construction and plate solve for one contact state.

use std::time::Instant;

use crate::force::{back_project, ForceError, ForceSample};
use crate::model::{flexural_rigidity, PointCloudModel};
use crate::plate::{
    assemble_load, rasterize_rigidity, sample_deformation, solve_deformation_with_cancel, CancelToken, GridSpec,
    PlateError, PlateFactorization, RigidityGrid, SolverMethod,
};
use crate::projection::{build_frame, to_plane, PatchFrame, PlanarPoint, ProjectionError};
use crate::proxy::ContactState;
use crate::sphere::{cull_hemisphere, fit_sphere, project_to_sphere, AlgebraicSphere, FitError};
use crate::Vec3;

use super::{EngineConfig, SolverStats};

/// Why a step rendered force without deformation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StageError {
    #[error("sphere fit: {0}")]
    Fit(#[from] FitError),
    #[error("projection: {0}")]
    Projection(#[from] ProjectionError),
    #[error("plate: {0}")]
    Plate(#[from] PlateError),
    #[error("force: {0}")]
    Force(#[from] ForceError),
}

impl StageError {
    pub fn is_cancelled(&self) -> bool {
        matches!(self, Self::Plate(PlateError::Cancelled))
    }
}

/// Everything derived from one surface fit; reused while the proxy stays close.
#[derive(Debug, Clone)]
pub struct Patch {
    /// Proxy position the patch was fitted around.
    pub fit_center: Vec3,
    pub sphere: AlgebraicSphere,
    pub frame: PatchFrame,
    pub spec: GridSpec,
    pub rigidity: RigidityGrid,
    /// Culled points with their original positions.
    pub points: Vec<(usize, Vec3)>,
    pub planar: Vec<PlanarPoint>,
    factorization: Option<PlateFactorization>,
}

impl Patch {
    pub fn build(model: &PointCloudModel, state: &ContactState, config: &EngineConfig) -> Result<Self, StageError> {
        let material = &config.material;
        let contact = contact_point(state, config);
        let neighborhood = model.query_neighborhood(&contact, material.neighborhood_radius);
        let positions: Vec<Vec3> = neighborhood.iter().map(|(_, p)| p.position).collect();
        let sphere = fit_sphere(&positions)?;
        let proxy_on_sphere = project_to_sphere(&contact, &sphere)?;

        let projected: Vec<(usize, Vec3)> = neighborhood
            .iter()
            .filter_map(|(id, p)| project_to_sphere(&p.position, &sphere).ok().map(|q| (*id, q)))
            .collect();
        let kept = cull_hemisphere(&projected, &sphere, &proxy_on_sphere);
        let frame = build_frame(&sphere, &proxy_on_sphere);

        let mut planar = Vec::with_capacity(kept.len());
        let mut points = Vec::with_capacity(kept.len());
        let mut samples = Vec::with_capacity(kept.len());
        for (id, on_sphere) in &kept {
            let p = to_plane(on_sphere, &frame, *id)?;
            let e = model.point(*id).elastic_modulus;
            planar.push(p);
            points.push((*id, model.point(*id).position));
            samples.push((p, flexural_rigidity(e, material)));
        }
        let (mut lo, mut hi) = ([0.0f64, 0.0], [0.0f64, 0.0]);
        for p in &planar {
            lo = [lo[0].min(p.x), lo[1].min(p.z)];
            hi = [hi[0].max(p.x), hi[1].max(p.z)];
        }
        let spec = GridSpec::covering(lo, hi, config.grid_n)?;
        let rigidity = rasterize_rigidity(&samples, spec, material.poisson)?;
        Ok(Self { fit_center: state.proxy, sphere, frame, spec, rigidity, points, planar, factorization: None })
    }

    /// Solves for the given force and returns the displaced patch.
    pub fn deform(
        &mut self,
        state: &ContactState,
        force: &ForceSample,
        config: &EngineConfig,
        cancel: &CancelToken,
    ) -> Result<(Vec<(usize, Vec3)>, SolverStats), StageError> {
        let start = Instant::now();
        let contact = contact_point(state, config);
        let on_sphere = project_to_sphere(&contact, &self.sphere)?;
        let contact_planar = to_plane(&on_sphere, &self.frame, usize::MAX)?;
        let load = assemble_load(force.magnitude, &contact_planar, self.spec)?;
        let field = match config.solver.method {
            SolverMethod::Direct => {
                if self.factorization.is_none() {
                    self.factorization = Some(PlateFactorization::factor_with_cancel(&self.rigidity, cancel)?);
                }
                self.factorization.as_ref().expect("factored above").solve(&load)?
            }
            SolverMethod::Jacobi => solve_deformation_with_cancel(&self.rigidity, &load, &config.solver, cancel)?,
        };
        let w = self
            .planar
            .iter()
            .map(|p| sample_deformation(&field, p))
            .collect::<Result<Vec<f64>, _>>()?;
        let deformed = back_project(&self.points, &w, &-force.direction)?;
        let stats = SolverStats {
            iterations: field.iterations,
            residual: field.residual,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            max_deflection: field.max_abs(),
        };
        Ok((deformed, stats))
    }
}

/// Surface point under the proxy ball.
pub fn contact_point(state: &ContactState, config: &EngineConfig) -> Vec3 {
    state.proxy - state.normal * config.material.proxy_radius
}

/// Patch cache with the re-fit policy.
#[derive(Debug, Default)]
pub struct DeformationStage {
    patch: Option<Patch>,
    refits: usize,
}

impl DeformationStage {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of patch fits so far.
    pub fn refits(&self) -> usize {
        self.refits
    }

    pub fn patch(&self) -> Option<&Patch> {
        self.patch.as_ref()
    }

    /// Drops the cached patch, e.g. after contact is lost.
    pub fn reset(&mut self) {
        self.patch = None;
    }

    pub fn run(
        &mut self,
        model: &PointCloudModel,
        state: &ContactState,
        force: &ForceSample,
        config: &EngineConfig,
        cancel: &CancelToken,
    ) -> Result<(Vec<(usize, Vec3)>, SolverStats), StageError> {
        let limit = config.refit_distance();
        let stale = match &self.patch {
            Some(p) => (state.proxy - p.fit_center).norm() > limit,
            None => true,
        };
        if stale {
            self.patch = None;
            self.refits += 1;
            self.patch = Some(Patch::build(model, state, config)?);
        }
        self.patch.as_mut().expect("built above").deform(state, force, config, cancel)
    }
}
