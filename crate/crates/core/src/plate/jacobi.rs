use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use super::grid::NodeField;
use super::load::LoadField;
use super::rigidity::RigidityGrid;
use super::stencil::PlateOperator;
use super::{DeformationField, PlateError};

/// Iterations before the residual is watched for growth.
const WARMUP_ITERATIONS: usize = 10;
/// Consecutive residual increases that count as divergence.
const DIVERGENCE_RUN: usize = 25;

/// Which algorithm solves the discrete plate system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Banded LU factorization of the assembled operator.
    #[default]
    Direct,
    /// Damped point-Jacobi relaxation.
    Jacobi,
}

impl std::str::FromStr for SolverMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Self::Direct),
            "jacobi" => Ok(Self::Jacobi),
            other => Err(format!("unknown solver `{other}` (expected `direct` or `jacobi`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative Frobenius change between sweeps that stops the iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Damping factor ω in (0, 1].
    pub relaxation: f64,
    pub method: SolverMethod,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_iterations: 10_000, relaxation: 0.5, method: SolverMethod::Direct }
    }
}

impl SolverSettings {
    pub fn jacobi() -> Self {
        Self { method: SolverMethod::Jacobi, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), PlateError> {
        if !(self.tolerance > 0.0) {
            return Err(PlateError::InvalidSettings(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(PlateError::InvalidSettings(format!("relaxation {} must lie in (0, 1]", self.relaxation)));
        }
        if self.max_iterations == 0 {
            return Err(PlateError::InvalidSettings("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Shared flag a solve polls between sweeps.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Release);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Acquire)
    }
}

/// Damped Jacobi solve of the plate system, starting from `w = 0`.
pub fn solve_deformation(
    rig: &RigidityGrid,
    load: &LoadField,
    settings: &SolverSettings,
) -> Result<DeformationField, PlateError> {
    solve_deformation_with_cancel(rig, load, settings, &CancelToken::new())
}

pub fn solve_deformation_with_cancel(
    rig: &RigidityGrid,
    load: &LoadField,
    settings: &SolverSettings,
    cancel: &CancelToken,
) -> Result<DeformationField, PlateError> {
    settings.validate()?;
    if !rig.spec.same_layout(&load.spec) {
        return Err(PlateError::ShapeMismatch("rigidity and load grids differ".into()));
    }
    let op = PlateOperator::assemble(rig);
    op.check_center_positive()?;

    let spec = rig.spec;
    let n = spec.n;
    let q = &load.q;
    let q_norm = q.max_abs();
    let residual_target = 10.0 * settings.tolerance * q_norm;

    let mut w = NodeField::zeros(n);
    let mut next = NodeField::zeros(n);
    let mut omega = settings.relaxation;
    let mut halved = false;
    let mut last_residual = f64::INFINITY;
    let mut rising = 0usize;

    for iteration in 1..=settings.max_iterations {
        if cancel.is_cancelled() {
            return Err(PlateError::Cancelled);
        }
        let (change2, residual2) = op.jacobi_sweep(w.values(), q.values(), omega, next.values_mut());
        let scale = w.frobenius().max(1e-30);
        std::mem::swap(&mut w, &mut next);

        if change2.sqrt() / scale < settings.tolerance {
            let final_residual = op.residual_max(&w, q);
            if final_residual <= residual_target {
                return Ok(DeformationField { spec, w, iterations: iteration, residual: final_residual });
            }
        }

        // the max-norm residual can rise for long stretches while the
        // iteration still converges; the l2 norm cannot when ω is stable
        let residual = residual2.sqrt();
        if iteration > WARMUP_ITERATIONS && residual > last_residual {
            rising += 1;
            if rising >= DIVERGENCE_RUN {
                if halved {
                    return Err(PlateError::Diverged { iterations: iteration, residual: op.residual_max(&w, q) });
                }
                log::debug!("jacobi residual rose {DIVERGENCE_RUN} times; halving relaxation to {}", omega / 2.0);
                omega *= 0.5;
                halved = true;
                rising = 0;
            }
        } else {
            rising = 0;
        }
        last_residual = residual;
    }
    Err(PlateError::NonConvergence {
        iterations: settings.max_iterations,
        residual: op.residual_max(&w, q),
    })
}
