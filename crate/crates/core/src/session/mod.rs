//! Per-step orchestration: proxy, force, patch, plate, back-projection.
//!
//! [`Pipeline`] runs everything synchronously and is what the scripted
//! replay uses. [`live`] splits the same stages across threads for the
//! interactive server.

pub mod live;
pub mod server;
mod stage;
pub mod wire;

pub use stage::{contact_point, DeformationStage, Patch, StageError};

use std::io::BufRead;

use crate::force::{compute_force, lookup_local_modulus, ForceSample};
use crate::model::{MaterialConfig, ModelError, PointCloudModel};
use crate::plate::{CancelToken, SolverSettings, MIN_NODES};
use crate::proxy::{update_proxy, ContactState};
use crate::Vec3;

/// Everything a session needs besides the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub material: MaterialConfig,
    /// Plate grid nodes per side.
    pub grid_n: usize,
    pub solver: SolverSettings,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { material: MaterialConfig::default(), grid_n: 64, solver: SolverSettings::default() }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.material.validate().map_err(|e| e.to_string())?;
        self.solver.validate().map_err(|e| e.to_string())?;
        if self.grid_n < MIN_NODES {
            return Err(format!("grid size {} is below the minimum of {MIN_NODES}", self.grid_n));
        }
        Ok(())
    }

    /// Proxy travel that invalidates the cached patch.
    pub fn refit_distance(&self) -> f64 {
        0.5 * self.material.proxy_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    pub t: f64,
    pub hip: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub residual: f64,
    pub wall_time_ms: f64,
    /// Largest |w| on the grid.
    pub max_deflection: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub hip: Vec3,
    pub proxy: Vec3,
    pub in_contact: bool,
    pub force: Option<ForceSample>,
    pub solver: Option<SolverStats>,
    pub deformed_patch: Option<Vec<(usize, Vec3)>>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("step {step} (line {line}): {message}")]
    Parse { step: usize, line: usize, message: String },
}

/// Reads `t,x,y,z` rows; `#` starts a comment. Times must strictly increase.
pub fn parse_script<R: BufRead>(input: R) -> Result<Vec<TrajectoryStep>, ScriptError> {
    let mut steps: Vec<TrajectoryStep> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let step = steps.len();
        let err = |message: String| ScriptError::Parse { step, line: idx + 1, message };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let mut v = [0.0f64; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| err(format!("bad number `{f}`")))?;
            if !slot.is_finite() {
                return Err(err(format!("non-finite value `{f}`")));
            }
        }
        if let Some(prev) = steps.last() {
            if !(v[0] > prev.t) {
                return Err(err(format!("time {} does not exceed previous {}", v[0], prev.t)));
            }
        }
        steps.push(TrajectoryStep { t: v[0], hip: Vec3::new(v[1], v[2], v[3]) });
    }
    Ok(steps)
}

/// Proxy update plus force; the part of a step that never waits on the solver.
#[derive(Debug, Clone)]
pub struct ForceStage {
    state: Option<ContactState>,
}

impl Default for ForceStage {
    fn default() -> Self {
        Self::new()
    }
}

impl ForceStage {
    pub fn new() -> Self {
        Self { state: None }
    }

    pub fn state(&self) -> Option<&ContactState> {
        self.state.as_ref()
    }

    pub fn step(
        &mut self,
        model: &PointCloudModel,
        t: f64,
        hip: Vec3,
        material: &MaterialConfig,
    ) -> (ContactState, Option<ForceSample>) {
        let previous = self.state.unwrap_or(ContactState::free(hip));
        let state = update_proxy(model, &previous, hip, material);
        self.state = Some(state);
        let force = state.in_contact.then(|| {
            let contact = state.proxy - state.normal * material.proxy_radius;
            let e = lookup_local_modulus(model, &contact);
            compute_force(&state, e, material, t).expect("in contact with a validated model")
        });
        (state, force)
    }
}

/// Synchronous pipeline over one model.
#[derive(Debug)]
pub struct Pipeline<'m> {
    model: &'m PointCloudModel,
    config: EngineConfig,
    force: ForceStage,
    deformation: DeformationStage,
}

impl<'m> Pipeline<'m> {
    pub fn new(model: &'m PointCloudModel, config: EngineConfig) -> Self {
        Self { model, config, force: ForceStage::new(), deformation: DeformationStage::new() }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn state(&self) -> Option<&ContactState> {
        self.force.state()
    }

    pub fn deformation(&self) -> &DeformationStage {
        &self.deformation
    }

    /// Runs one HIP sample through every stage.
    pub fn step(&mut self, t: f64, hip: Vec3) -> StepRecord {
        let (state, force) = self.force.step(self.model, t, hip, &self.config.material);
        let mut record = StepRecord {
            t,
            hip,
            proxy: state.proxy,
            in_contact: state.in_contact,
            force,
            solver: None,
            deformed_patch: None,
            diagnostic: None,
        };
        let Some(force) = force else {
            self.deformation.reset();
            return record;
        };
        match self.deformation.run(self.model, &state, &force, &self.config, &CancelToken::new()) {
            Ok((patch, stats)) => {
                record.solver = Some(stats);
                record.deformed_patch = Some(patch);
            }
            Err(e) => {
                log::debug!("t={t}: {e}");
                record.diagnostic = Some(e.to_string());
            }
        }
        record
    }
}

/// Replays a script from a free start.
pub fn run_trajectory(model: &PointCloudModel, script: &[TrajectoryStep], config: &EngineConfig) -> Vec<StepRecord> {
    let mut pipeline = Pipeline::new(model, *config);
    script.iter().map(|s| pipeline.step(s.t, s.hip)).collect()
}

/// What goes into a record line besides the fixed fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecordOptions {
    /// Write `solver_ms` as null so output is reproducible.
    pub omit_timing: bool,
    /// Append the full deformed patch.
    pub include_patch: bool,
}

#[derive(serde::Serialize)]
struct RecordLine<'a> {
    t: f64,
    hip: [f64; 3],
    proxy: [f64; 3],
    in_contact: bool,
    force_magnitude: Option<f64>,
    force_direction: Option<[f64; 3]>,
    solver_iterations: Option<usize>,
    solver_residual: Option<f64>,
    solver_ms: Option<f64>,
    max_deflection: Option<f64>,
    patch_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostic: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deformed_patch: Option<Vec<(usize, [f64; 3])>>,
}

/// One JSON object per record, without a trailing newline.
pub fn record_line(record: &StepRecord, options: RecordOptions) -> String {
    let line = RecordLine {
        t: record.t,
        hip: record.hip.into(),
        proxy: record.proxy.into(),
        in_contact: record.in_contact,
        force_magnitude: record.force.map(|f| f.magnitude),
        force_direction: record.force.map(|f| f.direction.into()),
        solver_iterations: record.solver.map(|s| s.iterations),
        solver_residual: record.solver.map(|s| s.residual),
        solver_ms: record.solver.filter(|_| !options.omit_timing).map(|s| s.wall_time_ms),
        max_deflection: record.solver.map(|s| s.max_deflection),
        patch_points: record.deformed_patch.as_ref().map(Vec::len),
        diagnostic: record.diagnostic.as_deref(),
        deformed_patch: record
            .deformed_patch
            .as_ref()
            .filter(|_| options.include_patch)
            .map(|p| p.iter().map(|(id, q)| (*id, [q.x, q.y, q.z])).collect()),
    };
    serde_json::to_string(&line).expect("records serialize")
}

/// Loads a model file, inferring the format from its extension.
pub fn load_model_file(path: &std::path::Path, proxy_radius: f64) -> Result<PointCloudModel, ModelError> {
    let format = crate::model::ModelFormat::from_path(path).ok_or_else(|| {
        ModelError::InvalidConfig(format!("cannot infer model format from `{}` (use .csv or .ply)", path.display()))
    })?;
    let file = std::fs::File::open(path)?;
    crate::model::load_model(std::io::BufReader::new(file), format, proxy_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::synthetic;

    #[test]
    fn script_parsing() {
        let steps = parse_script("# t,x,y,z\n0,0,0,1\n0.5, 1, 2, 3 # note\n\n".as_bytes()).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[1].hip, Vec3::new(1.0, 2.0, 3.0));
        assert!(parse_script("".as_bytes()).unwrap().is_empty());
        match parse_script("0,0,0,0\n0,1,1,1\n".as_bytes()) {
            Err(ScriptError::Parse { step: 1, line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_script("0,0,x,0\n".as_bytes()), Err(ScriptError::Parse { step: 0, .. })));
    }

    #[test]
    fn free_space_step() {
        let model = PointCloudModel::new(synthetic::flat_sheet(1.0, 21, 10.0), 0.2).unwrap();
        let records = run_trajectory(&model, &[TrajectoryStep { t: 0.0, hip: Vec3::new(0.0, 0.0, 3.0) }], &EngineConfig::default());
        assert_eq!(records.len(), 1);
        assert!(!records[0].in_contact);
        assert!(records[0].force.is_none() && records[0].solver.is_none());
        assert!(run_trajectory(&model, &[], &EngineConfig::default()).is_empty());
    }

    #[test]
    fn flat_sheet_renders_force_but_reports_degenerate_fit() {
        let model = PointCloudModel::new(synthetic::flat_sheet(1.0, 51, 10.0), 0.2).unwrap();
        let script = [
            TrajectoryStep { t: 0.0, hip: Vec3::new(0.0, 0.0, 0.5) },
            TrajectoryStep { t: 0.1, hip: Vec3::new(0.0, 0.0, 0.05) },
        ];
        let records = run_trajectory(&model, &script, &EngineConfig::default());
        let r = &records[1];
        assert!(r.in_contact && r.force.is_some() && r.solver.is_none());
        assert!(r.diagnostic.as_deref().unwrap().starts_with("sphere fit"));
        let line = record_line(r, RecordOptions::default());
        assert!(line.starts_with("{\"t\":0.1,\"hip\":[0.0,0.0,0.05],\"proxy\":"));
        assert!(line.contains("\"solver_iterations\":null"));
    }
}
