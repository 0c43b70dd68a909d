//! Interactive session: the force path answers at once, the plate solve
//! runs on a worker thread and publishes immutable snapshots.
//!
//! A new contact replaces any queued job. The job in flight is cancelled
//! only when its result can no longer be used: contact was lost, or the
//! proxy has moved past the re-fit distance. Otherwise a fast stream of
//! HIP updates would cancel every solve and no deformation would ever
//! arrive.

use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;

use crate::force::ForceSample;
use crate::model::PointCloudModel;
use crate::plate::CancelToken;
use crate::proxy::ContactState;
use crate::Vec3;

use super::wire::StateUpdate;
use super::{DeformationStage, EngineConfig, ForceStage, SolverStats};

/// Completed deformation for one contact sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub seq: u64,
    pub t: f64,
    pub deformed_patch: Vec<(usize, Vec3)>,
    pub stats: SolverStats,
}

#[derive(Debug, Clone)]
struct Job {
    seq: u64,
    state: ContactState,
    force: ForceSample,
}

#[derive(Debug, Default)]
struct Slots {
    pending: Option<Job>,
    /// Proxy and token of the job being solved.
    running: Option<(Vec3, CancelToken)>,
    shutdown: bool,
}

#[derive(Debug, Default)]
struct Shared {
    slots: Mutex<Slots>,
    wake: Condvar,
    latest: Mutex<Option<Arc<Snapshot>>>,
    last_error: Mutex<Option<String>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // a panicking worker must not take the session down with it
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Owns the solver thread.
#[derive(Debug)]
pub struct SolverWorker {
    shared: Arc<Shared>,
    refit_distance: f64,
    handle: Option<JoinHandle<()>>,
}

impl SolverWorker {
    pub fn spawn(model: Arc<PointCloudModel>, config: EngineConfig) -> Self {
        let shared = Arc::new(Shared::default());
        let worker_shared = Arc::clone(&shared);
        let handle = std::thread::Builder::new()
            .name("plate-solver".into())
            .spawn(move || worker_loop(&model, &config, &worker_shared))
            .expect("spawn solver thread");
        Self { shared, refit_distance: config.refit_distance(), handle: Some(handle) }
    }

    fn submit(&self, job: Job) {
        let mut slots = lock(&self.shared.slots);
        if let Some((proxy, token)) = &slots.running {
            if (job.state.proxy - proxy).norm() > self.refit_distance {
                token.cancel();
            }
        }
        slots.pending = Some(job);
        self.shared.wake.notify_one();
    }

    /// Drops queued work and stops the running solve.
    pub fn cancel_all(&self) {
        let mut slots = lock(&self.shared.slots);
        slots.pending = None;
        if let Some((_, token)) = &slots.running {
            token.cancel();
        }
    }

    pub fn latest(&self) -> Option<Arc<Snapshot>> {
        lock(&self.shared.latest).clone()
    }

    pub fn last_error(&self) -> Option<String> {
        lock(&self.shared.last_error).clone()
    }

    /// True while a job is queued or running.
    pub fn busy(&self) -> bool {
        let slots = lock(&self.shared.slots);
        slots.pending.is_some() || slots.running.is_some()
    }
}

impl Drop for SolverWorker {
    fn drop(&mut self) {
        {
            let mut slots = lock(&self.shared.slots);
            slots.shutdown = true;
            slots.pending = None;
            if let Some((_, token)) = &slots.running {
                token.cancel();
            }
        }
        self.shared.wake.notify_all();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn worker_loop(model: &PointCloudModel, config: &EngineConfig, shared: &Shared) {
    let mut stage = DeformationStage::new();
    loop {
        let (job, token) = {
            let mut slots = lock(&shared.slots);
            loop {
                if slots.shutdown {
                    return;
                }
                if let Some(job) = slots.pending.take() {
                    let token = CancelToken::new();
                    slots.running = Some((job.state.proxy, token.clone()));
                    break (job, token);
                }
                slots = shared.wake.wait(slots).unwrap_or_else(|e| e.into_inner());
            }
        };
        match stage.run(model, &job.state, &job.force, config, &token) {
            Ok((deformed_patch, stats)) => {
                let snap = Snapshot { seq: job.seq, t: job.force.timestamp, deformed_patch, stats };
                *lock(&shared.latest) = Some(Arc::new(snap));
                *lock(&shared.last_error) = None;
            }
            Err(e) if e.is_cancelled() => {}
            Err(e) => {
                log::debug!("solver job {} failed: {e}", job.seq);
                *lock(&shared.last_error) = Some(e.to_string());
            }
        }
        lock(&shared.slots).running = None;
    }
}

/// One client's session state.
#[derive(Debug)]
pub struct LiveSession {
    model: Arc<PointCloudModel>,
    config: EngineConfig,
    force: ForceStage,
    worker: SolverWorker,
    seq: u64,
    /// HIP and proxy of job `seq`.
    submitted: Option<(Vec3, Vec3)>,
    /// Snapshot sequence last attached to a reply.
    sent: Option<u64>,
}

impl LiveSession {
    pub fn new(model: Arc<PointCloudModel>, config: EngineConfig) -> Self {
        let worker = SolverWorker::spawn(Arc::clone(&model), config);
        Self { model, config, force: ForceStage::new(), worker, seq: 0, submitted: None, sent: None }
    }

    pub fn worker(&self) -> &SolverWorker {
        &self.worker
    }

    /// Latest contact sequence number handed to the worker.
    pub fn contact_seq(&self) -> u64 {
        self.seq
    }

    /// Handles one HIP sample; never waits for the solver.
    pub fn handle_hip(&mut self, t: f64, hip: Vec3) -> StateUpdate {
        let (state, force) = self.force.step(&self.model, t, hip, &self.config.material);
        let mut update = StateUpdate {
            t,
            proxy: state.proxy,
            in_contact: state.in_contact,
            force_magnitude: 0.0,
            force_direction: Vec3::zeros(),
            stale: false,
            patch: None,
        };
        let Some(force) = force else {
            self.worker.cancel_all();
            self.submitted = None;
            return update;
        };
        // a resting HIP repeats the same contact; let that job finish so the
        // deformation catches up instead of restarting it
        // (re-projection can wobble the proxy by a few ulps)
        let same = self.submitted.is_some_and(|(hip, proxy)| {
            hip == state.hip && (proxy - state.proxy).norm() <= 1e-9 * self.config.material.proxy_radius
        });
        if !same {
            self.seq += 1;
            self.submitted = Some((state.hip, state.proxy));
            self.worker.submit(Job { seq: self.seq, state, force });
        }
        update.force_magnitude = force.magnitude;
        update.force_direction = force.direction;

        let latest = self.worker.latest();
        update.stale = !latest.as_ref().is_some_and(|s| s.seq == self.seq);
        if let Some(snap) = latest {
            if self.sent != Some(snap.seq) {
                self.sent = Some(snap.seq);
                update.patch = Some(snap.deformed_patch.clone());
            }
        }
        update
    }
}
