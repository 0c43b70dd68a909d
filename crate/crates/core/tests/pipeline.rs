use std::sync::Arc;
use std::time::{Duration, Instant};

use plate_haptics::model::{synthetic, MaterialConfig, PointCloudModel};
use plate_haptics::plate::CancelToken;
use plate_haptics::session::live::LiveSession;
use plate_haptics::session::{
    record_line, run_trajectory, DeformationStage, EngineConfig, ForceStage, Pipeline, RecordOptions, TrajectoryStep,
};
use plate_haptics::Vec3;

const CAP_RADIUS: f64 = 5.0;

fn cap(modulus: f64) -> PointCloudModel {
    PointCloudModel::new(synthetic::cap_sheet(1.5, 121, CAP_RADIUS, |_, _| modulus), 0.2).unwrap()
}

/// Approach from above, then hold at `depth` below the resting proxy height.
fn press(depth: f64, config: &EngineConfig) -> Vec<TrajectoryStep> {
    let rho = config.material.proxy_radius;
    [0.6, 0.3, rho + 0.01, rho - depth]
        .iter()
        .enumerate()
        .map(|(k, z)| TrajectoryStep { t: 0.01 * k as f64, hip: Vec3::new(0.0, 0.0, *z) })
        .collect()
}

#[test]
fn normal_push_force_grows_with_penetration() {
    let config = EngineConfig::default();
    let model = cap(60.0);
    let k = config.material.contact_stiffness(60.0);
    let mut per_depth = Vec::new();
    for depth in [0.01, 0.02, 0.04] {
        let records = run_trajectory(&model, &press(depth, &config), &config);
        let last = records.last().unwrap();
        assert!(last.in_contact, "depth {depth}");
        let force = last.force.unwrap();
        // the cap apex is a local maximum, so the proxy sits right above it
        assert!((force.direction - Vec3::z()).norm() < 1e-3);
        assert!((last.proxy.norm() - config.material.proxy_radius).abs() < 1e-3);
        assert!((force.magnitude - k * (last.hip - last.proxy).norm()).abs() <= 1e-12 * force.magnitude);
        per_depth.push(force.magnitude / depth);
        let stats = last.solver.expect("cap fits a sphere");
        assert!(stats.max_deflection > 0.0);
        assert!(last.deformed_patch.as_ref().unwrap().len() > 100);
    }
    for ratio in &per_depth {
        assert!((ratio / k - 1.0).abs() < 0.05, "F/δ = {ratio}, k = {k}");
    }
}

#[test]
fn deformed_points_move_into_the_surface() {
    let config = EngineConfig::default();
    let model = cap(60.0);
    let records = run_trajectory(&model, &press(0.03, &config), &config);
    let last = records.last().unwrap();
    let patch = last.deformed_patch.as_ref().unwrap();
    let normal = last.force.unwrap().direction;
    let mut deepest = 0.0f64;
    for (id, moved) in patch {
        let rest = model.point(*id).position;
        let shift = moved - rest;
        // displacement is along the applied force, into the cap
        assert!(shift.cross(&normal).norm() <= 1e-12 * shift.norm().max(1e-12));
        assert!(shift.dot(&normal) <= 0.0);
        deepest = deepest.max(shift.norm());
    }
    assert!(deepest > 0.0);
    // the point under the contact moves furthest
    let apex = model.nearest(&Vec3::zeros());
    let (_, apex_moved) = patch.iter().find(|(id, _)| *id == apex).unwrap();
    assert!((apex_moved - model.point(apex).position).norm() >= 0.9 * deepest);
}

#[test]
fn doubling_rigidity_halves_the_deflection() {
    let config = EngineConfig::default();
    let soft = cap(40.0);
    let stiff = cap(80.0);
    let mut forces = ForceStage::new();
    let mut last = None;
    for step in press(0.03, &config) {
        last = Some(forces.step(&soft, step.t, step.hip, &config.material));
    }
    let (state, force) = last.unwrap();
    let force = force.expect("in contact");
    let run = |model: &PointCloudModel| {
        DeformationStage::new().run(model, &state, &force, &config, &CancelToken::new()).unwrap()
    };
    let (soft_patch, soft_stats) = run(&soft);
    let (stiff_patch, stiff_stats) = run(&stiff);
    let ratio = stiff_stats.max_deflection / soft_stats.max_deflection;
    assert!((ratio - 0.5).abs() < 1e-9, "ratio {ratio}");
    for ((i, a), (j, b)) in soft_patch.iter().zip(&stiff_patch) {
        assert_eq!(i, j);
        let rest = soft.point(*i).position;
        assert!(((b - rest).norm() - 0.5 * (a - rest).norm()).abs() < 1e-9);
    }
}

#[test]
fn stiffer_region_deflects_less_under_equal_force() {
    // modulus rises along x; equal presses at two stations
    let model = PointCloudModel::new(synthetic::cap_sheet(2.0, 161, 50.0, |x, _| 30.0 + 60.0 * (x + 2.0)), 0.2).unwrap();
    let config = EngineConfig::default();
    let mut peaks = Vec::new();
    for x in [-0.5, 0.5] {
        let mut forces = ForceStage::new();
        let mut last = None;
        for (k, z) in [0.6, 0.3, 0.11, 0.06].iter().enumerate() {
            last = Some(forces.step(&model, 0.01 * k as f64, Vec3::new(x, 0.0, *z - x * x / 100.0), &config.material));
        }
        let (state, force) = last.unwrap();
        let mut force = force.expect("in contact");
        force.magnitude = 1.0;
        let (_, stats) = DeformationStage::new().run(&model, &state, &force, &config, &CancelToken::new()).unwrap();
        peaks.push(stats.max_deflection);
    }
    assert!(peaks[1] < peaks[0], "{peaks:?}");
}

#[test]
fn patch_is_reused_until_the_proxy_travels() {
    let config = EngineConfig::default();
    let model = cap(60.0);
    let mut pipeline = Pipeline::new(&model, config);
    for step in press(0.03, &config) {
        pipeline.step(step.t, step.hip);
    }
    assert_eq!(pipeline.deformation().refits(), 1);
    let rho = config.material.proxy_radius;
    // small slides stay on the cached patch
    pipeline.step(0.1, Vec3::new(0.01, 0.0, rho - 0.03));
    pipeline.step(0.11, Vec3::new(0.02, 0.0, rho - 0.03));
    assert_eq!(pipeline.deformation().refits(), 1);
    let r = pipeline.step(0.12, Vec3::new(0.2, 0.0, rho - 0.03));
    assert!(r.in_contact);
    assert_eq!(pipeline.deformation().refits(), 2);
    // leaving contact drops the patch
    let r = pipeline.step(0.13, Vec3::new(0.2, 0.0, 1.0));
    assert!(!r.in_contact && r.solver.is_none());
    assert!(pipeline.deformation().patch().is_none());
}

#[test]
fn records_are_deterministic_without_timing() {
    let config = EngineConfig::default();
    let model = cap(60.0);
    let script = press(0.02, &config);
    let options = RecordOptions { omit_timing: true, include_patch: true };
    let a: Vec<String> = run_trajectory(&model, &script, &config).iter().map(|r| record_line(r, options)).collect();
    let b: Vec<String> = run_trajectory(&model, &script, &config).iter().map(|r| record_line(r, options)).collect();
    assert_eq!(a, b);
    assert!(a[3].contains("\"solver_ms\":null"));
    assert!(a[3].contains("\"deformed_patch\":[["));
}

#[test]
fn live_session_answers_without_waiting_and_catches_up() {
    let config = EngineConfig::default();
    let model = Arc::new(cap(60.0));
    let mut session = LiveSession::new(Arc::clone(&model), config);
    let rho = config.material.proxy_radius;

    let free = session.handle_hip(0.0, Vec3::new(0.0, 0.0, 0.6));
    assert!(!free.in_contact && !free.stale && free.patch.is_none());
    assert_eq!(free.force_magnitude, 0.0);
    session.handle_hip(0.01, Vec3::new(0.0, 0.0, 0.3));
    session.handle_hip(0.02, Vec3::new(0.0, 0.0, rho + 0.01));

    let hip = Vec3::new(0.0, 0.0, rho - 0.03);
    let first = session.handle_hip(0.03, hip);
    assert!(first.in_contact && first.stale);
    let expected = config.material.contact_stiffness(60.0) * (hip - first.proxy).norm();
    assert!((first.force_magnitude - expected).abs() <= 1e-12 * expected);

    // holding still lets the solver finish; the patch is attached once
    let deadline = Instant::now() + Duration::from_secs(30);
    let mut t = 0.04;
    let patch = loop {
        let reply = session.handle_hip(t, hip);
        t += 0.01;
        if let Some(p) = reply.patch {
            break (p, reply.stale);
        }
        assert!(Instant::now() < deadline, "no deformation arrived");
        std::thread::sleep(Duration::from_millis(5));
    };
    assert!(!patch.0.is_empty());
    assert!(!patch.1, "held contact should be fresh once solved");
    let again = session.handle_hip(t, hip);
    assert!(again.patch.is_none() && !again.stale);
    assert_eq!(session.worker().latest().unwrap().seq, session.contact_seq());

    let released = session.handle_hip(t + 0.01, Vec3::new(0.0, 0.0, 1.0));
    assert!(!released.in_contact && !released.stale);
    assert!(session.worker().last_error().is_none());
}

#[test]
fn live_session_reports_when_the_solver_cannot_run() {
    // a flat sheet has no finite sphere; force still renders
    let model = Arc::new(PointCloudModel::new(synthetic::flat_sheet(1.0, 51, 10.0), 0.2).unwrap());
    let config = EngineConfig { material: MaterialConfig::default(), ..EngineConfig::default() };
    let mut session = LiveSession::new(model, config);
    session.handle_hip(0.0, Vec3::new(0.0, 0.0, 0.5));
    let hip = Vec3::new(0.0, 0.0, 0.05);
    let reply = session.handle_hip(0.1, hip);
    assert!(reply.in_contact && reply.force_magnitude > 0.0);
    let deadline = Instant::now() + Duration::from_secs(10);
    while session.worker().last_error().is_none() {
        assert!(Instant::now() < deadline);
        std::thread::sleep(Duration::from_millis(5));
    }
    assert!(session.worker().last_error().unwrap().starts_with("sphere fit"));
    let reply = session.handle_hip(0.2, hip);
    assert!(reply.stale && reply.patch.is_none());
}
