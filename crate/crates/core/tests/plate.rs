use plate_haptics::plate::{
    assemble_load, oracle_direct_solve, solve_deformation, solve_deformation_with_cancel, solve_direct, solve_plate,
    CancelToken, GridSpec, LoadField, NodeField, PlateError, PlateFactorization, RigidityGrid, SolverSettings,
};
use plate_haptics::projection::PlanarPoint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, 1.0 / (n - 2) as f64, [0.0, 0.0]).unwrap()
}

fn wavy_rigidity(spec: GridSpec, seed: u64) -> RigidityGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b, c) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(0.5..2.0));
    let side = (spec.n - 1) as f64;
    let d = NodeField::from_fn(spec.n, |i, j| {
        let (x, z) = (i as f64 / side, j as f64 / side);
        c * (a * (3.0 * x).sin() + b * (2.0 * z + 1.0).cos()).exp()
    });
    RigidityGrid::from_nodes(spec, 0.25, d).unwrap()
}

fn max_diff(a: &NodeField, b: &NodeField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn point_load(spec: GridSpec, x: f64, z: f64, f: f64) -> LoadField {
    assemble_load(f, &PlanarPoint::new(x, z, 0), spec).unwrap()
}

#[test]
fn banded_matches_dense_oracle() {
    for (n, seed) in [(12, 1), (17, 2), (22, 3)] {
        let spec = grid(n);
        let rig = wavy_rigidity(spec, seed);
        let load = point_load(spec, 0.43, 0.61, 1.3);
        let oracle = oracle_direct_solve(&rig, &load).unwrap();
        let (banded, ms) = solve_direct(&rig, &load).unwrap();
        assert!(ms >= 0.0);
        assert!(max_diff(&banded.w, &oracle.w) <= 1e-10 * oracle.w.max_abs(), "n={n}");
        assert!(banded.residual <= 1e-8 * load.q.max_abs());
    }
}

#[test]
fn jacobi_matches_direct_on_small_grid() {
    let spec = grid(12);
    let rig = wavy_rigidity(spec, 7);
    let load = point_load(spec, 0.5, 0.45, 1.0);
    let settings = SolverSettings { tolerance: 1e-12, max_iterations: 1_000_000, ..SolverSettings::jacobi() };
    let jacobi = solve_deformation(&rig, &load, &settings).unwrap();
    let direct = solve_plate(&rig, &load, &SolverSettings::default(), &CancelToken::new()).unwrap();
    assert!(max_diff(&jacobi.w, &direct.w) <= 1e-7 * direct.w.max_abs());
    assert!(jacobi.iterations > 1);
}

#[test]
fn unstable_relaxation_is_halved_and_still_converges() {
    let spec = grid(12);
    let rig = RigidityGrid::constant(spec, 0.2, 1.0).unwrap();
    let load = LoadField::uniform(spec, 1.0);
    let settings = SolverSettings { tolerance: 1e-11, max_iterations: 1_000_000, relaxation: 0.8, ..SolverSettings::jacobi() };
    let jacobi = solve_deformation(&rig, &load, &settings).unwrap();
    let (direct, _) = solve_direct(&rig, &load).unwrap();
    assert!(max_diff(&jacobi.w, &direct.w) <= 1e-6 * direct.w.max_abs());
}

#[test]
fn jacobi_reports_non_convergence() {
    let spec = grid(20);
    let rig = RigidityGrid::constant(spec, 0.2, 1.0).unwrap();
    let settings = SolverSettings { max_iterations: 50, ..SolverSettings::jacobi() };
    match solve_deformation(&rig, &LoadField::uniform(spec, 1.0), &settings) {
        Err(PlateError::NonConvergence { iterations: 50, residual }) => assert!(residual > 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn cancelled_solves_stop() {
    let spec = grid(20);
    let rig = RigidityGrid::constant(spec, 0.2, 1.0).unwrap();
    let load = LoadField::uniform(spec, 1.0);
    let token = CancelToken::new();
    token.cancel();
    let settings = SolverSettings::jacobi();
    assert_eq!(solve_deformation_with_cancel(&rig, &load, &settings, &token).unwrap_err(), PlateError::Cancelled);
    assert_eq!(solve_plate(&rig, &load, &SolverSettings::default(), &token).unwrap_err(), PlateError::Cancelled);
}

#[test]
fn settings_and_shapes_are_validated() {
    let spec = grid(12);
    let rig = RigidityGrid::constant(spec, 0.2, 1.0).unwrap();
    let load = LoadField::uniform(spec, 1.0);
    for bad in [
        SolverSettings { tolerance: 0.0, ..SolverSettings::jacobi() },
        SolverSettings { relaxation: 1.5, ..SolverSettings::jacobi() },
        SolverSettings { relaxation: 0.0, ..SolverSettings::jacobi() },
        SolverSettings { max_iterations: 0, ..SolverSettings::jacobi() },
    ] {
        assert!(matches!(solve_deformation(&rig, &load, &bad), Err(PlateError::InvalidSettings(_))), "{bad:?}");
    }
    let other = LoadField::uniform(grid(13), 1.0);
    assert!(matches!(solve_deformation(&rig, &other, &SolverSettings::jacobi()), Err(PlateError::ShapeMismatch(_))));
    let factor = PlateFactorization::factor(&rig).unwrap();
    assert!(matches!(factor.solve(&other), Err(PlateError::ShapeMismatch(_))));
    assert!(matches!(RigidityGrid::constant(spec, 0.2, -1.0), Err(PlateError::NonPositiveRigidity(_))));
    assert!(matches!(RigidityGrid::constant(spec, 0.5, 1.0), Err(PlateError::InvalidPoisson(_))));
}

#[test]
fn constant_rigidity_gives_symmetric_deflection() {
    let n = 21;
    let spec = grid(n);
    let rig = RigidityGrid::constant(spec, 0.2, 2.0).unwrap();
    let (field, _) = solve_direct(&rig, &LoadField::uniform(spec, 1.0)).unwrap();
    let w = &field.w;
    for i in 0..n {
        for j in 0..n {
            let v = w.get(i, j);
            for u in [w.get(n - 1 - i, j), w.get(i, n - 1 - j), w.get(j, i)] {
                assert!((v - u).abs() <= 1e-12 * w.max_abs());
            }
        }
    }
    // clamped rings stay at rest, the interior sags with the load
    assert_eq!(w.get(0, 7), 0.0);
    assert_eq!(w.get(1, 7), 0.0);
    assert!(field.center_value() > 0.0);
    assert_eq!(field.center_value(), w.max_abs());
}

#[test]
fn factorization_is_reusable_across_loads() {
    let spec = grid(16);
    let rig = wavy_rigidity(spec, 11);
    let factor = PlateFactorization::factor(&rig).unwrap();
    for (x, z) in [(0.3, 0.3), (0.5, 0.7), (0.71, 0.44)] {
        let load = point_load(spec, x, z, 1.0);
        let reused = factor.solve(&load).unwrap();
        let (fresh, _) = solve_direct(&rig, &load).unwrap();
        assert_eq!(reused.w, fresh.w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deflection_is_linear_in_load(scale in 0.01f64..100.0, x in 0.2f64..0.8, z in 0.2f64..0.8, seed in 0u64..1000) {
        let spec = grid(14);
        let rig = wavy_rigidity(spec, seed);
        let factor = PlateFactorization::factor(&rig).unwrap();
        let base = factor.solve(&point_load(spec, x, z, 1.0)).unwrap();
        let scaled = factor.solve(&point_load(spec, x, z, scale)).unwrap();
        prop_assert!(max_diff(&scaled.w, &base.w.scaled(scale)) <= 1e-10 * scale * base.w.max_abs());
    }

    #[test]
    fn scaling_rigidity_scales_deflection_inversely(k in 0.1f64..10.0, seed in 0u64..1000) {
        let spec = grid(14);
        let rig = wavy_rigidity(spec, seed);
        let load = point_load(spec, 0.5, 0.5, 1.0);
        let (soft, _) = solve_direct(&rig, &load).unwrap();
        let (stiff, _) = solve_direct(&rig.scaled(k).unwrap(), &load).unwrap();
        prop_assert!(max_diff(&stiff.w, &soft.w.scaled(1.0 / k)) <= 1e-10 * soft.w.max_abs() / k);
    }

    #[test]
    fn load_spreading_conserves_force(f in 0.0f64..10.0, x in 0.15f64..0.85, z in 0.15f64..0.85) {
        let spec = grid(16);
        let load = point_load(spec, x, z, f);
        prop_assert!((load.total_force() - f).abs() <= 1e-12 * f.max(1.0));
        prop_assert!(load.q.values().iter().all(|v| *v >= 0.0));
    }
}
