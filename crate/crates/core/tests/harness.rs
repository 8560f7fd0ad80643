use std::fs;

use etc_deadline::harness::{
    cmd_evaluate, cmd_train, compare_policies, evaluate_policy, initial_states, io, DeadlinePolicy, PolicyLabel,
    PolicySource, RunConfig, LEARNING_CURVE_FILE, POLICY_FILE, QTABLE_FILE,
};
use etc_deadline::learning::{DeadlineGrid, Environment};
use etc_deadline::synthetic::QuietPlant;

fn small_config(generations: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.train.generations = generations;
    cfg.train.episodes_per_generation = 4;
    cfg.train.events_per_episode = 4;
    cfg.train.rng_seed = 21;
    cfg.grids.radius_buckets = 12;
    cfg.grids.deadline_actions = 30;
    cfg.eval.n_trajectories = 2;
    cfg.eval.events_per_trajectory = 2;
    cfg
}

#[test]
fn interrupted_training_resumes_to_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (resumed, fresh) = (dir.path().join("resumed"), dir.path().join("fresh"));
    cmd_train(&small_config(1), &resumed, false, |_| {}).unwrap();
    let outcome = cmd_train(&small_config(3), &resumed, false, |_| {}).unwrap();
    assert_eq!(outcome.resumed_from, 1);
    assert_eq!(outcome.stats.len(), 3);
    cmd_train(&small_config(3), &fresh, false, |_| {}).unwrap();
    for f in [QTABLE_FILE, LEARNING_CURVE_FILE, POLICY_FILE] {
        assert_eq!(fs::read(resumed.join(f)).unwrap(), fs::read(fresh.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn qtable_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    cmd_train(&small_config(1), dir.path(), false, |_| {}).unwrap();
    let first = fs::read(dir.path().join(QTABLE_FILE)).unwrap();
    let table = io::load_qtable(&dir.path().join(QTABLE_FILE)).unwrap();
    let again = dir.path().join("again.bin");
    io::save_qtable(&again, &table).unwrap();
    assert_eq!(first, fs::read(again).unwrap());
}

#[test]
fn greedy_on_quiet_plant_gives_geometric_diet() {
    let plant = QuietPlant::default();
    let states = vec![plant.sample_initial_state(&mut rand::rng()); 3];
    let report =
        evaluate_policy(&plant, &DeadlinePolicy::Constant(7200.0), PolicyLabel::Greedy, &states, 8, 0.8, 1).unwrap();
    let expected = 2.0 * (1.0 - 0.8f64.powi(8)) / 0.2;
    for t in &report.trajectories {
        assert!((t.diet - expected).abs() < 1e-9);
        assert!((t.aiet - 2.0).abs() < 1e-9 && (t.miet - 2.0).abs() < 1e-9);
    }
}

#[test]
fn report_aggregates_are_means_of_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(1);
    let report = cmd_evaluate(&cfg, dir.path(), &PolicySource::Random).unwrap();
    let n = report.trajectories.len() as f64;
    assert_eq!(n, 2.0);
    let mean = report.trajectories.iter().map(|t| t.diet).sum::<f64>() / n;
    assert!((report.mean_diet - mean).abs() <= 1e-12 * mean);
    let min = report.trajectories.iter().map(|t| t.min_barrier).fold(f64::INFINITY, f64::min);
    assert_eq!(report.min_barrier, min);
    assert!(report.min_barrier >= -1e-6);
}

#[test]
fn self_comparison_has_unit_ratio() {
    let cfg = small_config(1);
    let plant = cfg.build_plant().unwrap();
    let overall = initial_states(&plant, 2, 5, None);
    let boundary = initial_states(&plant, 2, 5, Some(2.3));
    let policy = DeadlinePolicy::Constant(cfg.deadline_grid().unwrap().delta_max());
    let cmp = compare_policies(
        &plant,
        &policy,
        &policy,
        (PolicyLabel::Greedy, PolicyLabel::Custom),
        &overall,
        &boundary,
        2,
        0.9,
        5,
    )
    .unwrap();
    assert_eq!(cmp.overall_ratio(), 1.0);
    assert_eq!(cmp.near_boundary_ratio(), 1.0);
    for x in &boundary {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        assert!((r / cfg.body.mean_radius - 2.3).abs() < 1e-12);
    }
}

#[test]
fn random_policy_only_uses_grid_deadlines() {
    let plant = QuietPlant::default();
    let grid = DeadlineGrid::new(5, 100.0, 900.0).unwrap();
    let states = vec![vec![0.0]];
    let report =
        evaluate_policy(&plant, &DeadlinePolicy::Random(grid.clone()), PolicyLabel::Custom, &states, 40, 0.9, 3)
            .unwrap();
    let t = &report.trajectories[0];
    assert!(t.miet * 3600.0 >= 100.0 - 1e-9);
    assert!(t.aiet * 3600.0 <= 900.0 + 1e-9);
}
