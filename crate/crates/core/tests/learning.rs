mod common;

use common::{argmax_last, bucket_of, explicit_replay, random_event, tables_bitwise_equal, value_iteration};
use etc_deadline::engine::{aiet, diet, run_episode, tau_sequence, DEFAULT_EVENT_TOLERANCE};
use etc_deadline::learning::{
    greedy_policy, harvest_event, train, AlphaSchedule, DeadlineGrid, Environment, QTable, RadiusGrid, TrainConfig,
    Trainer,
};
use etc_deadline::synthetic::{QuietPlant, ThreeBucketMdp};

fn mdp_config(generations: usize) -> TrainConfig {
    TrainConfig {
        gamma: 0.9,
        generations,
        episodes_per_generation: 50,
        events_per_episode: 20,
        alpha_schedule: AlphaSchedule::VisitDecay,
        epsilon_initial: 0.5,
        epsilon_decay: 1.0,
        rng_seed: 42,
    }
}

#[test]
fn oracle_optimal_policy_differs_per_state() {
    let deadlines = ThreeBucketMdp::deadlines();
    let q = value_iteration(ThreeBucketMdp::standard().intervals(), deadlines.entries(), 0.9);
    let policy: Vec<usize> = q.iter().map(|row| argmax_last(row)).collect();
    assert_eq!(policy, vec![1, 0, 2]);
    // Frozen from the hand-derived Bellman fixed point.
    let expected = [[26.2, 28.732, 28.498], [28.0, 27.591, 27.803], [26.859, 26.932, 30.0]];
    for b in 0..3 {
        for a in 0..3 {
            assert!((q[b][a] - expected[b][a]).abs() < 1e-3, "Q[{b}][{a}] = {}", q[b][a]);
        }
    }
}

#[test]
fn mdp_training_approaches_value_iteration() {
    let mdp = ThreeBucketMdp::standard();
    let deadlines = ThreeBucketMdp::deadlines();
    let (table, stats) = train(&mdp, mdp_config(400), ThreeBucketMdp::states(), deadlines.clone()).unwrap();
    assert_eq!(stats.len(), 400);
    let oracle = value_iteration(mdp.intervals(), deadlines.entries(), 0.9);
    let err = (0..3).flat_map(|b| (0..3).map(move |a| (b, a))).map(|(b, a)| (table.value(b, a) - oracle[b][a]).abs());
    assert!(err.fold(0.0, f64::max) < 1e-2);
    let hours = 3600.0;
    assert_eq!(greedy_policy(&table, &deadlines), vec![hours * 3f64.sqrt(), hours, 3.0 * hours]);
}

#[test]
fn zero_generations_leave_the_table_untouched() {
    let mdp = ThreeBucketMdp::standard();
    let (table, stats) = train(&mdp, mdp_config(0), ThreeBucketMdp::states(), ThreeBucketMdp::deadlines()).unwrap();
    assert!(stats.is_empty());
    assert_eq!(table, QTable::new(3, 3));
}

#[test]
fn generation_stats_are_consistent_with_quiet_plant() {
    // Ξ ≡ −1: every interval lasts its deadline, so greedy (ε = 0, zero table)
    // picks δ_max and DIET is the geometric sum.
    let plant = QuietPlant::default();
    let deadlines = DeadlineGrid::new(4, 600.0, 7200.0).unwrap();
    let cfg = TrainConfig {
        generations: 1,
        episodes_per_generation: 3,
        events_per_episode: 5,
        epsilon_initial: 0.0,
        ..mdp_config(1)
    };
    let (_, stats) = train(&plant, cfg, RadiusGrid::new(1, -1e9, 1e9).unwrap(), deadlines).unwrap();
    let expected: f64 = (0..5).map(|k| 0.9f64.powi(k) * 2.0).sum();
    let s = stats[0];
    assert!((s.mean_diet - expected).abs() < 1e-9);
    assert!((s.min_diet - expected).abs() < 1e-9 && (s.max_diet - expected).abs() < 1e-9);
}

#[test]
fn greedy_on_quiet_plant_matches_closed_form_metrics() {
    let plant = QuietPlant::default();
    let log = run_episode(
        plant.flow(),
        plant.trigger(),
        |x: &[f64]| plant.jump(x),
        |_: &[f64]| 3600.0,
        &[0.0],
        0.0,
        6,
        DEFAULT_EVENT_TOLERANCE,
    )
    .unwrap();
    let taus = tau_sequence(&log);
    assert!(taus.iter().all(|t| (t - 3600.0).abs() < 1e-9));
    assert!((diet(&taus, 0.5).unwrap() - (1.0 - 0.5f64.powi(6)) / 0.5).abs() < 1e-12);
    assert!((aiet(&taus).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn harvest_equals_explicit_replay_on_random_events() {
    for seed in 0..300 {
        let ev = random_event(seed);
        let bucket = bucket_of(ev.n_states);
        for alpha in [AlphaSchedule::VisitDecay, AlphaSchedule::Constant(0.37)] {
            let mut a = ev.table.clone();
            let mut b = ev.table.clone();
            harvest_event(&mut a, &ev.event, &ev.deadlines, &bucket, &alpha, 0.85, DEFAULT_EVENT_TOLERANCE).unwrap();
            explicit_replay(&mut b, &ev.event, &ev.deadlines, &bucket, &alpha, 0.85);
            assert!(tables_bitwise_equal(&a, &b), "seed {seed}");
        }
    }
}

#[test]
fn training_is_deterministic_and_thread_count_independent() {
    let mdp = ThreeBucketMdp::standard();
    let cfg = TrainConfig { epsilon_decay: 0.95, ..mdp_config(30) };
    let run = || train(&mdp, cfg, ThreeBucketMdp::states(), ThreeBucketMdp::deadlines()).unwrap();
    let (a, sa) = run();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (b, sb) = pool.install(run);
    assert!(tables_bitwise_equal(&a, &b));
    assert_eq!(sa, sb);
    let (c, _) =
        train(&mdp, TrainConfig { rng_seed: 43, ..cfg }, ThreeBucketMdp::states(), ThreeBucketMdp::deadlines())
            .unwrap();
    assert!(!tables_bitwise_equal(&a, &c));
}

#[test]
fn resumed_trainer_matches_uninterrupted_run() {
    let mdp = ThreeBucketMdp::standard();
    let cfg = TrainConfig { epsilon_decay: 0.9, ..mdp_config(12) };
    let (full, full_stats) = train(&mdp, cfg, ThreeBucketMdp::states(), ThreeBucketMdp::deadlines()).unwrap();

    let mut first = Trainer::new(&mdp, cfg, ThreeBucketMdp::states(), ThreeBucketMdp::deadlines()).unwrap();
    let mut stats: Vec<_> = (0..5).map(|_| first.run_generation().unwrap()).collect();
    let table = first.into_table();
    let mut second =
        Trainer::resume(&mdp, cfg, ThreeBucketMdp::states(), ThreeBucketMdp::deadlines(), table, 5).unwrap();
    while !second.is_finished() {
        stats.push(second.run_generation().unwrap());
    }
    assert!(tables_bitwise_equal(&full, second.table()));
    assert_eq!(stats, full_stats);
}
