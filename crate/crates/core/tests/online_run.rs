//! Mechanical checks of the online-distillation plumbing at miniature scale.

use pd_core::distill::DistillConfig;
use pd_core::dqn::DqnConfig;
use pd_core::envs::GameId;
use pd_core::nn::{forward, NetworkSpec};
use pd_core::online::online_distill;
use pd_core::rng::SeedTree;

fn tiny_specs() -> (NetworkSpec, NetworkSpec) {
    let spec = NetworkSpec {
        input_channels: 4,
        input_height: 12,
        input_width: 12,
        conv_layers: vec![],
        dense_layers: vec![12],
        output_units: 3,
    };
    (spec.clone(), spec)
}

fn tiny_configs() -> (DqnConfig, DistillConfig) {
    let dqn = DqnConfig {
        steps: 1_200,
        memory_capacity: 2_000,
        min_history: 100,
        update_every: 4,
        sync_every: 50,
        eval_every: 200,
        eval_episodes: 4,
        ..DqnConfig::default()
    };
    let distill = DistillConfig {
        refresh_steps: 60,
        updates_per_refresh: 20,
        buffer_capacity: 400,
        total_budget: 60, // unused by the online loop
        probe_samples: 16,
        ..DistillConfig::default()
    };
    (dqn, distill)
}

#[test]
fn best_curve_is_running_max_and_samples_come_from_snapshots() {
    let (teacher_spec, student_spec) = tiny_specs();
    let (dqn, distill) = tiny_configs();
    let outcome = online_distill(
        GameId::Catch,
        &teacher_spec,
        &student_spec,
        &dqn,
        &distill,
        &SeedTree::new(5),
    )
    .unwrap();

    // The logged best-so-far column is exactly the running max of the DQN
    // evaluation column.
    let mut best = f64::NEG_INFINITY;
    for row in &outcome.rows {
        best = best.max(row.dqn_eval);
        assert_eq!(row.best_so_far.to_bits(), best.to_bits());
    }

    // Snapshot history is strictly increasing and the first eval snapshots.
    assert!(!outcome.tracker.history.is_empty());
    assert!(outcome.rows[0].snapshot_event);
    assert!(outcome
        .tracker
        .history
        .windows(2)
        .all(|w| w[1].1 > w[0].1));

    // Every buffered sample was produced by the snapshot whose generation it
    // carries: recomputing the teacher outputs from that snapshot's frozen
    // parameters reproduces the stored Q-vector bit for bit.
    assert!(outcome.buffer.len() > 0);
    for sample in outcome.buffer.iter() {
        let generation = sample.generation as usize;
        assert!(generation >= 1, "buffered data before any snapshot");
        let params = &outcome.all_snapshots[generation - 1];
        let again = forward(&teacher_spec, params, &sample.state.to_input()).unwrap();
        assert!(sample
            .teacher_q
            .iter()
            .zip(&again)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn distinct_seeds_give_distinct_runs() {
    let (teacher_spec, student_spec) = tiny_specs();
    let (dqn, distill) = tiny_configs();
    let a = online_distill(GameId::Catch, &teacher_spec, &student_spec, &dqn, &distill, &SeedTree::new(1)).unwrap();
    let b = online_distill(GameId::Catch, &teacher_spec, &student_spec, &dqn, &distill, &SeedTree::new(2)).unwrap();
    assert_eq!(a.rows.len(), b.rows.len());
    assert!(a
        .rows
        .iter()
        .zip(&b.rows)
        .any(|(x, y)| x.dqn_eval != y.dqn_eval || x.student_eval != y.student_eval));

    // Same seed reproduces the run exactly.
    let c = online_distill(GameId::Catch, &teacher_spec, &student_spec, &dqn, &distill, &SeedTree::new(1)).unwrap();
    assert!(a
        .rows
        .iter()
        .zip(&c.rows)
        .all(|(x, y)| x.dqn_eval.to_bits() == y.dqn_eval.to_bits()
            && x.student_eval.to_bits() == y.student_eval.to_bits()));
    assert!(a.student.params.bits_eq(&c.student.params));
}
