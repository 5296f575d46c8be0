//! Hyperparameter sweep over DQN training on one game.
//! `cargo run --release -p pd-core --example sweep_probe [game]`

use std::time::Instant;

use pd_core::dqn::{train_dqn, DqnConfig};
use pd_core::envs::GameId;
use pd_core::eval::{build_start_pool, evaluate};
use pd_core::harness::ArchSpec;
use pd_core::policy::{NetPolicy, ScriptedPolicy};
use pd_core::rng::SeedTree;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let game = GameId::parse(args.get(1).map(String::as_str).unwrap_or("catch")).unwrap();
    let seeds = SeedTree::new(7);
    let arch_text = args
        .get(2)
        .map(String::as_str)
        .unwrap_or("conv 8 4 2 | conv 16 3 1 | dense 64");
    let arch = ArchSpec::parse(arch_text).unwrap();
    println!("arch: {arch_text}");
    let reference = ScriptedPolicy::for_game(game);
    let mut rng = seeds.rng("probe-pool", game as u64);
    let pool = build_start_pool(game, &reference, 100, &mut rng).unwrap();
    let scripted = evaluate(&reference, &pool, 0.05, 1).unwrap().mean;
    println!("{}: scripted {scripted:.3}", game.name());

    let grid = [
        // (steps, update_every, sync_every, lr)
        (40_000usize, 2usize, 150usize, 5e-4),
    ];
    for (steps, update_every, sync_every, lr) in grid {
        let mut cfg = DqnConfig::default();
        cfg.steps = steps;
        cfg.update_every = update_every;
        cfg.sync_every = sync_every;
        cfg.learning_rate = lr;
        if let Ok(v) = std::env::var("PD_SWEEP_RMS_EPS") {
            cfg.rmsprop_epsilon = v.parse().unwrap();
        }
        if let Ok(v) = std::env::var("PD_SWEEP_GAMMA") {
            cfg.discount = v.parse().unwrap();
        }
        if let Ok(v) = std::env::var("PD_SWEEP_BATCH") {
            cfg.batch_size = v.parse().unwrap();
        }
        if let Ok(v) = std::env::var("PD_SWEEP_EPSF") {
            cfg.eps_final = v.parse().unwrap();
        }
        if let Ok(v) = std::env::var("PD_SWEEP_SYNC") {
            cfg.sync_every = v.parse().unwrap();
        }
        let t = Instant::now();
        let (agent, curve) =
            train_dqn(game, &arch.build(game), &cfg, &seeds.subtree("sweep", sync_every as u64 * 100_000 + steps as u64 + (lr * 1e6) as u64)).unwrap();
        let policy = NetPolicy { spec: &agent.spec, params: &agent.params };
        let score = evaluate(&policy, &pool, 0.05, 3).unwrap().mean;
        let greedy = evaluate(&policy, &pool, 0.0, 3).unwrap().mean;
        let tail: Vec<String> = curve.iter().rev().take(10).map(|r| format!("{:.2}", r.eval_score_mean)).collect();
        println!(
            "steps {steps} upd/{update_every} sync {sync_every} lr {lr:<7}: pool {score:>7.3} ({:>5.1}%) greedy {greedy:>7.3} in {:?} tail {:?}",
            100.0 * score / scripted,
            t.elapsed(),
            tail
        );
    }
}
