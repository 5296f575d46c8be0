//! Desk-scale calibration probe: trains a teacher per game and prints
//! scripted/random/teacher scores plus wall times. Not part of the test
//! suite; run with `cargo run --release -p pd-core --example desk_probe`.

use std::time::Instant;

use pd_core::dqn::{train_dqn, DqnConfig};
use pd_core::envs::GameId;
use pd_core::eval::{build_start_pool, evaluate};
use pd_core::harness::ArchSpec;
use pd_core::policy::{NetPolicy, ScriptedPolicy};
use pd_core::rng::SeedTree;

fn main() {
    let seeds = SeedTree::new(7);
    let arch = ArchSpec::parse("conv 8 4 2 | conv 16 3 1 | dense 64").unwrap();
    let args: Vec<String> = std::env::args().collect();
    let steps_override: Option<usize> = args.get(1).and_then(|s| s.parse().ok());

    for game in GameId::ALL {
        let t0 = Instant::now();
        let reference = ScriptedPolicy::for_game(game);
        let mut rng = seeds.rng("probe-pool", game as u64);
        let pool = build_start_pool(game, &reference, 100, &mut rng).unwrap();
        let scripted = evaluate(&reference, &pool, 0.05, 1).unwrap();
        let random = evaluate(&reference, &pool, 1.0, 2).unwrap();

        let mut cfg = DqnConfig::default();
        if let Some(steps) = steps_override {
            cfg.steps = steps;
        }
        let spec = arch.build(game);
        let t1 = Instant::now();
        let (agent, curve) = train_dqn(game, &spec, &cfg, &seeds.subtree("probe-teacher", game as u64)).unwrap();
        let train_time = t1.elapsed();
        let policy = NetPolicy { spec: &agent.spec, params: &agent.params };
        let teacher = evaluate(&policy, &pool, 0.05, 3).unwrap();

        let tail: Vec<String> = curve
            .iter()
            .rev()
            .take(5)
            .map(|r| format!("{:.3}", r.eval_score_mean))
            .collect();
        println!(
            "{:<9} scripted {:>7.3}  random {:>7.3}  teacher {:>7.3}  ratio {:>5.1}%  train {:?}  total {:?}  tail {:?}",
            game.name(),
            scripted.mean,
            random.mean,
            teacher.mean,
            100.0 * teacher.mean / scripted.mean,
            train_time,
            t0.elapsed(),
            tail
        );
    }
}
