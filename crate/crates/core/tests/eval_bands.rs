//! Evaluation sanity bands: untrained networks score like chance, and a
//! trained agent's pool evaluation is consistent with its training-time
//! evaluations.

use pd_core::dqn::{train_dqn, DqnAgent, DqnConfig};
use pd_core::envs::GameId;
use pd_core::eval::{build_start_pool, evaluate};
use pd_core::harness::ArchSpec;
use pd_core::nn::NetworkSpec;
use pd_core::policy::{NetPolicy, ScriptedPolicy};
use pd_core::rng::SeedTree;

fn small_spec() -> NetworkSpec {
    ArchSpec::parse("conv 4 4 2 | dense 16").unwrap().build(GameId::Catch)
}

#[test]
fn untrained_network_scores_no_better_than_chance() {
    let seeds = SeedTree::new(61);
    let reference = ScriptedPolicy::for_game(GameId::Catch);
    let mut rng = seeds.rng("pool", 0);
    let pool = build_start_pool(GameId::Catch, &reference, 60, &mut rng).unwrap();

    // Chance baseline: epsilon = 1 makes the base policy irrelevant.
    let random_score = evaluate(&reference, &pool, 1.0, 3).unwrap().mean;

    for seed in 0..3 {
        let agent = DqnAgent::new(small_spec(), seed, 1e-3, 0.99).unwrap();
        let policy = NetPolicy { spec: &agent.spec, params: &agent.params };
        let untrained = evaluate(&policy, &pool, 0.05, 4).unwrap().mean;
        // An untrained argmax policy is an arbitrary fixed policy; it must
        // not look competent. Allow slack above the uniform-random mean since
        // a constant paddle can get lucky, but require a wide gap to the
        // scripted ceiling.
        let scripted = evaluate(&reference, &pool, 0.05, 5).unwrap().mean;
        assert!(
            untrained <= random_score + 0.35 && untrained <= 0.5 * scripted,
            "untrained scored {untrained:.3} (random {random_score:.3}, scripted {scripted:.3})"
        );
    }
}

#[test]
fn pool_evaluation_is_consistent_with_training_evaluations() {
    let seeds = SeedTree::new(62);
    let config = DqnConfig {
        steps: 16_000,
        eval_every: 1_000,
        eval_episodes: 10,
        min_history: 200,
        memory_capacity: 20_000,
        ..DqnConfig::default()
    };
    let (agent, curve) = train_dqn(GameId::Catch, &small_spec(), &config, &seeds.subtree("t", 0)).unwrap();

    let reference = ScriptedPolicy::for_game(GameId::Catch);
    let mut rng = seeds.rng("pool", 0);
    let pool = build_start_pool(GameId::Catch, &reference, 80, &mut rng).unwrap();
    let policy = NetPolicy { spec: &agent.spec, params: &agent.params };
    let pool_score = evaluate(&policy, &pool, 0.05, 6).unwrap().mean;

    // The recorded training-time evaluation, minus a noise band derived by
    // re-running that evaluation protocol on the frozen final network (the
    // extra margin absorbs the start-distribution shift between null-op
    // starts and restored pool states).
    let last = curve.last().unwrap();
    let reruns: Vec<f64> = (0..5)
        .map(|i| {
            let mut rng = seeds.rng("rerun", i);
            pd_core::dqn::quick_eval(
                &agent.spec,
                &agent.params,
                GameId::Catch,
                config.eval_episodes,
                config.eval_epsilon,
                config.max_nullops,
                &mut rng,
            )
            .unwrap()
            .0
        })
        .collect();
    let mean = reruns.iter().sum::<f64>() / reruns.len() as f64;
    let spread = reruns
        .iter()
        .map(|r| (r - mean) * (r - mean))
        .sum::<f64>()
        .max(last.eval_score_std * last.eval_score_std)
        .sqrt();
    let band = 3.0 * spread + 0.15;
    assert!(
        pool_score >= last.eval_score_mean - band,
        "pool {pool_score:.3} below training eval {:.3} - {band:.3}",
        last.eval_score_mean
    );
}
