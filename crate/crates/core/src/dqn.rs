//! Deep Q-learning teacher: replay memory of transitions, a delayed target
//! network, epsilon-greedy behavior, and the minibatch TD update.

use rand::Rng as _;

use crate::envs::{make_game, reset_with_nullops, CompactStack, GameId, ObservationStack};
use crate::nn::{
    argmax_tie_low, backward_traced, forward, forward_traced, init_parameters, rmsprop_step,
    NetworkSpec, ParameterStore, RmsPropState,
};
use crate::replay::ReplayMemory;
use crate::rng::{Rng, SeedTree};
use crate::{PdError, Result};

/// One `(s, a, r, s', terminal)` sample.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: CompactStack,
    pub action: usize,
    pub reward: f64,
    pub next_state: CompactStack,
    pub terminal: bool,
}

/// Q-network, its delayed target copy, and the optimizer state.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub spec: NetworkSpec,
    pub params: ParameterStore,
    pub target_params: ParameterStore,
    pub optimizer: RmsPropState,
    pub discount: f64,
    pub epsilon: f64,
}

impl DqnAgent {
    pub fn new(spec: NetworkSpec, init_seed: u64, learning_rate: f64, discount: f64) -> Result<Self> {
        let params = init_parameters(&spec, init_seed)?;
        let target_params = params.clone();
        let optimizer = RmsPropState::new(params.len(), learning_rate);
        Ok(DqnAgent {
            spec,
            params,
            target_params,
            optimizer,
            discount,
            epsilon: 0.0,
        })
    }

    pub fn action_count(&self) -> usize {
        self.spec.output_units
    }

    pub fn q_values(&self, input: &[f64]) -> Result<Vec<f64>> {
        forward(&self.spec, &self.params, input)
    }

    /// Copies the online parameters into the target network.
    pub fn sync_target(&mut self) {
        self.target_params = self.params.clone();
    }
}

/// Epsilon-greedy action; the bool reports whether the uniform branch fired.
pub fn act_epsilon_greedy_traced(
    agent: &DqnAgent,
    stack: &ObservationStack,
    rng: &mut Rng,
) -> Result<(usize, bool)> {
    if rng.gen::<f64>() < agent.epsilon {
        Ok((rng.gen_range(0..agent.action_count()), true))
    } else {
        let q = agent.q_values(stack.as_input())?;
        Ok((argmax_tie_low(&q), false))
    }
}

pub fn act_epsilon_greedy(agent: &DqnAgent, stack: &ObservationStack, rng: &mut Rng) -> Result<usize> {
    Ok(act_epsilon_greedy_traced(agent, stack, rng)?.0)
}

/// TD target: `r` for terminal transitions, else
/// `r + gamma * max_a' Q(s', a'; target params)`.
pub fn td_target(agent: &DqnAgent, transition: &Transition) -> Result<f64> {
    if transition.terminal {
        return Ok(transition.reward);
    }
    let q = forward(&agent.spec, &agent.target_params, &transition.next_state.to_input())?;
    let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(transition.reward + agent.discount * best)
}

/// One minibatch Q-learning update. Squared TD error is averaged over the
/// batch and only the taken action's output receives gradient. The target
/// network is untouched.
pub fn dqn_update(
    agent: &mut DqnAgent,
    memory: &mut ReplayMemory<Transition>,
    batch_size: usize,
) -> Result<f64> {
    let indices = memory.sample_indices(batch_size)?;
    let mut grads = vec![0.0; agent.params.len()];
    let mut loss = 0.0;
    let scale = 1.0 / batch_size as f64;
    let mut input = Vec::new();
    for i in indices {
        let tr = memory.get(i).clone();
        let y = td_target(agent, &tr)?;
        tr.state.expand_into(&mut input);
        let trace = forward_traced(&agent.spec, &agent.params, &input)?;
        let diff = trace.output()[tr.action] - y;
        loss += diff * diff * scale;
        let mut out_grad = vec![0.0; agent.action_count()];
        out_grad[tr.action] = 2.0 * diff * scale;
        backward_traced(&agent.spec, &agent.params, &trace, &out_grad, &mut grads)?;
    }
    rmsprop_step(&mut agent.params.values, &grads, &mut agent.optimizer)?;
    Ok(loss)
}

/// Teacher training configuration. Values the source method leaves open
/// (batch size, sync cadence, epsilon schedule) carry desk-scale defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub memory_capacity: usize,
    pub min_history: usize,
    pub update_every: usize,
    pub sync_every: usize,
    pub eps_start: f64,
    pub eps_final: f64,
    pub eps_anneal_frac: f64,
    /// Denominator floor inside the RMSProp square root. The 1e-6 default
    /// keeps faith with the optimizer's stated constants; training presets
    /// raise it when late-training gradient collapse makes effective steps
    /// blow up.
    pub rmsprop_epsilon: f64,
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub eval_epsilon: f64,
    pub max_nullops: usize,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            steps: 30_000,
            batch_size: 32,
            learning_rate: 5e-4,
            discount: 0.99,
            memory_capacity: 50_000,
            min_history: 500,
            update_every: 2,
            sync_every: 150,
            eps_start: 1.0,
            eps_final: 0.05,
            eps_anneal_frac: 1.0 / 3.0,
            rmsprop_epsilon: RmsPropState::DEFAULT_EPSILON,
            eval_every: 1_000,
            eval_episodes: 20,
            eval_epsilon: 0.05,
            max_nullops: 8,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: usize) -> Result<()> {
            if v == 0 {
                return Err(PdError::InvalidArgument(format!("{name} must be positive")));
            }
            Ok(())
        }
        // steps == 0 is legal: it returns the untrained initial agent.
        positive("batch_size", self.batch_size)?;
        positive("memory_capacity", self.memory_capacity)?;
        positive("update_every", self.update_every)?;
        positive("sync_every", self.sync_every)?;
        positive("eval_every", self.eval_every)?;
        positive("eval_episodes", self.eval_episodes)?;
        if !(self.learning_rate > 0.0) {
            return Err(PdError::InvalidArgument("learning_rate must be positive".into()));
        }
        if !(self.rmsprop_epsilon > 0.0) {
            return Err(PdError::InvalidArgument("rmsprop_epsilon must be positive".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(PdError::InvalidArgument("discount must lie in (0, 1]".into()));
        }
        for (name, v) in [
            ("eps_start", self.eps_start),
            ("eps_final", self.eps_final),
            ("eval_epsilon", self.eval_epsilon),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PdError::InvalidArgument(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.eps_anneal_frac) {
            return Err(PdError::InvalidArgument("eps_anneal_frac must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Linear anneal from `eps_start` to `eps_final` over the first
    /// `eps_anneal_frac` of training, flat afterwards.
    pub fn epsilon_at(&self, step: usize) -> f64 {
        let horizon = (self.steps as f64 * self.eps_anneal_frac).max(1.0);
        let t = (step as f64 / horizon).min(1.0);
        self.eps_start + (self.eps_final - self.eps_start) * t
    }
}

/// One row of the training curve CSV.
#[derive(Debug, Clone, Copy)]
pub struct CurveRow {
    pub env_steps: usize,
    pub updates: usize,
    pub eval_score_mean: f64,
    pub eval_score_std: f64,
    pub epsilon: f64,
}

/// Mean and sample standard deviation of quick-evaluation episodes played
/// from null-op starts with a frozen network.
pub fn quick_eval(
    spec: &NetworkSpec,
    params: &ParameterStore,
    game: GameId,
    episodes: usize,
    epsilon: f64,
    max_nullops: usize,
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    let mut scores = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = make_game(game, 0);
        let mut stack = reset_with_nullops(&mut state, rng, max_nullops);
        let mut total = 0.0;
        while !state.terminal() {
            let action = if rng.gen::<f64>() < epsilon {
                rng.gen_range(0..game.action_count())
            } else {
                argmax_tie_low(&forward(spec, params, stack.as_input())?)
            };
            let res = state.step(action)?;
            total += res.reward;
            stack.push(&res.observation);
        }
        scores.push(total);
    }
    Ok(mean_std(&scores))
}

pub(crate) fn mean_std(scores: &[f64]) -> (f64, f64) {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    if scores.len() < 2 {
        return (mean, 0.0);
    }
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains a DQN teacher on one game: environment steps interleaved with
/// minibatch updates, target syncs every `sync_every` updates, and periodic
/// frozen-network evaluations recorded as the score curve.
pub fn train_dqn(
    game: GameId,
    spec: &NetworkSpec,
    config: &DqnConfig,
    seeds: &SeedTree,
) -> Result<(DqnAgent, Vec<CurveRow>)> {
    config.validate()?;
    if spec.output_units != game.action_count() {
        return Err(PdError::ShapeMismatch(format!(
            "spec has {} outputs, {} needs {}",
            spec.output_units,
            game.name(),
            game.action_count()
        )));
    }
    let mut agent = DqnAgent::new(
        spec.clone(),
        seeds.seed("dqn-init", 0),
        config.learning_rate,
        config.discount,
    )?;
    agent.optimizer.epsilon = config.rmsprop_epsilon;
    let mut memory = ReplayMemory::new(config.memory_capacity, seeds.rng("dqn-sample", 0));
    let mut env_rng = seeds.rng("dqn-env", 0);
    let mut explore_rng = seeds.rng("dqn-explore", 0);

    let mut state = make_game(game, 0);
    let mut stack = reset_with_nullops(&mut state, &mut env_rng, config.max_nullops);
    let mut updates = 0usize;
    let mut curve = Vec::new();
    let mut eval_index = 0u64;

    for step in 1..=config.steps {
        agent.epsilon = config.epsilon_at(step);
        let action = act_epsilon_greedy(&agent, &stack, &mut explore_rng)?;
        let res = state.step(action)?;
        let before = CompactStack::from_stack(&stack);
        stack.push(&res.observation);
        memory.push(Transition {
            state: before,
            action,
            reward: res.reward,
            next_state: CompactStack::from_stack(&stack),
            terminal: res.terminal,
        });
        if res.terminal {
            stack = reset_with_nullops(&mut state, &mut env_rng, config.max_nullops);
        }

        if memory.len() >= config.min_history && step % config.update_every == 0 {
            dqn_update(&mut agent, &mut memory, config.batch_size)?;
            updates += 1;
            if updates % config.sync_every == 0 {
                agent.sync_target();
            }
        }

        if step % config.eval_every == 0 || step == config.steps {
            let mut rng = seeds.rng("dqn-eval", eval_index);
            eval_index += 1;
            let (mean, std) = quick_eval(
                &agent.spec,
                &agent.params,
                game,
                config.eval_episodes,
                config.eval_epsilon,
                config.max_nullops,
                &mut rng,
            )?;
            curve.push(CurveRow {
                env_steps: step,
                updates,
                eval_score_mean: mean,
                eval_score_std: std,
                epsilon: agent.epsilon,
            });
        }
    }
    Ok((agent, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Observation;
    use crate::nn::count_parameters;
    use rand_chacha::rand_core::SeedableRng;

    fn tiny_spec(actions: usize) -> NetworkSpec {
        NetworkSpec {
            input_channels: 4,
            input_height: 12,
            input_width: 12,
            conv_layers: vec![],
            dense_layers: vec![8],
            output_units: actions,
        }
    }

    fn stack_for(game: GameId, seed: u64) -> ObservationStack {
        ObservationStack::from_initial(&make_game(game, seed).observe())
    }

    fn transition(game: GameId, seed: u64, action: usize, reward: f64, terminal: bool) -> Transition {
        let mut state = make_game(game, seed);
        let stack = ObservationStack::from_initial(&state.observe());
        let before = CompactStack::from_stack(&stack);
        let res = state.step(action).unwrap();
        let mut next = stack.clone();
        next.push(&res.observation);
        Transition {
            state: before,
            action,
            reward,
            next_state: CompactStack::from_stack(&next),
            terminal,
        }
    }

    #[test]
    fn epsilon_zero_always_greedy() {
        let mut agent = DqnAgent::new(tiny_spec(3), 3, 1e-3, 0.99).unwrap();
        agent.epsilon = 0.0;
        let stack = stack_for(GameId::Catch, 5);
        let q = agent.q_values(stack.as_input()).unwrap();
        let greedy = argmax_tie_low(&q);
        let mut rng = Rng::seed_from_u64(0);
        for _ in 0..50 {
            let (a, random) = act_epsilon_greedy_traced(&agent, &stack, &mut rng).unwrap();
            assert_eq!(a, greedy);
            assert!(!random);
        }
    }

    #[test]
    fn epsilon_one_is_uniform() {
        // Chi-squared over 3 actions at p = 0.01 (dof 2, critical 9.210).
        let mut agent = DqnAgent::new(tiny_spec(3), 3, 1e-3, 0.99).unwrap();
        agent.epsilon = 1.0;
        let stack = stack_for(GameId::Catch, 5);
        let mut rng = Rng::seed_from_u64(11);
        let mut counts = [0usize; 3];
        let trials = 10_000;
        for _ in 0..trials {
            let (a, random) = act_epsilon_greedy_traced(&agent, &stack, &mut rng).unwrap();
            assert!(random);
            counts[a] += 1;
        }
        let expected = trials as f64 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 9.210, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn five_percent_exploration_rate() {
        let mut agent = DqnAgent::new(tiny_spec(3), 3, 1e-3, 0.99).unwrap();
        agent.epsilon = 0.05;
        let stack = stack_for(GameId::Catch, 5);
        let mut rng = Rng::seed_from_u64(23);
        let trials = 10_000;
        let mut random_count = 0;
        for _ in 0..trials {
            let (_, random) = act_epsilon_greedy_traced(&agent, &stack, &mut rng).unwrap();
            random_count += random as usize;
        }
        let frac = random_count as f64 / trials as f64;
        assert!((frac - 0.05).abs() <= 0.01, "fraction {frac}");
    }

    #[test]
    fn td_target_terminal_and_zero_network_and_myopic() {
        let spec = tiny_spec(3);
        let mut agent = DqnAgent::new(spec.clone(), 1, 1e-3, 0.99).unwrap();

        let t = transition(GameId::Catch, 1, 1, 1.0, true);
        assert_eq!(td_target(&agent, &t).unwrap(), 1.0);

        agent.params = ParameterStore::zeros(&spec).unwrap();
        agent.sync_target();
        let t = transition(GameId::Catch, 1, 1, 0.5, false);
        assert_eq!(td_target(&agent, &t).unwrap(), 0.5);

        let mut myopic = DqnAgent::new(spec, 2, 1e-3, 1.0).unwrap();
        myopic.discount = 0.0;
        let t = transition(GameId::Catch, 2, 0, -0.25, false);
        assert_eq!(td_target(&myopic, &t).unwrap(), -0.25);
    }

    #[test]
    fn fixed_point_batch_leaves_parameters_unchanged() {
        // Zero network, zero rewards: Q(s,a) == td_target == 0 everywhere.
        let spec = tiny_spec(3);
        let mut agent = DqnAgent::new(spec.clone(), 1, 1e-3, 0.99).unwrap();
        agent.params = ParameterStore::zeros(&spec).unwrap();
        agent.sync_target();
        let mut memory = ReplayMemory::new(16, Rng::seed_from_u64(1));
        for seed in 0..4 {
            memory.push(transition(GameId::Catch, seed, 1, 0.0, false));
        }
        let before = agent.params.clone();
        let loss = dqn_update(&mut agent, &mut memory, 4).unwrap();
        assert_eq!(loss, 0.0);
        assert!(agent.params.bits_eq(&before));
    }

    #[test]
    fn single_sample_gradient_matches_finite_differences() {
        let spec = NetworkSpec::dense(32, vec![6], 3);
        let mut agent = DqnAgent::new(spec.clone(), 9, 1e-3, 0.9).unwrap();
        // Hand-build a transition over a synthetic 8-pixel "frame".
        let obs = |vals: [f64; 2]| {
            let mut o = Observation::blank();
            o.pixels = vec![vals[0], vals[1], 0.3, 0.1, 0.0, 0.2, 0.4, 0.05];
            o
        };
        let s = ObservationStack::from_initial(&obs([0.5, 0.1]));
        let mut s2 = s.clone();
        s2.push(&obs([0.2, 0.7]));
        let tr = Transition {
            state: CompactStack::from_stack(&s),
            action: 2,
            reward: 0.3,
            next_state: CompactStack::from_stack(&s2),
            terminal: false,
        };
        // CompactStack quantizes to the 1/20 grid; mirror that through the
        // same type so oracle inputs match exactly.
        let input = tr.state.to_input();
        let y = td_target(&agent, &tr).unwrap();
        let scalar_loss = |params: &ParameterStore| {
            let q = forward(&spec, params, &input).unwrap();
            (q[tr.action] - y) * (q[tr.action] - y)
        };
        // Analytic gradient at batch size 1.
        let trace = forward_traced(&spec, &agent.params, &input).unwrap();
        let mut out_grad = vec![0.0; 3];
        out_grad[tr.action] = 2.0 * (trace.output()[tr.action] - y);
        let mut grads = vec![0.0; agent.params.len()];
        backward_traced(&spec, &agent.params, &trace, &out_grad, &mut grads).unwrap();

        let h = 1e-6;
        for i in 0..agent.params.len() {
            let mut plus = agent.params.clone();
            plus.values[i] += h;
            let mut minus = agent.params.clone();
            minus.values[i] -= h;
            let fd = (scalar_loss(&plus) - scalar_loss(&minus)) / (2.0 * h);
            let denom = grads[i].abs().max(fd.abs()).max(1e-6);
            assert!(
                (grads[i] - fd).abs() / denom < 1e-4,
                "param {i}: analytic {} vs fd {fd}",
                grads[i]
            );
        }
        let _ = count_parameters(&spec).unwrap();
        agent.epsilon = 0.0;
    }

    #[test]
    fn identical_seeds_identical_updates() {
        let run = || {
            let spec = tiny_spec(3);
            let mut agent = DqnAgent::new(spec, 4, 1e-3, 0.99).unwrap();
            let mut memory = ReplayMemory::new(64, Rng::seed_from_u64(9));
            for seed in 0..10 {
                memory.push(transition(GameId::Catch, seed, (seed % 3) as usize, 0.1, false));
            }
            for _ in 0..5 {
                dqn_update(&mut agent, &mut memory, 8).unwrap();
            }
            agent.params
        };
        assert!(run().bits_eq(&run()));
    }

    #[test]
    fn target_is_immutable_between_syncs_and_sync_idempotent() {
        let spec = tiny_spec(3);
        let mut agent = DqnAgent::new(spec, 4, 1e-3, 0.99).unwrap();
        let mut memory = ReplayMemory::new(256, Rng::seed_from_u64(2));
        for seed in 0..20 {
            memory.push(transition(GameId::Catch, seed, (seed % 3) as usize, 0.5, false));
        }
        let frozen = agent.target_params.clone();
        for _ in 0..100 {
            dqn_update(&mut agent, &mut memory, 8).unwrap();
        }
        assert!(agent.target_params.bits_eq(&frozen));
        assert!(!agent.params.bits_eq(&frozen));

        agent.sync_target();
        let t = transition(GameId::Catch, 3, 1, 0.25, false);
        let with_target = td_target(&agent, &t).unwrap();
        let q = forward(&agent.spec, &agent.params, &t.next_state.to_input()).unwrap();
        let with_online = t.reward + agent.discount * q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(with_target, with_online);

        let snapshot = agent.target_params.clone();
        agent.sync_target();
        assert!(agent.target_params.bits_eq(&snapshot));
    }

    #[test]
    fn update_touches_only_taken_action_gradient() {
        // Dense net; the output layer's weight rows for untaken actions must
        // stay bit-identical after one update from a single transition.
        let spec = NetworkSpec::dense(32, vec![4], 3);
        let mut agent = DqnAgent::new(spec.clone(), 6, 1e-2, 0.0).unwrap();
        let mut memory = ReplayMemory::new(4, Rng::seed_from_u64(3));
        let mut o = Observation::blank();
        o.pixels = vec![0.5, 0.25, 0.1, 0.0, 0.3, 0.45, 0.2, 0.15];
        let s = ObservationStack::from_initial(&o);
        memory.push(Transition {
            state: CompactStack::from_stack(&s),
            action: 1,
            reward: 1.0,
            next_state: CompactStack::from_stack(&s),
            terminal: true,
        });
        let before = agent.params.clone();
        dqn_update(&mut agent, &mut memory, 1).unwrap();
        // Output layer layout: weights [3][4] then biases [3].
        let out_offset = agent.params.len() - (4 * 3 + 3);
        for action in [0usize, 2] {
            let row = out_offset + action * 4;
            for i in row..row + 4 {
                assert_eq!(agent.params.values[i].to_bits(), before.values[i].to_bits());
            }
            let bias = out_offset + 12 + action;
            assert_eq!(agent.params.values[bias].to_bits(), before.values[bias].to_bits());
        }
        // The taken action's row did move.
        let row = out_offset + 4;
        assert!((row..row + 4).any(|i| agent.params.values[i] != before.values[i]));
    }

    #[test]
    fn myopic_updates_contract_to_reward() {
        // gamma = 0, single deterministic reward: Q(s, a) -> r.
        let spec = NetworkSpec::dense(32, vec![4], 2);
        let mut agent = DqnAgent::new(spec.clone(), 8, 5e-3, 0.0).unwrap();
        agent.discount = 0.0;
        let mut o = Observation::blank();
        o.pixels = vec![0.4, 0.2, 0.6, 0.1, 0.0, 0.3, 0.25, 0.5];
        let s = ObservationStack::from_initial(&o);
        let mut memory = ReplayMemory::new(2, Rng::seed_from_u64(5));
        memory.push(Transition {
            state: CompactStack::from_stack(&s),
            action: 0,
            reward: 0.7,
            next_state: CompactStack::from_stack(&s),
            terminal: false,
        });
        for _ in 0..3000 {
            dqn_update(&mut agent, &mut memory, 1).unwrap();
        }
        let q = agent.q_values(&s.as_input().to_vec()).unwrap();
        assert!((q[0] - 0.7).abs() < 1e-3, "Q = {:?}", q);
    }

    #[test]
    fn rejects_invalid_config() {
        let mut c = DqnConfig::default();
        c.discount = 1.5;
        assert!(c.validate().is_err());
        let mut c = DqnConfig::default();
        c.batch_size = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_steps_returns_untrained_agent() {
        let cfg = DqnConfig { steps: 0, ..DqnConfig::default() };
        let spec = tiny_spec(3);
        let seeds = crate::rng::SeedTree::new(4);
        let (agent, curve) = train_dqn(GameId::Catch, &spec, &cfg, &seeds).unwrap();
        let init = crate::nn::init_parameters(&spec, seeds.seed("dqn-init", 0)).unwrap();
        assert!(agent.params.bits_eq(&init));
        assert!(curve.is_empty());
    }
}
