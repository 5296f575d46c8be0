//! Multi-task networks and training: a shared trunk (conv stack plus dense
//! layers) with one controller head per task, sized to that task's action
//! set. The task id routes forward passes, distillation targets, and
//! Q-learning updates through the right head; everything else is shared.

use rand::Rng as _;

use crate::distill::{
    argmax_agreement, build_probe, run_distill_loop, DataCadence, DistillConfig, DistillCurveRow,
    DistillTask, StudentOps, Target,
};
use crate::dqn::{mean_std, DqnAgent, DqnConfig, Transition};
use crate::envs::{make_game, reset_with_nullops, CompactStack, GameId, ObservationStack};
use crate::nn::{
    apply_layer, argmax_tie_low, backprop_layer, rmsprop_step, ConvSpec, LayerShape, NetworkSpec,
    ParameterStore, RmsPropState,
};
use crate::replay::ReplayMemory;
use crate::rng::{Rng, SeedTree};
use crate::{PdError, Result};

/// Architecture of a multi-task network: the shared trunk and the width of
/// the per-task controller heads (hidden units; the output layer is sized to
/// each task's action count).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiTaskSpec {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub conv_layers: Vec<ConvSpec>,
    pub trunk_dense: Vec<usize>,
    pub head_hidden: usize,
    pub action_counts: Vec<usize>,
}

impl MultiTaskSpec {
    /// The single-network view of trunk + head `task`: conv stack, trunk
    /// dense layers, the head's hidden layer, and a linear output sized to
    /// the task's action count.
    pub fn effective_spec(&self, task: usize) -> Result<NetworkSpec> {
        let actions = *self
            .action_counts
            .get(task)
            .ok_or(PdError::UnknownTask(task))?;
        let mut dense = self.trunk_dense.clone();
        dense.push(self.head_hidden);
        Ok(NetworkSpec {
            input_channels: self.input_channels,
            input_height: self.input_height,
            input_width: self.input_width,
            conv_layers: self.conv_layers.clone(),
            dense_layers: dense,
            output_units: actions,
        })
    }

    pub fn task_count(&self) -> usize {
        self.action_counts.len()
    }

    fn trunk_layer_count(&self) -> usize {
        self.conv_layers.len() + self.trunk_dense.len()
    }

    /// Layer shapes split into (trunk, head-of-task) segments.
    fn split_layers(&self, task: usize) -> Result<(Vec<LayerShape>, Vec<LayerShape>)> {
        let layers = self.effective_spec(task)?.layers()?;
        let trunk_len = self.trunk_layer_count();
        let trunk = layers[..trunk_len].to_vec();
        let head = layers[trunk_len..].to_vec();
        Ok((trunk, head))
    }

    pub fn trunk_parameter_count(&self) -> Result<usize> {
        let (trunk, _) = self.split_layers(0)?;
        Ok(trunk.iter().map(LayerShape::parameter_count).sum())
    }

    pub fn head_parameter_count(&self, task: usize) -> Result<usize> {
        let (_, head) = self.split_layers(task)?;
        Ok(head.iter().map(LayerShape::parameter_count).sum())
    }

    /// Trunk plus every head.
    pub fn total_parameter_count(&self) -> Result<usize> {
        let mut total = self.trunk_parameter_count()?;
        for task in 0..self.task_count() {
            total += self.head_parameter_count(task)?;
        }
        Ok(total)
    }

    /// Fraction of parameters shared across tasks.
    pub fn shared_fraction(&self) -> Result<f64> {
        Ok(self.trunk_parameter_count()? as f64 / self.total_parameter_count()? as f64)
    }
}

/// A multi-task network: one flat parameter vector for the trunk plus one per
/// head, with matching optimizer state segments.
#[derive(Debug, Clone)]
pub struct MultiTaskNetwork {
    pub spec: MultiTaskSpec,
    pub trunk_params: Vec<f64>,
    pub head_params: Vec<Vec<f64>>,
}

impl MultiTaskNetwork {
    /// Deterministic initialization, drawing trunk layers then each head in
    /// task order from one stream. A one-task network therefore initializes
    /// bit-identically to `init_parameters` on its effective spec.
    pub fn init(spec: MultiTaskSpec, seed: u64) -> Result<Self> {
        if spec.task_count() == 0 {
            return Err(PdError::InvalidSpec("multi-task network needs at least one head".into()));
        }
        for task in 0..spec.task_count() {
            spec.effective_spec(task)?.validate()?;
        }
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = Rng::seed_from_u64(seed);
        let (trunk_layers, _) = spec.split_layers(0)?;
        let trunk_params = init_segment(&trunk_layers, &mut rng);
        let mut head_params = Vec::with_capacity(spec.task_count());
        for task in 0..spec.task_count() {
            let (_, head_layers) = spec.split_layers(task)?;
            head_params.push(init_segment(&head_layers, &mut rng));
        }
        Ok(MultiTaskNetwork { spec, trunk_params, head_params })
    }

    pub fn task_count(&self) -> usize {
        self.spec.task_count()
    }

    /// Forward through trunk + head `task` only.
    pub fn forward_task(&self, task: usize, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_task_traced(task, input)?.1)
    }

    fn forward_task_traced(&self, task: usize, input: &[f64]) -> Result<(MtTrace, Vec<f64>)> {
        let (trunk_layers, head_layers) = self.spec.split_layers(task)?;
        crate::nn::check_input(&self.spec.effective_spec(task)?, input)?;
        let mut activations = Vec::with_capacity(trunk_layers.len() + head_layers.len() + 1);
        activations.push(input.to_vec());
        let mut offset = 0;
        for layer in &trunk_layers {
            let n = layer.parameter_count();
            let mut out = Vec::new();
            apply_layer(layer, &self.trunk_params[offset..offset + n], activations.last().unwrap(), &mut out);
            activations.push(out);
            offset += n;
        }
        let mut offset = 0;
        for layer in &head_layers {
            let n = layer.parameter_count();
            let mut out = Vec::new();
            apply_layer(
                layer,
                &self.head_params[task][offset..offset + n],
                activations.last().unwrap(),
                &mut out,
            );
            activations.push(out);
            offset += n;
        }
        let output = activations.last().unwrap().clone();
        Ok((MtTrace { activations, trunk_layers, head_layers }, output))
    }

    /// Backprop through head `task` and the trunk, accumulating into the
    /// matching gradient segments. Heads other than `task` are untouched.
    fn backward_task(
        &self,
        task: usize,
        trace: &MtTrace,
        output_gradient: &[f64],
        trunk_grads: &mut [f64],
        head_grads: &mut [f64],
    ) -> Result<()> {
        let trunk_len = trace.trunk_layers.len();
        let mut delta = output_gradient.to_vec();
        let mut offsets = Vec::with_capacity(trace.head_layers.len());
        let mut offset = 0;
        for layer in &trace.head_layers {
            offsets.push(offset);
            offset += layer.parameter_count();
        }
        for (i, layer) in trace.head_layers.iter().enumerate().rev() {
            let p = &self.head_params[task][offsets[i]..offsets[i] + layer.parameter_count()];
            let g = &mut head_grads[offsets[i]..offsets[i] + layer.parameter_count()];
            let input = &trace.activations[trunk_len + i];
            let output = &trace.activations[trunk_len + i + 1];
            delta = backprop_layer(layer, p, g, input, output, &delta);
        }
        let mut offsets = Vec::with_capacity(trunk_len);
        let mut offset = 0;
        for layer in &trace.trunk_layers {
            offsets.push(offset);
            offset += layer.parameter_count();
        }
        for (i, layer) in trace.trunk_layers.iter().enumerate().rev() {
            let p = &self.trunk_params[offsets[i]..offsets[i] + layer.parameter_count()];
            let g = &mut trunk_grads[offsets[i]..offsets[i] + layer.parameter_count()];
            let input = &trace.activations[i];
            let output = &trace.activations[i + 1];
            delta = backprop_layer(layer, p, g, input, output, &delta);
        }
        Ok(())
    }

    /// Extracts the task's trunk+head view as a standalone network, e.g. for
    /// the checkpoint container.
    pub fn flatten_task(&self, task: usize) -> Result<(NetworkSpec, ParameterStore)> {
        let spec = self.spec.effective_spec(task)?;
        let mut values = self.trunk_params.clone();
        values.extend_from_slice(&self.head_params[task]);
        let params = ParameterStore::from_values(&spec, values)?;
        Ok((spec, params))
    }
}

fn init_segment(layers: &[LayerShape], rng: &mut Rng) -> Vec<f64> {
    let mut values = Vec::new();
    for layer in layers {
        let bound = 1.0 / (layer.fan_in() as f64).sqrt();
        for _ in 0..layer.weight_count() {
            loop {
                let x = (2.0 * rng.gen::<f64>() - 1.0) * bound;
                if x.abs() < bound {
                    values.push(x);
                    break;
                }
            }
        }
        values.extend(std::iter::repeat(0.0).take(layer.bias_count()));
    }
    values
}

struct MtTrace {
    activations: Vec<Vec<f64>>,
    trunk_layers: Vec<LayerShape>,
    head_layers: Vec<LayerShape>,
}

/// Multi-task network plus per-segment optimizer state.
#[derive(Debug, Clone)]
pub struct MultiTaskStudent {
    pub net: MultiTaskNetwork,
    pub trunk_opt: RmsPropState,
    pub head_opts: Vec<RmsPropState>,
}

impl MultiTaskStudent {
    pub fn new(net: MultiTaskNetwork, learning_rate: f64) -> Self {
        let trunk_opt = RmsPropState::new(net.trunk_params.len(), learning_rate);
        let head_opts = net
            .head_params
            .iter()
            .map(|h| RmsPropState::new(h.len(), learning_rate))
            .collect();
        MultiTaskStudent { net, trunk_opt, head_opts }
    }

    /// One minibatch step through trunk + head `task` given per-sample output
    /// gradients produced by `loss`. Returns the mean loss.
    fn step_batch(
        &mut self,
        task: usize,
        batch: &[(Vec<f64>, Target)],
    ) -> Result<f64> {
        let mut trunk_grads = vec![0.0; self.net.trunk_params.len()];
        let mut head_grads = vec![0.0; self.net.head_params[task].len()];
        let mut loss_sum = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for (input, target) in batch {
            let (trace, output) = self.net.forward_task_traced(task, input)?;
            let (loss, out_grad) = crate::distill::target_loss(target, &output)?;
            loss_sum += loss;
            let scaled: Vec<f64> = out_grad.iter().map(|g| g * scale).collect();
            self.net
                .backward_task(task, &trace, &scaled, &mut trunk_grads, &mut head_grads)?;
        }
        rmsprop_step(&mut self.net.trunk_params, &trunk_grads, &mut self.trunk_opt)?;
        rmsprop_step(&mut self.net.head_params[task], &head_grads, &mut self.head_opts[task])?;
        Ok(loss_sum * scale)
    }
}

impl MultiTaskStudent {
    /// One distillation minibatch through `task`'s head, sampled from
    /// `buffer` under the config's loss. The multi-task analog of
    /// `distill::distill_update`.
    pub fn distill_step(
        &mut self,
        task: usize,
        buffer: &mut crate::distill::DistillBuffer,
        config: &DistillConfig,
    ) -> Result<f64> {
        let batch = crate::distill::draw_batch(buffer, config.batch_size, config.loss_kind, config.tau)?;
        self.step_batch(task, &batch)
    }
}

impl StudentOps for MultiTaskStudent {
    fn action_count(&self, task: usize) -> usize {
        self.net.spec.action_counts[task]
    }

    fn student_q(&self, task: usize, input: &[f64]) -> Result<Vec<f64>> {
        self.net.forward_task(task, input)
    }

    fn update_batch(&mut self, task: usize, batch: &[(Vec<f64>, Target)]) -> Result<f64> {
        self.step_batch(task, batch)
    }
}

/// Round-robin episode scheduling: a new task every episode, each of `k`
/// tasks appearing the same number of times (within one) at every point.
#[derive(Debug, Clone)]
pub struct TaskSchedule {
    next: usize,
    counts: Vec<usize>,
}

impl TaskSchedule {
    pub fn new(k: usize) -> Self {
        TaskSchedule { next: 0, counts: vec![0; k] }
    }

    pub fn next_task(&mut self) -> usize {
        let t = self.next;
        self.counts[t] += 1;
        self.next = (self.next + 1) % self.counts.len();
        t
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// Per-task policy view over a multi-task network.
pub struct MultiTaskPolicy<'a> {
    pub net: &'a MultiTaskNetwork,
    pub task: usize,
}

impl crate::policy::Policy for MultiTaskPolicy<'_> {
    fn action_count(&self) -> usize {
        self.net.spec.action_counts[self.task]
    }

    fn act(&self, _state: &crate::envs::GameState, stack: &ObservationStack) -> Result<usize> {
        Ok(argmax_tie_low(&self.net.forward_task(self.task, stack.as_input())?))
    }
}

/// Multi-task distillation: frozen per-task teachers take turns adding whole
/// episodes to their own buffers; after each `refresh_steps` of accumulated
/// gameplay the student takes `updates_per_refresh` minibatch steps, each
/// minibatch drawn from one randomly chosen task buffer and routed through
/// that task's head.
pub fn multitask_distill(
    teachers: &[DqnAgent],
    games: &[GameId],
    student: &mut MultiTaskStudent,
    config: &DistillConfig,
    seeds: &SeedTree,
) -> Result<Vec<DistillCurveRow>> {
    if teachers.len() != games.len() || teachers.len() != student.net.task_count() {
        return Err(PdError::InvalidArgument(format!(
            "teachers ({}), games ({}) and heads ({}) must align",
            teachers.len(),
            games.len(),
            student.net.task_count()
        )));
    }
    for (i, (teacher, game)) in teachers.iter().zip(games).enumerate() {
        if teacher.action_count() != game.action_count()
            || student.net.spec.action_counts[i] != game.action_count()
        {
            return Err(PdError::ShapeMismatch(format!(
                "task {i}: teacher/head/action-count mismatch for {}",
                game.name()
            )));
        }
    }
    let mut tasks = Vec::with_capacity(games.len());
    for (i, (&game, teacher)) in games.iter().zip(teachers).enumerate() {
        tasks.push(DistillTask {
            game,
            teacher,
            buffer: ReplayMemory::new(config.buffer_capacity, seeds.rng("distill-buffer", i as u64)),
            gen: crate::distill::TeacherDataGen::new(
                game,
                seeds.rng("distill-data", i as u64),
                config.data_epsilon,
                config.max_nullops,
            ),
            probe: build_probe(teacher, game, config, seeds.rng("distill-probe", i as u64))?,
        });
    }

    let mut curve = Vec::new();
    let mut eval_index = 0u64;
    run_distill_loop(student, &mut tasks, config, DataCadence::WholeEpisodes, seeds, |student, tasks, stats| {
        for (task, ctx) in tasks.iter().enumerate() {
            let mut rng = seeds.rng("distill-eval", eval_index);
            eval_index += 1;
            let (eval_score, _) = quick_eval_task(student, task, ctx.game, config, &mut rng)?;
            let agreement = argmax_agreement(student, task, &ctx.probe)?;
            curve.push(DistillCurveRow {
                task,
                teacher_steps_consumed: stats.consumed,
                updates: stats.updates,
                loss_mean: stats.loss_mean,
                eval_score,
                argmax_agreement: agreement,
            });
        }
        Ok(())
    })?;
    Ok(curve)
}

fn quick_eval_task(
    student: &MultiTaskStudent,
    task: usize,
    game: GameId,
    config: &DistillConfig,
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    let mut scores = Vec::with_capacity(config.eval_episodes);
    for _ in 0..config.eval_episodes {
        let mut state = make_game(game, 0);
        let mut stack = reset_with_nullops(&mut state, rng, config.max_nullops);
        let mut total = 0.0;
        while !state.terminal() {
            let action = if rng.gen::<f64>() < config.eval_epsilon {
                rng.gen_range(0..game.action_count())
            } else {
                argmax_tie_low(&student.net.forward_task(task, stack.as_input())?)
            };
            let res = state.step(action)?;
            total += res.reward;
            stack.push(&res.observation);
        }
        scores.push(total);
    }
    Ok(mean_std(&scores))
}

/// Multi-task DQN baseline: the game switches every episode, each task keeps
/// its own replay memory, and Q-learning updates route through the active
/// task's head. The loss is exactly the single-task TD loss.
pub fn multitask_dqn(
    games: &[GameId],
    student: &mut MultiTaskStudent,
    config: &DqnConfig,
    seeds: &SeedTree,
) -> Result<Vec<MtDqnCurveRow>> {
    config.validate()?;
    let k = games.len();
    if k == 0 || k != student.net.task_count() {
        return Err(PdError::InvalidArgument("games and heads must align".into()));
    }
    for (i, game) in games.iter().enumerate() {
        if student.net.spec.action_counts[i] != game.action_count() {
            return Err(PdError::ShapeMismatch(format!(
                "task {i}: head size does not match {}",
                game.name()
            )));
        }
    }

    let mut memories: Vec<ReplayMemory<Transition>> = (0..k)
        .map(|i| ReplayMemory::new(config.memory_capacity, seeds.rng("mtdqn-sample", i as u64)))
        .collect();
    let mut env_rngs: Vec<Rng> = (0..k).map(|i| seeds.rng("mtdqn-env", i as u64)).collect();
    let mut explore_rng = seeds.rng("mtdqn-explore", 0);
    student.trunk_opt.epsilon = config.rmsprop_epsilon;
    for opt in &mut student.head_opts {
        opt.epsilon = config.rmsprop_epsilon;
    }
    let mut target = (student.net.trunk_params.clone(), student.net.head_params.clone());
    let mut schedule = TaskSchedule::new(k);
    let mut curve = Vec::new();

    let mut total_steps = 0usize;
    let mut updates = 0usize;
    let mut eval_index = 0u64;
    let mut next_eval = config.eval_every;

    while total_steps < config.steps {
        let task = schedule.next_task();
        let game = games[task];
        let mut state = make_game(game, 0);
        let mut stack = reset_with_nullops(&mut state, &mut env_rngs[task], config.max_nullops);
        while !state.terminal() && total_steps < config.steps {
            total_steps += 1;
            let epsilon = config.epsilon_at(total_steps);
            let action = if explore_rng.gen::<f64>() < epsilon {
                explore_rng.gen_range(0..game.action_count())
            } else {
                argmax_tie_low(&student.net.forward_task(task, stack.as_input())?)
            };
            let res = state.step(action)?;
            let before = CompactStack::from_stack(&stack);
            stack.push(&res.observation);
            memories[task].push(Transition {
                state: before,
                action,
                reward: res.reward,
                next_state: CompactStack::from_stack(&stack),
                terminal: res.terminal,
            });

            if memories[task].len() >= config.min_history.min(config.memory_capacity)
                && total_steps % config.update_every == 0
            {
                mtdqn_update(student, &mut memories[task], task, config, &target)?;
                updates += 1;
                if updates % config.sync_every == 0 {
                    target = (student.net.trunk_params.clone(), student.net.head_params.clone());
                }
            }

            if total_steps >= next_eval || total_steps == config.steps {
                next_eval += config.eval_every;
                for (t, &g) in games.iter().enumerate() {
                    let mut rng = seeds.rng("mtdqn-eval", eval_index);
                    eval_index += 1;
                    let dcfg = DistillConfig {
                        eval_episodes: config.eval_episodes,
                        eval_epsilon: config.eval_epsilon,
                        max_nullops: config.max_nullops,
                        ..DistillConfig::default()
                    };
                    let (mean, std) = quick_eval_task(student, t, g, &dcfg, &mut rng)?;
                    curve.push(MtDqnCurveRow {
                        env_steps: total_steps,
                        task: t,
                        updates,
                        eval_score_mean: mean,
                        eval_score_std: std,
                        epsilon,
                    });
                }
            }
        }
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy)]
pub struct MtDqnCurveRow {
    pub env_steps: usize,
    pub task: usize,
    pub updates: usize,
    pub eval_score_mean: f64,
    pub eval_score_std: f64,
    pub epsilon: f64,
}

fn mtdqn_update(
    student: &mut MultiTaskStudent,
    memory: &mut ReplayMemory<Transition>,
    task: usize,
    config: &DqnConfig,
    target: &(Vec<f64>, Vec<Vec<f64>>),
) -> Result<f64> {
    let indices = memory.sample_indices(config.batch_size)?;
    let mut trunk_grads = vec![0.0; student.net.trunk_params.len()];
    let mut head_grads = vec![0.0; student.net.head_params[task].len()];
    let mut loss = 0.0;
    let scale = 1.0 / config.batch_size as f64;
    // Target-network view: same spec, frozen parameter segments.
    let target_net = MultiTaskNetwork {
        spec: student.net.spec.clone(),
        trunk_params: target.0.clone(),
        head_params: target.1.clone(),
    };
    let mut input = Vec::new();
    for i in indices {
        let tr = memory.get(i).clone();
        let y = if tr.terminal {
            tr.reward
        } else {
            let q = target_net.forward_task(task, &tr.next_state.to_input())?;
            tr.reward + config.discount * q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        tr.state.expand_into(&mut input);
        let (trace, output) = student.net.forward_task_traced(task, &input)?;
        let diff = output[tr.action] - y;
        loss += diff * diff * scale;
        let mut out_grad = vec![0.0; output.len()];
        out_grad[tr.action] = 2.0 * diff * scale;
        student
            .net
            .backward_task(task, &trace, &out_grad, &mut trunk_grads, &mut head_grads)?;
    }
    rmsprop_step(&mut student.net.trunk_params, &trunk_grads, &mut student.trunk_opt)?;
    rmsprop_step(&mut student.net.head_params[task], &head_grads, &mut student.head_opts[task])?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_spec() -> MultiTaskSpec {
        MultiTaskSpec {
            input_channels: 4,
            input_height: 12,
            input_width: 12,
            conv_layers: vec![
                ConvSpec { filters: 16, kernel: 4, stride: 2 },
                ConvSpec { filters: 32, kernel: 3, stride: 1 },
            ],
            trunk_dense: vec![192],
            head_hidden: 16,
            action_counts: vec![3, 4, 6],
        }
    }

    #[test]
    fn head_routing_and_lengths() {
        let net = MultiTaskNetwork::init(desk_spec(), 5).unwrap();
        let input = vec![0.1; 4 * 12 * 12];
        assert_eq!(net.forward_task(0, &input).unwrap().len(), 3);
        assert_eq!(net.forward_task(2, &input).unwrap().len(), 6);
        assert!(net.forward_task(3, &input).is_err());
    }

    #[test]
    fn zero_parameters_zero_output() {
        let mut net = MultiTaskNetwork::init(desk_spec(), 5).unwrap();
        net.trunk_params.iter_mut().for_each(|v| *v = 0.0);
        net.head_params.iter_mut().flatten().for_each(|v| *v = 0.0);
        let input = vec![0.3; 4 * 12 * 12];
        assert!(net.forward_task(1, &input).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn modifying_one_head_leaves_others_alone() {
        let mut net = MultiTaskNetwork::init(desk_spec(), 9).unwrap();
        let input = vec![0.2; 4 * 12 * 12];
        let before_task0 = net.forward_task(0, &input).unwrap();
        for v in net.head_params[2].iter_mut() {
            *v += 1.0;
        }
        let after_task0 = net.forward_task(0, &input).unwrap();
        assert_eq!(before_task0, after_task0);
    }

    #[test]
    fn shared_fraction_of_desk_architecture() {
        let spec = desk_spec();
        // trunk: conv(16@4x4/2) + conv(32@3x3/1) + dense 192 over 288 units
        assert_eq!(spec.trunk_parameter_count().unwrap(), 1040 + 4640 + 55_488);
        assert_eq!(spec.total_parameter_count().unwrap(), 70_653);
        assert!(spec.shared_fraction().unwrap() >= 0.85);
    }

    #[test]
    fn published_multitask_parameter_counts() {
        // Shared conv trunk + FC1, three 128-unit controllers over action
        // counts summing to 12 (3/3/6 reproduces the published 1,882,668).
        let three = MultiTaskSpec {
            input_channels: 4,
            input_height: 84,
            input_width: 84,
            conv_layers: vec![
                ConvSpec { filters: 32, kernel: 8, stride: 4 },
                ConvSpec { filters: 64, kernel: 4, stride: 2 },
                ConvSpec { filters: 64, kernel: 3, stride: 1 },
            ],
            trunk_dense: vec![512],
            head_hidden: 128,
            action_counts: vec![3, 3, 6],
        };
        assert_eq!(three.total_parameter_count().unwrap(), 1_882_668);

        // Ten-game variant: 4x trunk with action counts summing to 85.
        let ten = MultiTaskSpec {
            input_channels: 4,
            input_height: 84,
            input_width: 84,
            conv_layers: vec![
                ConvSpec { filters: 64, kernel: 8, stride: 4 },
                ConvSpec { filters: 64, kernel: 4, stride: 2 },
                ConvSpec { filters: 64, kernel: 3, stride: 1 },
            ],
            trunk_dense: vec![1500],
            head_hidden: 128,
            action_counts: vec![18, 18, 18, 9, 9, 4, 3, 3, 2, 1],
        };
        assert_eq!(ten.total_parameter_count().unwrap(), 6_756_721);
    }

    #[test]
    fn schedule_is_fair() {
        let mut s = TaskSchedule::new(3);
        for _ in 0..100 {
            s.next_task();
            let max = *s.counts().iter().max().unwrap();
            let min = *s.counts().iter().min().unwrap();
            assert!(max - min <= 1);
        }
        assert_eq!(s.counts(), &[34, 33, 33]);
    }

    #[test]
    fn one_task_network_matches_flat_initialization() {
        let spec = MultiTaskSpec {
            input_channels: 4,
            input_height: 12,
            input_width: 12,
            conv_layers: vec![ConvSpec { filters: 8, kernel: 4, stride: 2 }],
            trunk_dense: vec![24],
            head_hidden: 8,
            action_counts: vec![3],
        };
        let net = MultiTaskNetwork::init(spec.clone(), 77).unwrap();
        let flat = crate::nn::init_parameters(&spec.effective_spec(0).unwrap(), 77).unwrap();
        let mut concat = net.trunk_params.clone();
        concat.extend_from_slice(&net.head_params[0]);
        assert_eq!(concat.len(), flat.len());
        assert!(concat.iter().zip(&flat.values).all(|(a, b)| a.to_bits() == b.to_bits()));

        // And the routed forward equals the flat forward bit for bit.
        let input: Vec<f64> = (0..spec.input_channels * 144).map(|i| (i % 7) as f64 / 7.0).collect();
        let a = net.forward_task(0, &input).unwrap();
        let b = crate::nn::forward(&spec.effective_spec(0).unwrap(), &flat, &input).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn flatten_task_round_trips_through_checkpoint() {
        let net = MultiTaskNetwork::init(desk_spec(), 3).unwrap();
        let (spec, params) = net.flatten_task(1).unwrap();
        assert_eq!(spec.output_units, 4);
        let bytes = crate::nn::write_checkpoint_bytes(&spec, &params).unwrap();
        let (spec2, params2) = crate::nn::read_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(spec, spec2);
        assert!(params.bits_eq(&params2));
    }
}
