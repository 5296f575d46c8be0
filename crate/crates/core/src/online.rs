//! Online distillation: while a DQN teacher is still learning, its best
//! evaluation snapshot to date feeds the distillation buffer, and a student
//! network tracks that best policy continuously.

use crate::distill::{draw_batch, DistillConfig, Student, StudentOps, TeacherDataGen};
use crate::dqn::{act_epsilon_greedy, dqn_update, quick_eval, DqnAgent, DqnConfig};
use crate::envs::{make_game, reset_with_nullops, CompactStack, GameId};
use crate::nn::{NetworkSpec, ParameterStore};
use crate::replay::ReplayMemory;
use crate::rng::SeedTree;
use crate::{PdError, Result};

/// Running record of the best evaluation score and the parameters that
/// achieved it. Snapshots require strict improvement, so the recorded
/// best-score sequence is strictly increasing.
#[derive(Debug, Clone)]
pub struct BestPolicyTracker {
    pub best_score: f64,
    pub best_snapshot: Option<ParameterStore>,
    /// `(env_steps, score)` at each snapshot event.
    pub history: Vec<(usize, f64)>,
}

impl Default for BestPolicyTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl BestPolicyTracker {
    pub fn new() -> Self {
        BestPolicyTracker {
            best_score: f64::NEG_INFINITY,
            best_snapshot: None,
            history: Vec::new(),
        }
    }

    /// Snapshots the agent's parameters if `eval_score` strictly improves on
    /// the best so far. Returns whether a snapshot was taken.
    pub fn maybe_snapshot(&mut self, agent: &DqnAgent, env_steps: usize, eval_score: f64) -> bool {
        if !eval_score.is_finite() {
            return false;
        }
        if eval_score > self.best_score {
            self.best_score = eval_score;
            self.best_snapshot = Some(agent.params.clone());
            self.history.push((env_steps, eval_score));
            true
        } else {
            false
        }
    }
}

/// One logged block of the online run, directly plottable.
#[derive(Debug, Clone, Copy)]
pub struct OnlineRow {
    pub env_steps: usize,
    pub dqn_eval: f64,
    pub best_so_far: f64,
    pub student_eval: f64,
    pub snapshot_event: bool,
}

/// Output of an online run: the combined curve, the final DQN agent, the
/// student, the snapshot tracker, plus the distillation buffer and every
/// snapshot's parameters so sample provenance can be audited.
pub struct OnlineOutcome {
    pub rows: Vec<OnlineRow>,
    pub agent: DqnAgent,
    pub student: Student,
    pub tracker: BestPolicyTracker,
    pub buffer: ReplayMemory<crate::distill::TeacherSample>,
    pub all_snapshots: Vec<ParameterStore>,
}

/// Runs DQN training with periodic evaluation; each strict improvement
/// freezes a new teacher snapshot, the data generator switches to it, and the
/// student keeps distilling from the (FIFO-aging, never flushed) buffer. The
/// student's optimizer only ever sees distillation gradients.
pub fn online_distill(
    game: GameId,
    teacher_spec: &NetworkSpec,
    student_spec: &NetworkSpec,
    dqn_config: &DqnConfig,
    distill_config: &DistillConfig,
    seeds: &SeedTree,
) -> Result<OnlineOutcome> {
    dqn_config.validate()?;
    distill_config.validate()?;
    for (name, spec) in [("teacher", teacher_spec), ("student", student_spec)] {
        if spec.output_units != game.action_count() {
            return Err(PdError::ShapeMismatch(format!(
                "{name} has {} outputs, {} needs {}",
                spec.output_units,
                game.name(),
                game.action_count()
            )));
        }
    }

    let mut agent = DqnAgent::new(
        teacher_spec.clone(),
        seeds.seed("dqn-init", 0),
        dqn_config.learning_rate,
        dqn_config.discount,
    )?;
    agent.optimizer.epsilon = dqn_config.rmsprop_epsilon;
    let mut memory = ReplayMemory::new(dqn_config.memory_capacity, seeds.rng("dqn-sample", 0));
    let mut env_rng = seeds.rng("dqn-env", 0);
    let mut explore_rng = seeds.rng("dqn-explore", 0);

    let mut student = Student::new(
        student_spec.clone(),
        seeds.seed("student-init", 0),
        distill_config.learning_rate,
    )?;
    let mut buffer = ReplayMemory::new(distill_config.buffer_capacity, seeds.rng("distill-buffer", 0));
    let mut datagen = TeacherDataGen::new(
        game,
        seeds.rng("distill-data", 0),
        distill_config.data_epsilon,
        distill_config.max_nullops,
    );
    // The generator plays the frozen best snapshot, not the live learner.
    let mut frozen_teacher: Option<DqnAgent> = None;

    let mut tracker = BestPolicyTracker::new();
    let mut all_snapshots: Vec<ParameterStore> = Vec::new();
    let mut rows = Vec::new();
    let mut state = make_game(game, 0);
    let mut stack = reset_with_nullops(&mut state, &mut env_rng, dqn_config.max_nullops);
    let mut updates = 0usize;
    let mut eval_index = 0u64;

    for step in 1..=dqn_config.steps {
        agent.epsilon = dqn_config.epsilon_at(step);
        let action = act_epsilon_greedy(&agent, &stack, &mut explore_rng)?;
        let res = state.step(action)?;
        let before = CompactStack::from_stack(&stack);
        stack.push(&res.observation);
        memory.push(crate::dqn::Transition {
            state: before,
            action,
            reward: res.reward,
            next_state: CompactStack::from_stack(&stack),
            terminal: res.terminal,
        });
        if res.terminal {
            stack = reset_with_nullops(&mut state, &mut env_rng, dqn_config.max_nullops);
        }
        if memory.len() >= dqn_config.min_history && step % dqn_config.update_every == 0 {
            dqn_update(&mut agent, &mut memory, dqn_config.batch_size)?;
            updates += 1;
            if updates % dqn_config.sync_every == 0 {
                agent.sync_target();
            }
        }

        if step % dqn_config.eval_every == 0 || step == dqn_config.steps {
            let mut rng = seeds.rng("online-dqn-eval", eval_index);
            let (dqn_eval, _) = quick_eval(
                &agent.spec,
                &agent.params,
                game,
                dqn_config.eval_episodes,
                dqn_config.eval_epsilon,
                dqn_config.max_nullops,
                &mut rng,
            )?;
            let snapshot_event = tracker.maybe_snapshot(&agent, step, dqn_eval);
            if snapshot_event {
                let mut frozen = agent.clone();
                frozen.params = tracker.best_snapshot.clone().expect("snapshot just stored");
                all_snapshots.push(frozen.params.clone());
                frozen_teacher = Some(frozen);
                datagen.generation = tracker.history.len() as u32;
            }

            // Distill block: refresh the buffer from the frozen best policy,
            // then train the student.
            if let Some(teacher) = &frozen_teacher {
                datagen.generate(teacher, &mut buffer, distill_config.refresh_steps)?;
                for _ in 0..distill_config.updates_per_refresh {
                    let batch = draw_batch(
                        &mut buffer,
                        distill_config.batch_size,
                        distill_config.loss_kind,
                        distill_config.tau,
                    )?;
                    student.update_batch(0, &batch)?;
                }
            }

            let mut rng = seeds.rng("online-student-eval", eval_index);
            eval_index += 1;
            let (student_eval, _) = quick_eval(
                &student.spec,
                &student.params,
                game,
                dqn_config.eval_episodes,
                dqn_config.eval_epsilon,
                dqn_config.max_nullops,
                &mut rng,
            )?;
            rows.push(OnlineRow {
                env_steps: step,
                dqn_eval,
                best_so_far: tracker.best_score,
                student_eval,
                snapshot_event,
            });
        }
    }

    Ok(OnlineOutcome { rows, agent, student, tracker, buffer, all_snapshots })
}
