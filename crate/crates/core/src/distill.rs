//! Single-task policy distillation: a frozen teacher generates (observation
//! stack, Q-vector) samples into a bounded buffer while a student network
//! regresses onto them under a selectable loss.

use rand::Rng as _;

use crate::dqn::DqnAgent;
use crate::envs::{make_game, reset_with_nullops, CompactStack, GameId, GameState, ObservationStack};
use crate::nn::{
    argmax_tie_low, backward_traced, forward, forward_traced, init_parameters, loss_mse, loss_nll,
    rmsprop_step, softmax, softmax_temperature, NetworkSpec, ParameterStore, RmsPropState,
};
use crate::replay::ReplayMemory;
use crate::rng::{Rng, SeedTree};
use crate::{PdError, Result};

/// One element of the distillation dataset: the observation stack and the
/// teacher's full unnormalized Q-vector for it. `generation` counts teacher
/// snapshots in online mode (always 0 offline).
#[derive(Debug, Clone)]
pub struct TeacherSample {
    pub state: CompactStack,
    pub teacher_q: Vec<f64>,
    pub generation: u32,
}

/// FIFO buffer of teacher samples with uniform sampling.
pub type DistillBuffer = ReplayMemory<TeacherSample>;

/// The three distillation losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Nll,
    Kl,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Mse, LossKind::Nll, LossKind::Kl];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mse" => Ok(LossKind::Mse),
            "nll" => Ok(LossKind::Nll),
            "kl" => Ok(LossKind::Kl),
            other => Err(PdError::InvalidArgument(format!("unknown loss kind `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Nll => "nll",
            LossKind::Kl => "kl",
        }
    }
}

/// Distillation schedule and optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillConfig {
    pub loss_kind: LossKind,
    /// Teacher-side softmax temperature; only the KL loss reads it.
    pub tau: f64,
    /// Teacher steps generated per refresh cycle.
    pub refresh_steps: usize,
    /// Student minibatch updates after each refresh.
    pub updates_per_refresh: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub buffer_capacity: usize,
    /// Total teacher steps to consume over the whole run.
    pub total_budget: usize,
    pub data_epsilon: f64,
    pub max_nullops: usize,
    pub eval_episodes: usize,
    pub eval_epsilon: f64,
    /// Held-out probe samples per task for argmax-agreement diagnostics.
    pub probe_samples: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            loss_kind: LossKind::Kl,
            tau: 0.01,
            refresh_steps: 1_000,
            updates_per_refresh: 500,
            batch_size: 32,
            learning_rate: 5e-4,
            buffer_capacity: 50_000,
            total_budget: 15_000,
            data_epsilon: 0.05,
            max_nullops: 8,
            eval_episodes: 20,
            eval_epsilon: 0.05,
            probe_samples: 256,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(PdError::InvalidArgument("tau must be positive".into()));
        }
        for (name, v) in [
            ("refresh_steps", self.refresh_steps),
            ("batch_size", self.batch_size),
            ("buffer_capacity", self.buffer_capacity),
            ("total_budget", self.total_budget),
            ("eval_episodes", self.eval_episodes),
            ("probe_samples", self.probe_samples),
        ] {
            if v == 0 {
                return Err(PdError::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0) {
            return Err(PdError::InvalidArgument("learning_rate must be positive".into()));
        }
        for (name, v) in [("data_epsilon", self.data_epsilon), ("eval_epsilon", self.eval_epsilon)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PdError::InvalidArgument(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Streams teacher gameplay into a buffer: null-op episode starts, 5%
/// exploration, one `(stack, q)` sample per control step. Resumable, so a
/// refresh cycle can suspend mid-episode and continue later.
pub struct TeacherDataGen {
    game: GameId,
    state: GameState,
    stack: ObservationStack,
    rng: Rng,
    epsilon: f64,
    max_nullops: usize,
    needs_reset: bool,
    pub generation: u32,
}

impl TeacherDataGen {
    pub fn new(game: GameId, rng: Rng, epsilon: f64, max_nullops: usize) -> Self {
        let state = make_game(game, 0);
        let stack = ObservationStack::from_initial(&state.observe());
        TeacherDataGen {
            game,
            state,
            stack,
            rng,
            epsilon,
            max_nullops,
            needs_reset: true,
            generation: 0,
        }
    }

    /// One control step: build the sample and act epsilon-greedily on the
    /// teacher's Q-values. Returns the sample and whether the episode ended.
    pub fn next_sample(&mut self, teacher: &DqnAgent) -> Result<(TeacherSample, bool)> {
        if self.needs_reset {
            self.stack = reset_with_nullops(&mut self.state, &mut self.rng, self.max_nullops);
            self.needs_reset = false;
        }
        let q = teacher.q_values(self.stack.as_input())?;
        let action = if self.rng.gen::<f64>() < self.epsilon {
            self.rng.gen_range(0..self.game.action_count())
        } else {
            argmax_tie_low(&q)
        };
        let sample = TeacherSample {
            state: CompactStack::from_stack(&self.stack),
            teacher_q: q,
            generation: self.generation,
        };
        let res = self.state.step(action)?;
        self.stack.push(&res.observation);
        if res.terminal {
            self.needs_reset = true;
        }
        Ok((sample, res.terminal))
    }

    fn step_once(&mut self, teacher: &DqnAgent, buffer: &mut DistillBuffer) -> Result<bool> {
        let (sample, terminal) = self.next_sample(teacher)?;
        buffer.push(sample);
        Ok(terminal)
    }

    /// Exactly `n_steps` control steps, suspending mid-episode if needed.
    pub fn generate(&mut self, teacher: &DqnAgent, buffer: &mut DistillBuffer, n_steps: usize) -> Result<()> {
        for _ in 0..n_steps {
            self.step_once(teacher, buffer)?;
        }
        Ok(())
    }

    /// One whole episode; returns the number of control steps played.
    pub fn generate_episode(&mut self, teacher: &DqnAgent, buffer: &mut DistillBuffer) -> Result<usize> {
        let mut steps = 0;
        loop {
            let terminal = self.step_once(teacher, buffer)?;
            steps += 1;
            if terminal {
                return Ok(steps);
            }
        }
    }
}

/// Plays `n_steps` of teacher gameplay into `buffer` (fresh episodes, null-op
/// starts, 5% default exploration). The teacher is read-only throughout.
pub fn generate_teacher_data(
    teacher: &DqnAgent,
    game: GameId,
    buffer: &mut DistillBuffer,
    n_steps: usize,
    rng: Rng,
) -> Result<()> {
    if n_steps == 0 {
        return Err(PdError::InvalidArgument("n_steps must be positive".into()));
    }
    let mut gen = TeacherDataGen::new(game, rng, 0.05, 8);
    gen.generate(teacher, buffer, n_steps)
}

/// Per-sample training target, derived from the stored teacher Q-vector.
#[derive(Debug, Clone)]
pub enum Target {
    /// Raw Q-values (MSE).
    Q(Vec<f64>),
    /// Teacher's best action (NLL), lowest-index tie-break.
    Best(usize),
    /// Sharpened teacher distribution (KL at the configured temperature).
    Dist(Vec<f64>),
}

pub(crate) fn make_target(sample: &TeacherSample, loss: LossKind, tau: f64) -> Result<Target> {
    Ok(match loss {
        LossKind::Mse => Target::Q(sample.teacher_q.clone()),
        LossKind::Nll => Target::Best(argmax_tie_low(&sample.teacher_q)),
        LossKind::Kl => Target::Dist(softmax_temperature(&sample.teacher_q, tau)?),
    })
}

/// Loss and gradient w.r.t. the student Q-vector for one sample.
pub(crate) fn target_loss(target: &Target, student_q: &[f64]) -> Result<(f64, Vec<f64>)> {
    match target {
        Target::Q(teacher_q) => loss_mse(teacher_q, student_q),
        Target::Best(best) => loss_nll(student_q, *best),
        Target::Dist(p) => {
            let s = softmax(student_q)?;
            if p.len() != s.len() {
                return Err(PdError::ShapeMismatch("target/student length mismatch".into()));
            }
            let mut loss = 0.0;
            let mut grad = vec![0.0; s.len()];
            for i in 0..s.len() {
                if p[i] > 0.0 {
                    loss += p[i] * (p[i].ln() - s[i].ln());
                }
                grad[i] = s[i] - p[i];
            }
            if loss < 0.0 && loss > -1e-12 {
                loss = 0.0;
            }
            Ok((loss, grad))
        }
    }
}

/// Draws a minibatch and materializes per-sample (input, target) pairs.
pub(crate) fn draw_batch(
    buffer: &mut DistillBuffer,
    batch_size: usize,
    loss: LossKind,
    tau: f64,
) -> Result<Vec<(Vec<f64>, Target)>> {
    let indices = buffer.sample_indices(batch_size)?;
    indices
        .into_iter()
        .map(|i| {
            let sample = buffer.get(i);
            Ok((sample.state.to_input(), make_target(sample, loss, tau)?))
        })
        .collect()
}

/// Student network plus its optimizer state.
#[derive(Debug, Clone)]
pub struct Student {
    pub spec: NetworkSpec,
    pub params: ParameterStore,
    pub optimizer: RmsPropState,
}

impl Student {
    pub fn new(spec: NetworkSpec, init_seed: u64, learning_rate: f64) -> Result<Self> {
        let params = init_parameters(&spec, init_seed)?;
        let optimizer = RmsPropState::new(params.len(), learning_rate);
        Ok(Student { spec, params, optimizer })
    }
}

/// Anything the distillation engine can train: a plain student network or a
/// multi-task network routed through one head per task.
pub(crate) trait StudentOps {
    fn action_count(&self, task: usize) -> usize;
    fn student_q(&self, task: usize, input: &[f64]) -> Result<Vec<f64>>;
    /// One optimizer step from a minibatch; returns the mean sample loss.
    fn update_batch(&mut self, task: usize, batch: &[(Vec<f64>, Target)]) -> Result<f64>;
}

impl StudentOps for Student {
    fn action_count(&self, _task: usize) -> usize {
        self.spec.output_units
    }

    fn student_q(&self, _task: usize, input: &[f64]) -> Result<Vec<f64>> {
        forward(&self.spec, &self.params, input)
    }

    fn update_batch(&mut self, _task: usize, batch: &[(Vec<f64>, Target)]) -> Result<f64> {
        let mut grads = vec![0.0; self.params.len()];
        let mut loss_sum = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for (input, target) in batch {
            let trace = forward_traced(&self.spec, &self.params, input)?;
            let (loss, out_grad) = target_loss(target, trace.output())?;
            loss_sum += loss;
            let scaled: Vec<f64> = out_grad.iter().map(|g| g * scale).collect();
            backward_traced(&self.spec, &self.params, &trace, &scaled, &mut grads)?;
        }
        rmsprop_step(&mut self.params.values, &grads, &mut self.optimizer)?;
        Ok(loss_sum * scale)
    }
}

/// Samples a batch from `buffer` and applies one optimizer step to the
/// student under the configured loss. The buffer's teacher data is read-only.
pub fn distill_update(student: &mut Student, buffer: &mut DistillBuffer, config: &DistillConfig) -> Result<f64> {
    let batch = draw_batch(buffer, config.batch_size, config.loss_kind, config.tau)?;
    student.update_batch(0, &batch)
}

/// One curve row per refresh cycle.
#[derive(Debug, Clone, Copy)]
pub struct DistillCurveRow {
    pub task: usize,
    pub teacher_steps_consumed: usize,
    pub updates: usize,
    pub loss_mean: f64,
    pub eval_score: f64,
    pub argmax_agreement: f64,
}

/// How the engine paces data generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DataCadence {
    /// Generate exactly `refresh_steps` per cycle, suspending mid-episode.
    ExactSteps,
    /// Tasks take turns contributing whole episodes until the accumulated
    /// step count crosses `refresh_steps`.
    WholeEpisodes,
}

pub(crate) struct DistillTask<'a> {
    pub game: GameId,
    pub teacher: &'a DqnAgent,
    pub buffer: DistillBuffer,
    pub gen: TeacherDataGen,
    pub probe: Vec<TeacherSample>,
}

/// Fraction of probe samples where student and teacher argmax agree.
pub(crate) fn argmax_agreement<S: StudentOps>(student: &S, task: usize, probe: &[TeacherSample]) -> Result<f64> {
    if probe.is_empty() {
        return Ok(0.0);
    }
    let mut agree = 0usize;
    for sample in probe {
        let q = student.student_q(task, &sample.state.to_input())?;
        if argmax_tie_low(&q) == argmax_tie_low(&sample.teacher_q) {
            agree += 1;
        }
    }
    Ok(agree as f64 / probe.len() as f64)
}

/// Builds the held-out probe set for one task from its own data stream.
pub(crate) fn build_probe(
    teacher: &DqnAgent,
    game: GameId,
    config: &DistillConfig,
    rng: Rng,
) -> Result<Vec<TeacherSample>> {
    use rand_chacha::rand_core::SeedableRng;
    let mut buffer = ReplayMemory::new(config.probe_samples, Rng::seed_from_u64(0));
    let mut gen = TeacherDataGen::new(game, rng, config.data_epsilon, config.max_nullops);
    gen.generate(teacher, &mut buffer, config.probe_samples)?;
    Ok(buffer.iter().cloned().collect())
}

/// The shared distillation loop. Teachers are frozen; the student receives
/// one optimizer step per minibatch, each minibatch drawn from a single
/// (randomly chosen) task buffer. The per-cycle hook evaluates the student
/// and appends curve rows.
pub(crate) fn run_distill_loop<S: StudentOps>(
    student: &mut S,
    tasks: &mut [DistillTask<'_>],
    config: &DistillConfig,
    cadence: DataCadence,
    seeds: &SeedTree,
    mut on_cycle: impl FnMut(&S, &mut [DistillTask<'_>], CycleStats) -> Result<()>,
) -> Result<()> {
    config.validate()?;
    let k = tasks.len();
    if k == 0 {
        return Err(PdError::InvalidArgument("no tasks to distill".into()));
    }
    for (t, task) in tasks.iter().enumerate() {
        if student.action_count(t) != task.game.action_count() {
            return Err(PdError::ShapeMismatch(format!(
                "task {t}: student head has {} outputs, {} needs {}",
                student.action_count(t),
                task.game.name(),
                task.game.action_count()
            )));
        }
    }
    let mut pick_rng = seeds.rng("distill-pick", 0);
    let mut consumed = 0usize;
    let mut updates = 0usize;
    let mut accumulated = 0usize;
    let mut schedule = crate::multitask::TaskSchedule::new(k);

    while consumed < config.total_budget {
        match cadence {
            DataCadence::ExactSteps => {
                let t = schedule.next_task();
                let task = &mut tasks[t];
                task.gen.generate(task.teacher, &mut task.buffer, config.refresh_steps)?;
                consumed += config.refresh_steps;
                accumulated += config.refresh_steps;
            }
            DataCadence::WholeEpisodes => {
                let t = schedule.next_task();
                let task = &mut tasks[t];
                let steps = task.gen.generate_episode(task.teacher, &mut task.buffer)?;
                consumed += steps;
                accumulated += steps;
            }
        }
        while accumulated >= config.refresh_steps {
            accumulated -= config.refresh_steps;
            let mut loss_sum = 0.0;
            for _ in 0..config.updates_per_refresh {
                let t = pick_rng.gen_range(0..k);
                let batch = draw_batch(&mut tasks[t].buffer, config.batch_size, config.loss_kind, config.tau)?;
                loss_sum += student.update_batch(t, &batch)?;
            }
            updates += config.updates_per_refresh;
            let loss_mean = if config.updates_per_refresh > 0 {
                loss_sum / config.updates_per_refresh as f64
            } else {
                0.0
            };
            on_cycle(student, tasks, CycleStats { consumed, updates, loss_mean })?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CycleStats {
    pub consumed: usize,
    pub updates: usize,
    pub loss_mean: f64,
}

/// Trains a single-task student from a frozen teacher: alternates
/// `refresh_steps` of teacher gameplay with `updates_per_refresh` minibatch
/// updates until the teacher-step budget is spent.
pub fn train_student(
    teacher: &DqnAgent,
    game: GameId,
    student_spec: &NetworkSpec,
    config: &DistillConfig,
    seeds: &SeedTree,
) -> Result<(Student, Vec<DistillCurveRow>)> {
    config.validate()?;
    if student_spec.output_units != game.action_count() {
        return Err(PdError::ShapeMismatch(format!(
            "student has {} outputs, {} needs {}",
            student_spec.output_units,
            game.name(),
            game.action_count()
        )));
    }
    let mut student = Student::new(student_spec.clone(), seeds.seed("student-init", 0), config.learning_rate)?;
    let mut tasks = vec![DistillTask {
        game,
        teacher,
        buffer: ReplayMemory::new(config.buffer_capacity, seeds.rng("distill-buffer", 0)),
        gen: TeacherDataGen::new(game, seeds.rng("distill-data", 0), config.data_epsilon, config.max_nullops),
        probe: build_probe(teacher, game, config, seeds.rng("distill-probe", 0))?,
    }];

    let mut curve = Vec::new();
    let mut eval_index = 0u64;
    run_distill_loop(&mut student, &mut tasks, config, DataCadence::ExactSteps, seeds, |student, tasks, stats| {
        let mut rng = seeds.rng("distill-eval", eval_index);
        eval_index += 1;
        let (eval_score, _) = crate::dqn::quick_eval(
            &student.spec,
            &student.params,
            game,
            config.eval_episodes,
            config.eval_epsilon,
            config.max_nullops,
            &mut rng,
        )?;
        let agreement = argmax_agreement(student, 0, &tasks[0].probe)?;
        curve.push(DistillCurveRow {
            task: 0,
            teacher_steps_consumed: stats.consumed,
            updates: stats.updates,
            loss_mean: stats.loss_mean,
            eval_score,
            argmax_agreement: agreement,
        });
        Ok(())
    })?;
    Ok((student, curve))
}

/// Pipelined single-task distillation: a producer thread plays the frozen
/// teacher and streams samples over a channel while the consumer drains them
/// into the buffer between update blocks. Faster on spare cores but NOT
/// bit-deterministic (the drain points depend on thread timing), so the
/// acceptance suite never uses it.
pub fn train_student_pipelined(
    teacher: &DqnAgent,
    game: GameId,
    student_spec: &NetworkSpec,
    config: &DistillConfig,
    seeds: &SeedTree,
) -> Result<Student> {
    config.validate()?;
    if student_spec.output_units != game.action_count() {
        return Err(PdError::ShapeMismatch(format!(
            "student has {} outputs, {} needs {}",
            student_spec.output_units,
            game.name(),
            game.action_count()
        )));
    }
    let mut student = Student::new(
        student_spec.clone(),
        seeds.seed("student-init", 0),
        config.learning_rate,
    )?;
    let mut buffer = ReplayMemory::new(config.buffer_capacity, seeds.rng("distill-buffer", 0));
    let (sender, receiver) = std::sync::mpsc::sync_channel::<TeacherSample>(config.refresh_steps.max(64));
    let data_rng = seeds.rng("distill-data", 0);
    let budget = config.total_budget;

    std::thread::scope(|scope| -> Result<()> {
        let producer = scope.spawn(move || -> Result<()> {
            let mut gen = TeacherDataGen::new(game, data_rng, config.data_epsilon, config.max_nullops);
            for _ in 0..budget {
                let (sample, _) = gen.next_sample(teacher)?;
                if sender.send(sample).is_err() {
                    break; // consumer finished early
                }
            }
            Ok(())
        });

        let mut received = 0usize;
        let mut since_update = 0usize;
        while received < budget {
            // Block for the next sample, then drain whatever else is ready.
            match receiver.recv() {
                Ok(sample) => {
                    buffer.push(sample);
                    received += 1;
                    since_update += 1;
                }
                Err(_) => break,
            }
            while let Ok(sample) = receiver.try_recv() {
                buffer.push(sample);
                received += 1;
                since_update += 1;
            }
            while since_update >= config.refresh_steps {
                since_update -= config.refresh_steps;
                for _ in 0..config.updates_per_refresh {
                    let batch = draw_batch(&mut buffer, config.batch_size, config.loss_kind, config.tau)?;
                    student.update_batch(0, &batch)?;
                }
            }
        }
        producer.join().expect("producer thread panicked")
    })?;
    Ok(student)
}

/// One compression-study row: a student architecture, its parameter budget
/// relative to the teacher, and its evaluation outcome.
#[derive(Debug, Clone)]
pub struct CompressionRow {
    pub label: String,
    pub student_params: usize,
    pub teacher_params: usize,
    pub param_ratio_pct: f64,
    pub student_score: f64,
    pub teacher_score: f64,
    pub relative_pct: f64,
}

/// Trains one KL student per spec in `scale_set` and reports parameter
/// ratios and relative scores against the same teacher.
pub fn compression_study(
    teacher: &DqnAgent,
    game: GameId,
    scale_set: &[(String, NetworkSpec)],
    config: &DistillConfig,
    pool: &crate::eval::StartStatePool,
    teacher_score: f64,
    seeds: &SeedTree,
) -> Result<(Vec<CompressionRow>, Vec<Student>)> {
    let teacher_params = crate::nn::count_parameters(&teacher.spec)?;
    let mut rows = Vec::new();
    let mut students = Vec::new();
    for (i, (label, spec)) in scale_set.iter().enumerate() {
        let subtree = seeds.subtree("compression", i as u64);
        let kl_config = DistillConfig { loss_kind: LossKind::Kl, ..config.clone() };
        let (student, _) = train_student(teacher, game, spec, &kl_config, &subtree)?;
        let student_params = crate::nn::count_parameters(spec)?;
        let policy = crate::policy::NetPolicy { spec: &student.spec, params: &student.params };
        let outcome = crate::eval::evaluate(&policy, pool, config.eval_epsilon, 17)?;
        rows.push(CompressionRow {
            label: label.clone(),
            student_params,
            teacher_params,
            param_ratio_pct: 100.0 * student_params as f64 / teacher_params as f64,
            student_score: outcome.mean,
            teacher_score,
            relative_pct: crate::eval::relative_score(outcome.mean, teacher_score)?,
        });
        students.push(student);
    }
    Ok((rows, students))
}

/// Writes a buffer snapshot for offline inspection: one row per sample with
/// the teacher Q-values and the flattened newest frame.
pub fn export_buffer_snapshot(buffer: &DistillBuffer, path: &std::path::Path) -> Result<()> {
    use crate::csvw::{Cell, Table};
    let mut header = vec!["sample".to_string(), "generation".to_string()];
    let q_len = buffer.iter().next().map_or(0, |s| s.teacher_q.len());
    header.extend((0..q_len).map(|i| format!("q{i}")));
    let mut table = Table::new(header);
    for (i, sample) in buffer.iter().enumerate() {
        let mut row = vec![Cell::UInt(i as u64), Cell::UInt(sample.generation as u64)];
        row.extend(sample.teacher_q.iter().map(|&q| Cell::Float(q)));
        table.push(row);
    }
    table.write(path)
}

