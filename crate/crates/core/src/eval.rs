//! Generalization evaluation: diverse start states drawn from reference
//! trajectories, epsilon-greedy rollouts, relative scoring against teachers,
//! and geometric-mean aggregation across tasks.

use rand::Rng as _;
use rand_chacha::rand_core::SeedableRng;
use std::path::Path;

use crate::csvw::{Cell, Table};
use crate::envs::{GameId, GameState, ObservationStack};
use crate::nn::{forward_traced, LayerShape, NetworkSpec, ParameterStore};
use crate::policy::Policy;
use crate::rng::{mix_content_hash, Rng};
use crate::{PdError, Result};

/// A restorable start state plus the seed driving its evaluation episode.
/// Seeds travel with their states, so shuffling the pool cannot change any
/// episode's outcome.
#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub state: GameState,
    pub episode_seed: u64,
}

/// Saved start states sampled from the first 20% of reference episodes.
#[derive(Debug, Clone)]
pub struct StartStatePool {
    pub game_id: GameId,
    pub entries: Vec<PoolEntry>,
}

/// Plays reference episodes with `reference`, snapshots every state that
/// occurred within the first 20% of its episode's length, and samples
/// `n_states` of those snapshots. Rewards accumulated before a snapshot are
/// irrelevant: evaluation starts counting from the restored state.
pub fn build_start_pool(
    game: GameId,
    reference: &dyn Policy,
    n_states: usize,
    rng: &mut Rng,
) -> Result<StartStatePool> {
    if n_states == 0 {
        return Err(PdError::InvalidArgument("n_states must be at least 1".into()));
    }
    let pool_base: u64 = rng.gen();
    let mut candidates: Vec<GameState> = Vec::new();
    let mut episodes = 0usize;
    while candidates.len() < n_states.max(40) * 3 && episodes < n_states.max(40) * 4 {
        episodes += 1;
        let mut state = crate::envs::make_game(game, rng.gen());
        let mut snapshots = vec![state.clone()];
        let mut stack = ObservationStack::from_initial(&state.observe());
        while !state.terminal() {
            let action = reference.act(&state, &stack)?;
            let res = state.step(action).map_err(|e| {
                PdError::Eval(format!("reference policy failed to complete an episode: {e}"))
            })?;
            stack.push(&res.observation);
            snapshots.push(state.clone());
        }
        let cutoff = state.step_count() / 5; // first 20% of this episode
        candidates.extend(snapshots.into_iter().take(cutoff + 1).filter(|s| !s.terminal()));
    }
    if candidates.is_empty() {
        return Err(PdError::Eval("reference episodes yielded no start states".into()));
    }
    // Partial Fisher-Yates: sample without replacement while fresh candidates
    // last, recycling uniformly if more states were requested than exist.
    let mut entries = Vec::with_capacity(n_states);
    let mut picked = 0usize;
    while picked < n_states {
        let live = picked % candidates.len();
        let j = live + rng.gen_range(0..candidates.len() - live);
        candidates.swap(live, j);
        let state = candidates[live].clone();
        let episode_seed = mix_content_hash(pool_base ^ picked as u64, &state.content_bytes());
        entries.push(PoolEntry { state, episode_seed });
        picked += 1;
    }
    Ok(StartStatePool { game_id: game, entries })
}

const POOL_MAGIC: &[u8; 4] = b"PDSP";
const POOL_VERSION: u32 = 1;
const MAX_POOL_ENTRIES: u32 = 1 << 20;

/// Serializes a start pool in the same container style as checkpoints:
/// magic, version, game tag, entry count, then per entry the episode seed
/// and the encoded game state.
pub fn write_pool_bytes(pool: &StartStatePool) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + pool.entries.len() * 64);
    out.extend_from_slice(POOL_MAGIC);
    out.extend_from_slice(&POOL_VERSION.to_le_bytes());
    out.push(match pool.game_id {
        GameId::Catch => 0u8,
        GameId::Avoid => 1,
        GameId::Navigate => 2,
    });
    out.extend_from_slice(&(pool.entries.len() as u32).to_le_bytes());
    for entry in &pool.entries {
        out.extend_from_slice(&entry.episode_seed.to_le_bytes());
        let state = entry.state.encode();
        out.extend_from_slice(&(state.len() as u32).to_le_bytes());
        out.extend_from_slice(&state);
    }
    out
}

/// Parses a pool from untrusted bytes, validating the header, every state,
/// and the game tags.
pub fn read_pool_bytes(bytes: &[u8]) -> Result<StartStatePool> {
    let fail = |msg: String| PdError::Checkpoint(msg);
    if bytes.len() < 13 || &bytes[..4] != POOL_MAGIC {
        return Err(fail("bad start-pool magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != POOL_VERSION {
        return Err(fail(format!("unsupported pool version {version}")));
    }
    let game_id = match bytes[8] {
        0 => GameId::Catch,
        1 => GameId::Avoid,
        2 => GameId::Navigate,
        other => return Err(fail(format!("unknown game tag {other}"))),
    };
    let count = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    if count == 0 || count > MAX_POOL_ENTRIES {
        return Err(fail(format!("entry count {count} out of range")));
    }
    let mut pos = 13usize;
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        if pos + 12 > bytes.len() {
            return Err(fail("truncated pool entry".into()));
        }
        let episode_seed = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
        let len = u32::from_le_bytes(bytes[pos + 8..pos + 12].try_into().unwrap()) as usize;
        pos += 12;
        if pos + len > bytes.len() {
            return Err(fail("truncated pool state".into()));
        }
        let (state, consumed) = GameState::decode(&bytes[pos..pos + len])?;
        if consumed != len {
            return Err(fail("pool state has trailing bytes".into()));
        }
        if state.game_id() != game_id {
            return Err(fail("pool entry from a different game".into()));
        }
        if state.terminal() {
            return Err(fail("pool entry is terminal".into()));
        }
        pos += len;
        entries.push(PoolEntry { state, episode_seed });
    }
    if pos != bytes.len() {
        return Err(fail("trailing bytes after pool entries".into()));
    }
    Ok(StartStatePool { game_id, entries })
}

pub fn save_pool(path: &Path, pool: &StartStatePool) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, write_pool_bytes(pool))?;
    Ok(())
}

pub fn load_pool(path: &Path) -> Result<StartStatePool> {
    read_pool_bytes(&std::fs::read(path)?)
}

/// Evaluation outcome over one pool: per-episode scores (ascending), their
/// mean, and the sample standard deviation.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub mean: f64,
    pub std: f64,
    pub scores: Vec<f64>,
}

/// Plays one episode per start state with epsilon-greedy noise around
/// `policy` and returns the mean score. Reward counting begins at the
/// restored state; the per-game episode cap still applies. The result is
/// invariant to the order of pool entries: episode randomness is keyed to
/// each entry and scores are reduced in sorted order.
pub fn evaluate(
    policy: &dyn Policy,
    pool: &StartStatePool,
    epsilon: f64,
    salt: u64,
) -> Result<EvalOutcome> {
    if policy.action_count() != pool.game_id.action_count() {
        return Err(PdError::Eval(format!(
            "policy has {} actions, {} needs {}",
            policy.action_count(),
            pool.game_id.name(),
            pool.game_id.action_count()
        )));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(PdError::InvalidArgument("epsilon must lie in [0, 1]".into()));
    }
    let mut scores = Vec::with_capacity(pool.entries.len());
    for entry in &pool.entries {
        scores.push(episode_score(policy, entry, epsilon, salt)?);
    }
    finish_scores(scores)
}

/// Parallel variant of `evaluate`: episodes over a frozen policy are
/// independent, and per-entry seeding plus the sorted reduction make the
/// result bit-identical to the sequential path. Thread count is capped by
/// the `PD_THREADS` environment variable.
pub fn evaluate_parallel(
    policy: &(dyn Policy + Sync),
    pool: &StartStatePool,
    epsilon: f64,
    salt: u64,
) -> Result<EvalOutcome> {
    if policy.action_count() != pool.game_id.action_count() {
        return Err(PdError::Eval("policy/pool action count mismatch".into()));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(PdError::InvalidArgument("epsilon must lie in [0, 1]".into()));
    }
    let threads = std::env::var("PD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, pool.entries.len().max(1));
    if threads <= 1 {
        return evaluate(policy, pool, epsilon, salt);
    }
    let chunk = pool.entries.len().div_ceil(threads);
    let results: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        pool.entries
            .chunks(chunk)
            .map(|entries| {
                scope.spawn(move || {
                    entries
                        .iter()
                        .map(|e| episode_score(policy, e, epsilon, salt))
                        .collect::<Result<Vec<f64>>>()
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .map(|h| h.join().expect("evaluation thread panicked"))
            .collect()
    });
    let mut scores = Vec::with_capacity(pool.entries.len());
    for part in results {
        scores.extend(part?);
    }
    finish_scores(scores)
}

fn finish_scores(mut scores: Vec<f64>) -> Result<EvalOutcome> {
    scores.sort_by(f64::total_cmp);
    let (mean, std) = crate::dqn::mean_std(&scores);
    Ok(EvalOutcome { mean, std, scores })
}

fn episode_score(policy: &dyn Policy, entry: &PoolEntry, epsilon: f64, salt: u64) -> Result<f64> {
    let mut rng = Rng::seed_from_u64(mix_content_hash(entry.episode_seed, &salt.to_le_bytes()));
    let mut state = entry.state.clone();
    let mut stack = ObservationStack::from_initial(&state.observe());
    let mut total = 0.0;
    while !state.terminal() {
        let action = if rng.gen::<f64>() < epsilon {
            rng.gen_range(0..policy.action_count())
        } else {
            policy.act(&state, &stack)?
        };
        let res = state.step(action)?;
        total += res.reward;
        stack.push(&res.observation);
    }
    Ok(total)
}

/// Student score as a percentage of the teacher score, reported to one
/// decimal. Undefined for nonpositive teacher scores.
pub fn relative_score(score: f64, teacher_score: f64) -> Result<f64> {
    if !(teacher_score > 0.0) {
        return Err(PdError::Eval(format!(
            "relative score undefined for teacher score {teacher_score}"
        )));
    }
    Ok((1000.0 * score / teacher_score).round() / 10.0)
}

/// Geometric mean of positive percentages, in the same percent units.
pub fn geometric_mean(percents: &[f64]) -> Result<f64> {
    if percents.is_empty() {
        return Err(PdError::InvalidArgument("geometric mean of nothing".into()));
    }
    let mut log_sum = 0.0;
    for &p in percents {
        if !(p > 0.0) {
            return Err(PdError::InvalidArgument(format!(
                "geometric mean needs positive entries, got {p}"
            )));
        }
        log_sum += p.ln();
    }
    Ok((log_sum / percents.len() as f64).exp())
}

/// Which activations to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSelector {
    FirstConv,
    LastDense,
}

impl LayerSelector {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "first_conv" => Ok(LayerSelector::FirstConv),
            "last_dense" => Ok(LayerSelector::LastDense),
            other => Err(PdError::InvalidArgument(format!("unknown layer selector `{other}`"))),
        }
    }
}

/// Dumps post-rectifier activations of the selected layer for each sample as
/// CSV rows `(task_id, sample_id, activation...)`. Embedding or plotting the
/// dump is out of scope here.
pub fn export_activations(
    spec: &NetworkSpec,
    params: &ParameterStore,
    samples: &[(String, ObservationStack)],
    selector: LayerSelector,
) -> Result<Table> {
    let layers = spec.layers()?;
    let index = match selector {
        LayerSelector::FirstConv => layers
            .iter()
            .position(|l| matches!(l, LayerShape::Conv { .. }))
            .ok_or_else(|| PdError::InvalidArgument("network has no conv layer".into()))?,
        LayerSelector::LastDense => layers
            .iter()
            .rposition(|l| matches!(l, LayerShape::Dense { relu: true, .. }))
            .ok_or_else(|| PdError::InvalidArgument("network has no hidden dense layer".into()))?,
    };
    let width = layers[index].output_len();
    let mut header = vec!["task_id".to_string(), "sample_id".to_string()];
    header.extend((0..width).map(|i| format!("a{i}")));
    let mut table = Table::new(header);
    for (sample_id, (task, stack)) in samples.iter().enumerate() {
        let trace = forward_traced(spec, params, stack.as_input())?;
        let mut row = Vec::with_capacity(width + 2);
        row.push(Cell::Str(task.clone()));
        row.push(Cell::UInt(sample_id as u64));
        row.extend(trace.layer_output(index).iter().map(|&v| Cell::Float(v)));
        table.push(row);
    }
    Ok(table)
}

/// Report row: one evaluated task. `relative_pct` is absent when the
/// reference score is nonpositive (the ratio is undefined there).
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub experiment_id: String,
    pub task_id: String,
    pub score: f64,
    pub teacher_score: f64,
    pub relative_pct: Option<f64>,
}

/// Writes the per-task report plus the trailing geometric-mean aggregate row.
pub fn write_report_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    let mut table = Table::new(["experiment_id", "task_id", "score", "teacher_score", "relative_pct"]);
    for row in rows {
        table.push(vec![
            Cell::Str(row.experiment_id.clone()),
            Cell::Str(row.task_id.clone()),
            Cell::Fixed(row.score, 6),
            Cell::Fixed(row.teacher_score, 6),
            row.relative_pct.map_or(Cell::Str(String::new()), |p| Cell::Fixed(p, 1)),
        ]);
    }
    if !rows.is_empty() {
        // The aggregate is undefined when any relative score is absent or
        // nonpositive; report it as blank rather than failing the run.
        let percents: Option<Vec<f64>> = rows.iter().map(|r| r.relative_pct).collect();
        let gm_cell = match percents.map(|p| geometric_mean(&p)) {
            Some(Ok(gm)) => Cell::Fixed(gm, 1),
            _ => Cell::Str(String::new()),
        };
        table.push(vec![
            Cell::Str(rows[0].experiment_id.clone()),
            Cell::Str("geometric_mean".into()),
            Cell::Str(String::new()),
            Cell::Str(String::new()),
            gm_cell,
        ]);
    }
    table.write(path)
}
