//! Episode trace export: a step log plus a sidecar of raw frames, the raw
//! material for reference-trajectory construction.

use std::path::Path;

use super::{GameState, Observation};
use crate::csvw::{Cell, Table};
use crate::Result;

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub step: usize,
    pub action: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// A completed episode: per-step rows and every frame, starting with the
/// initial observation (frame index 0 precedes step 1).
#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub rows: Vec<TraceRow>,
    pub frames: Vec<Observation>,
}

/// Plays `state` to termination with `policy` and records the episode.
pub fn record_episode(
    state: &mut GameState,
    mut policy: impl FnMut(&GameState) -> usize,
) -> Result<EpisodeTrace> {
    let mut rows = Vec::new();
    let mut frames = vec![state.observe()];
    let mut step = 0;
    while !state.terminal() {
        step += 1;
        let action = policy(state);
        let res = state.step(action)?;
        rows.push(TraceRow { step, action, reward: res.reward, terminal: res.terminal });
        frames.push(res.observation);
    }
    Ok(EpisodeTrace { rows, frames })
}

/// Writes `<stem>_trace.csv` (step, action, reward, terminal) and
/// `<stem>_frames.csv` (frame index plus the flattened pixels).
pub fn write_trace_csv(trace: &EpisodeTrace, dir: &Path, stem: &str) -> Result<()> {
    let mut steps = Table::new(["step", "action", "reward", "terminal"]);
    for row in &trace.rows {
        steps.push(vec![
            Cell::UInt(row.step as u64),
            Cell::UInt(row.action as u64),
            Cell::Float(row.reward),
            Cell::UInt(row.terminal as u64),
        ]);
    }
    steps.write(&dir.join(format!("{stem}_trace.csv")))?;

    let width = trace.frames.first().map_or(0, |f| f.pixels.len());
    let mut header = vec!["frame".to_string()];
    header.extend((0..width).map(|i| format!("p{i}")));
    let mut frames = Table::new(header);
    for (i, frame) in trace.frames.iter().enumerate() {
        let mut row = Vec::with_capacity(width + 1);
        row.push(Cell::UInt(i as u64));
        row.extend(frame.pixels.iter().map(|&p| Cell::Float(p)));
        frames.push(row);
    }
    frames.write(&dir.join(format!("{stem}_frames.csv")))?;
    Ok(())
}
