//! Deterministic, seedable toy pixel games with discrete actions.
//!
//! Three games stand in for a diverse task suite at desk scale. They share a
//! 12x12 grayscale frame and a 4-frame observation stack but have different
//! action sets (3 / 4 / 6), reward scales, and dynamics:
//!
//! * `catch` - a single object falls one row every second step; the paddle on
//!   the bottom row moves left/right and scores +1 for catching it, -1 for
//!   missing. Episodes cap at 24 steps.
//! * `avoid` - two objects fall; the player earns +0.1 per survived step,
//!   loses with -1 when an object lands on it, and can `fire` to destroy the
//!   nearest object for +0.5. Episodes cap at 60 steps.
//! * `navigate` - a fixed walled gridworld with a goal (+1), a pit (-1), a
//!   -0.01 step cost, and a `dig` action that clears adjacent interior
//!   walls. Episodes cap at 80 steps.
//!
//! All transitions are pure functions of (seed, action sequence).

mod avoid;
mod catch;
mod navigate;
mod trace;

pub use trace::{record_episode, write_trace_csv, EpisodeTrace, TraceRow};

use rand::Rng as _;

use crate::rng::Rng;
use crate::{PdError, Result};

/// Frame edge length in pixels.
pub const FRAME: usize = 12;
/// Pixels per frame.
pub const FRAME_LEN: usize = FRAME * FRAME;
/// Frames per observation stack.
pub const STACK: usize = 4;
/// Flattened observation-stack length, the network input size.
pub const STACK_LEN: usize = STACK * FRAME_LEN;

/// One grayscale frame, row-major, intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub pixels: Vec<f64>,
}

impl Observation {
    pub fn blank() -> Self {
        Observation { pixels: vec![0.0; FRAME_LEN] }
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * FRAME + col] = value;
    }
}

/// The last four frames, oldest first, stored contiguously so the stack can
/// be fed to a network without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationStack {
    data: Vec<f64>,
    frame_len: usize,
}

impl ObservationStack {
    /// Episode start: the initial frame replicated four times.
    pub fn from_initial(obs: &Observation) -> Self {
        let frame_len = obs.pixels.len();
        let mut data = Vec::with_capacity(STACK * frame_len);
        for _ in 0..STACK {
            data.extend_from_slice(&obs.pixels);
        }
        ObservationStack { data, frame_len }
    }

    /// Appends the newest frame, dropping the oldest.
    pub fn push(&mut self, obs: &Observation) {
        assert_eq!(obs.pixels.len(), self.frame_len, "frame size changed mid-episode");
        self.data.copy_within(self.frame_len.., 0);
        let tail = self.data.len() - self.frame_len;
        self.data[tail..].copy_from_slice(&obs.pixels);
    }

    /// Network input: frames as channels, oldest first.
    pub fn as_input(&self) -> &[f64] {
        &self.data
    }

    pub fn frame(&self, index: usize) -> &[f64] {
        &self.data[index * self.frame_len..(index + 1) * self.frame_len]
    }
}

/// Compactly stored observation stack. Game pixels all sit on a 1/20 grid,
/// so a byte per pixel reconstructs the exact f64 values; replay memories
/// hold tens of thousands of stacks and shrink 8x this way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactStack {
    levels: Vec<u8>,
}

const PIXEL_LEVELS: f64 = 20.0;

impl CompactStack {
    pub fn from_stack(stack: &ObservationStack) -> Self {
        let levels = stack
            .as_input()
            .iter()
            .map(|&p| {
                let level = (p * PIXEL_LEVELS).round();
                debug_assert!((level / PIXEL_LEVELS - p).abs() < 1e-12, "pixel {p} off-grid");
                level as u8
            })
            .collect();
        CompactStack { levels }
    }

    /// Reconstructs the flat f64 input, bit-identical to the stored stack.
    pub fn expand_into(&self, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.levels.iter().map(|&v| v as f64 / PIXEL_LEVELS));
    }

    pub fn to_input(&self) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.levels.len());
        self.expand_into(&mut buf);
        buf
    }
}

/// Step outcome: the new frame, the reward, and the terminal flag.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
}

/// Task identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameId {
    Catch,
    Avoid,
    Navigate,
}

impl GameId {
    pub const ALL: [GameId; 3] = [GameId::Catch, GameId::Avoid, GameId::Navigate];

    pub fn parse(name: &str) -> Result<GameId> {
        match name {
            "catch" => Ok(GameId::Catch),
            "avoid" => Ok(GameId::Avoid),
            "navigate" => Ok(GameId::Navigate),
            other => Err(PdError::UnknownGame(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GameId::Catch => "catch",
            GameId::Avoid => "avoid",
            GameId::Navigate => "navigate",
        }
    }

    pub fn action_count(&self) -> usize {
        match self {
            GameId::Catch => 3,
            GameId::Avoid => 4,
            GameId::Navigate => 6,
        }
    }

    pub fn episode_cap(&self) -> usize {
        match self {
            GameId::Catch => 24,
            GameId::Avoid => 60,
            GameId::Navigate => 80,
        }
    }

    /// The designated no-effect action used for null-op starts.
    pub fn nullop_action(&self) -> usize {
        match self {
            GameId::Catch | GameId::Avoid => 1, // stay
            GameId::Navigate => 4,              // noop
        }
    }

    /// Reward bounds declared by each game, used by sanity tests.
    pub fn reward_bounds(&self) -> (f64, f64) {
        match self {
            GameId::Catch => (-1.0, 1.0),
            GameId::Avoid => (-1.0, 0.6),
            GameId::Navigate => (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum GameInner {
    Catch(catch::Catch),
    Avoid(avoid::Avoid),
    Navigate(navigate::Navigate),
}

/// Full game state: task id, per-game internals, step counter, terminal flag.
/// Cloning snapshots the entire episode; a clone replays identically.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    game_id: GameId,
    step_count: usize,
    terminal: bool,
    inner: GameInner,
}

/// Creates a game in its seeded initial state.
pub fn make_game(game_id: GameId, seed: u64) -> GameState {
    let inner = match game_id {
        GameId::Catch => GameInner::Catch(catch::Catch::new(seed)),
        GameId::Avoid => GameInner::Avoid(avoid::Avoid::new(seed)),
        GameId::Navigate => GameInner::Navigate(navigate::Navigate::new(seed)),
    };
    GameState { game_id, step_count: 0, terminal: false, inner }
}

/// Parses the id string first; unknown ids are rejected.
pub fn make_game_named(name: &str, seed: u64) -> Result<GameState> {
    Ok(make_game(GameId::parse(name)?, seed))
}

impl GameState {
    pub fn game_id(&self) -> GameId {
        self.game_id
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn terminal(&self) -> bool {
        self.terminal
    }

    pub fn action_count(&self) -> usize {
        self.game_id.action_count()
    }

    /// Renders the current frame.
    pub fn observe(&self) -> Observation {
        match &self.inner {
            GameInner::Catch(g) => g.render(),
            GameInner::Avoid(g) => g.render(),
            GameInner::Navigate(g) => g.render(),
        }
    }

    /// Applies one action. Rejects out-of-range actions and stepping a
    /// terminal episode; enforces the per-game episode cap.
    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.terminal {
            return Err(PdError::TerminalStep);
        }
        let count = self.action_count();
        if action >= count {
            return Err(PdError::ActionOutOfRange { action, count });
        }
        let (reward, game_over) = match &mut self.inner {
            GameInner::Catch(g) => g.step(action),
            GameInner::Avoid(g) => g.step(action),
            GameInner::Navigate(g) => g.step(action),
        };
        self.step_count += 1;
        self.terminal = game_over || self.step_count >= self.game_id.episode_cap();
        Ok(StepResult {
            observation: self.observe(),
            reward,
            terminal: self.terminal,
        })
    }

    /// Reference near-optimal action for the current state, used to build
    /// evaluation start pools and score ceilings.
    pub fn scripted_action(&self) -> usize {
        match &self.inner {
            GameInner::Catch(g) => g.scripted_action(),
            GameInner::Avoid(g) => g.scripted_action(),
            GameInner::Navigate(g) => g.scripted_action(),
        }
    }

    /// Stable byte encoding of the full state, used to key per-start-state
    /// evaluation streams.
    pub fn content_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.push(match self.game_id {
            GameId::Catch => 0u8,
            GameId::Avoid => 1,
            GameId::Navigate => 2,
        });
        out.extend_from_slice(&(self.step_count as u64).to_le_bytes());
        out.push(self.terminal as u8);
        match &self.inner {
            GameInner::Catch(g) => g.content_bytes(&mut out),
            GameInner::Avoid(g) => g.content_bytes(&mut out),
            GameInner::Navigate(g) => g.content_bytes(&mut out),
        }
        out
    }
}

/// Starts a fresh episode seeded from `rng`, applies `k ~ Uniform{0..=max_nullops}`
/// no-effect actions, and returns the resulting observation stack.
pub fn reset_with_nullops(
    state: &mut GameState,
    rng: &mut Rng,
    max_nullops: usize,
) -> ObservationStack {
    *state = make_game(state.game_id, rng.gen::<u64>());
    let mut stack = ObservationStack::from_initial(&state.observe());
    if max_nullops == 0 {
        return stack;
    }
    let k = rng.gen_range(0..=max_nullops);
    let nullop = state.game_id.nullop_action();
    for _ in 0..k {
        match state.step(nullop) {
            Ok(res) => {
                stack.push(&res.observation);
                if res.terminal {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    stack
}

/// Bounds-checked little-endian reader shared by the game-state codecs.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> crate::Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(PdError::Checkpoint(format!("truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self, what: &str) -> crate::Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn bounded_u8(&mut self, what: &str, bound: u8) -> crate::Result<u8> {
        let v = self.u8(what)?;
        if v >= bound {
            return Err(PdError::Checkpoint(format!("{what} {v} out of range (< {bound})")));
        }
        Ok(v)
    }

    pub fn i32(&mut self, what: &str) -> crate::Result<i32> {
        Ok(i32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn u64(&mut self, what: &str) -> crate::Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

impl GameState {
    /// Serializes the full state (game id, counters, internals) so saved
    /// snapshots replay exactly.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32);
        out.push(match self.game_id {
            GameId::Catch => 0u8,
            GameId::Avoid => 1,
            GameId::Navigate => 2,
        });
        out.extend_from_slice(&(self.step_count as u32).to_le_bytes());
        out.push(self.terminal as u8);
        match &self.inner {
            GameInner::Catch(g) => g.encode(&mut out),
            GameInner::Avoid(g) => g.encode(&mut out),
            GameInner::Navigate(g) => g.encode(&mut out),
        }
        out
    }

    /// Decodes one state from untrusted bytes, validating every field, and
    /// returns it with the number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> crate::Result<(GameState, usize)> {
        let mut r = ByteReader::new(bytes);
        let game_id = match r.u8("game id")? {
            0 => GameId::Catch,
            1 => GameId::Avoid,
            2 => GameId::Navigate,
            other => return Err(PdError::Checkpoint(format!("unknown game tag {other}"))),
        };
        let step_count = u32::from_le_bytes(
            r.take(4, "step count")?.try_into().unwrap(),
        ) as usize;
        if step_count > game_id.episode_cap() {
            return Err(PdError::Checkpoint(format!(
                "step count {step_count} above the {} cap",
                game_id.name()
            )));
        }
        let terminal = match r.u8("terminal flag")? {
            0 => false,
            1 => true,
            other => return Err(PdError::Checkpoint(format!("bad terminal flag {other}"))),
        };
        let inner = match game_id {
            GameId::Catch => GameInner::Catch(catch::Catch::decode(&mut r)?),
            GameId::Avoid => GameInner::Avoid(avoid::Avoid::decode(&mut r)?),
            GameId::Navigate => GameInner::Navigate(navigate::Navigate::decode(&mut r)?),
        };
        let consumed = r.consumed();
        Ok((GameState { game_id, step_count, terminal, inner }, consumed))
    }
}

// Derives in-episode pseudo-random values (spawn columns, start cells) from a
// layout seed and a counter, keeping game state plain data.
fn derive_value(seed: u64, counter: u64) -> u64 {
    let mut z = seed ^ counter.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x243f_6a88);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
