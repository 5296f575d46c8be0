//! Deterministic action policies. Exploration noise is layered on top by the
//! caller (training loops and the evaluator own the epsilon draws).

use crate::envs::{GameState, ObservationStack};
use crate::nn::{argmax_tie_low, forward, NetworkSpec, ParameterStore};
use crate::Result;

/// A deterministic mapping from game state to action. Implementations see
/// both the raw state (scripted oracles) and the frame stack (networks).
pub trait Policy {
    fn action_count(&self) -> usize;
    fn act(&self, state: &GameState, stack: &ObservationStack) -> Result<usize>;
}

/// Greedy policy over a network's Q-values, lowest-index tie-break.
pub struct NetPolicy<'a> {
    pub spec: &'a NetworkSpec,
    pub params: &'a ParameterStore,
}

impl Policy for NetPolicy<'_> {
    fn action_count(&self) -> usize {
        self.spec.output_units
    }

    fn act(&self, _state: &GameState, stack: &ObservationStack) -> Result<usize> {
        let q = forward(self.spec, self.params, stack.as_input())?;
        Ok(argmax_tie_low(&q))
    }
}

/// The hand-coded near-optimal reference policy for a game.
pub struct ScriptedPolicy {
    pub action_count: usize,
}

impl ScriptedPolicy {
    pub fn for_game(game: crate::envs::GameId) -> Self {
        ScriptedPolicy { action_count: game.action_count() }
    }
}

impl Policy for ScriptedPolicy {
    fn action_count(&self) -> usize {
        self.action_count
    }

    fn act(&self, state: &GameState, _stack: &ObservationStack) -> Result<usize> {
        Ok(state.scripted_action())
    }
}
