//! Navigate: a fixed walled gridworld with a goal, a pit, and a dig action.
//!
//! Actions: 0 = up, 1 = down, 2 = left, 3 = right, 4 = noop, 5 = dig.
//! Reaching the goal pays +1, stepping into the pit -1, anything else costs
//! -0.01. Walking into a wall wastes the step. `dig` clears diggable walls in
//! the four adjacent cells; the border is bedrock. The start cell is seeded
//! from the west side of the map.

use super::{derive_value, Observation, FRAME};

const WALL_PIXEL: f64 = 0.45;
const GOAL_PIXEL: f64 = 0.8;
const AGENT_PIXEL: f64 = 1.0;
const PIT_PIXEL: f64 = 0.2;

const GOAL: (usize, usize) = (3, 8);
const PIT: (usize, usize) = (9, 2);
// Playable area: rows/cols 2..=9 inside a two-cell bedrock border.
const ACTIVE_MIN: usize = 2;
const ACTIVE_MAX: usize = 9;
// Interior wall: column 6, rows 4..=6, with open passages above and below.
const WALL_COL: usize = 6;
const WALL_ROWS: std::ops::RangeInclusive<usize> = 4..=6;

const STEP_COST: f64 = -0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Floor,
    Wall,    // diggable
    Bedrock, // border, permanent
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Navigate {
    cells: Vec<Cell>,
    agent: (usize, usize),
}

fn idx(row: usize, col: usize) -> usize {
    row * FRAME + col
}

fn base_map() -> Vec<Cell> {
    let mut cells = vec![Cell::Bedrock; FRAME * FRAME];
    for row in ACTIVE_MIN..=ACTIVE_MAX {
        for col in ACTIVE_MIN..=ACTIVE_MAX {
            cells[idx(row, col)] = Cell::Floor;
        }
    }
    for row in WALL_ROWS {
        cells[idx(row, WALL_COL)] = Cell::Wall;
    }
    cells
}

fn start_cells() -> Vec<(usize, usize)> {
    let map = base_map();
    let mut cells = Vec::new();
    for row in ACTIVE_MIN..=ACTIVE_MAX {
        for col in ACTIVE_MIN..=ACTIVE_MAX {
            if map[idx(row, col)] == Cell::Floor && (row, col) != PIT && (row, col) != GOAL {
                cells.push((row, col));
            }
        }
    }
    cells
}

impl Navigate {
    pub fn new(seed: u64) -> Self {
        let starts = start_cells();
        let agent = starts[(derive_value(seed, 0) % starts.len() as u64) as usize];
        Navigate { cells: base_map(), agent }
    }

    fn neighbor(&self, action: usize) -> Option<(usize, usize)> {
        let (r, c) = self.agent;
        match action {
            0 => r.checked_sub(1).map(|r| (r, c)),
            1 => Some((r + 1, c)),
            2 => c.checked_sub(1).map(|c| (r, c)),
            3 => Some((r, c + 1)),
            _ => None,
        }
    }

    pub fn step(&mut self, action: usize) -> (f64, bool) {
        match action {
            0..=3 => {
                let (r, c) = self.neighbor(action).unwrap_or(self.agent);
                if r >= FRAME || c >= FRAME || self.cells[idx(r, c)] != Cell::Floor {
                    return (STEP_COST, false);
                }
                self.agent = (r, c);
                if self.agent == GOAL {
                    return (1.0, true);
                }
                if self.agent == PIT {
                    return (-1.0, true);
                }
                (STEP_COST, false)
            }
            5 => {
                for a in 0..4 {
                    if let Some((r, c)) = self.neighbor(a) {
                        if r < FRAME && c < FRAME && self.cells[idx(r, c)] == Cell::Wall {
                            self.cells[idx(r, c)] = Cell::Floor;
                        }
                    }
                }
                (STEP_COST, false)
            }
            _ => (STEP_COST, false), // noop
        }
    }

    pub fn render(&self) -> Observation {
        let mut obs = Observation::blank();
        for row in 0..FRAME {
            for col in 0..FRAME {
                if self.cells[idx(row, col)] != Cell::Floor {
                    obs.set(row, col, WALL_PIXEL);
                }
            }
        }
        obs.set(GOAL.0, GOAL.1, GOAL_PIXEL);
        obs.set(PIT.0, PIT.1, PIT_PIXEL);
        obs.set(self.agent.0, self.agent.1, AGENT_PIXEL);
        obs
    }

    /// Cost to enter a cell on the way to the goal: 1 for floor, 2 for a
    /// diggable wall (dig, then move). Pit and bedrock are impassable.
    fn enter_cost(&self, r: usize, c: usize) -> Option<usize> {
        if (r, c) == PIT {
            return None;
        }
        match self.cells[idx(r, c)] {
            Cell::Floor => Some(1),
            Cell::Wall => Some(2),
            Cell::Bedrock => None,
        }
    }

    /// Shortest-path field toward the goal under `enter_cost`, by iterative
    /// relaxation over the 144-cell grid.
    fn distance_field(&self) -> Vec<usize> {
        const INF: usize = usize::MAX / 4;
        let mut dist = vec![INF; FRAME * FRAME];
        dist[idx(GOAL.0, GOAL.1)] = 0;
        let mut changed = true;
        while changed {
            changed = false;
            for r in 1..FRAME - 1 {
                for c in 1..FRAME - 1 {
                    let here = dist[idx(r, c)];
                    if here == INF {
                        continue;
                    }
                    // Relax into each neighbor: moving from neighbor to here
                    // costs enter_cost(here).
                    if let Some(cost) = self.enter_cost(r, c) {
                        for (nr, nc) in [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)] {
                            let through = here + cost;
                            if through < dist[idx(nr, nc)] {
                                dist[idx(nr, nc)] = through;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        dist
    }

    /// Greedy descent of the distance field; digs when the best next cell is
    /// still a wall.
    pub fn scripted_action(&self) -> usize {
        let dist = self.distance_field();
        let mut best: Option<(usize, usize)> = None; // (total cost, action)
        for action in 0..4 {
            if let Some((r, c)) = self.neighbor(action) {
                if r >= FRAME || c >= FRAME {
                    continue;
                }
                if let Some(cost) = self.enter_cost(r, c) {
                    let total = dist[idx(r, c)].saturating_add(cost);
                    if best.map_or(true, |(b, _)| total < b) {
                        best = Some((total, action));
                    }
                }
            }
        }
        match best {
            Some((_, action)) => {
                let (r, c) = self.neighbor(action).unwrap();
                if self.cells[idx(r, c)] == Cell::Wall {
                    5
                } else {
                    action
                }
            }
            None => 4,
        }
    }

    pub fn content_bytes(&self, out: &mut Vec<u8>) {
        out.push(self.agent.0 as u8);
        out.push(self.agent.1 as u8);
        for cell in &self.cells {
            out.push(match cell {
                Cell::Floor => 0,
                Cell::Wall => 1,
                Cell::Bedrock => 2,
            });
        }
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        self.content_bytes(out);
    }

    pub fn decode(r: &mut super::ByteReader) -> crate::Result<Self> {
        let row = r.bounded_u8("agent row", FRAME as u8)? as usize;
        let col = r.bounded_u8("agent col", FRAME as u8)? as usize;
        let mut cells = Vec::with_capacity(FRAME * FRAME);
        for _ in 0..FRAME * FRAME {
            cells.push(match r.bounded_u8("cell", 3)? {
                0 => Cell::Floor,
                1 => Cell::Wall,
                _ => Cell::Bedrock,
            });
        }
        if cells[idx(row, col)] != Cell::Floor {
            return Err(crate::PdError::Checkpoint("agent inside a wall".into()));
        }
        Ok(Navigate { cells, agent: (row, col) })
    }
}
