//! Avoid: dodge two falling objects, or shoot them down.
//!
//! Actions: 0 = left, 1 = stay, 2 = right, 3 = fire. Every survived step is
//! worth +0.1; an object landing on the player ends the episode at -1; `fire`
//! destroys the nearest object (Manhattan distance) for +0.5. Objects fall
//! one row every second step and respawn at the top in a fresh column, never
//! sharing a column with the other object.

use super::{derive_value, Observation, FRAME};

const OBJECT_PIXEL: f64 = 0.6;
const PLAYER_PIXEL: f64 = 1.0;
const BOTTOM: i32 = FRAME as i32 - 1;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Faller {
    row: i32, // may start above the visible frame
    col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Avoid {
    player_col: usize,
    objects: [Faller; 2],
    fall_tick: u8,
    layout_seed: u64,
    spawn_counter: u64,
}

impl Avoid {
    pub fn new(seed: u64) -> Self {
        let col0 = (derive_value(seed, 0) % FRAME as u64) as usize;
        let mut col1 = (derive_value(seed, 1) % FRAME as u64) as usize;
        if col1 == col0 {
            col1 = (col1 + 1) % FRAME;
        }
        Avoid {
            player_col: 3 + (derive_value(seed, 2) % 6) as usize,
            objects: [Faller { row: 0, col: col0 }, Faller { row: -5, col: col1 }],
            fall_tick: 0,
            layout_seed: seed,
            spawn_counter: 3,
        }
    }

    fn respawn_col(&mut self, other_col: usize) -> usize {
        let mut col = (derive_value(self.layout_seed, self.spawn_counter) % FRAME as u64) as usize;
        self.spawn_counter += 1;
        if col == other_col {
            col = (col + 1) % FRAME;
        }
        col
    }

    fn nearest_object(&self) -> usize {
        let dist = |o: &Faller| {
            let dr = (BOTTOM - o.row).unsigned_abs() as usize;
            let dc = o.col.abs_diff(self.player_col);
            dr + dc
        };
        let d0 = dist(&self.objects[0]);
        let d1 = dist(&self.objects[1]);
        if d1 < d0 || (d1 == d0 && self.objects[1].row > self.objects[0].row) {
            1
        } else {
            0
        }
    }

    pub fn step(&mut self, action: usize) -> (f64, bool) {
        let mut reward = 0.0;
        match action {
            0 => self.player_col = self.player_col.saturating_sub(1),
            2 => self.player_col = (self.player_col + 1).min(FRAME - 1),
            3 => {
                let hit = self.nearest_object();
                let other = self.objects[1 - hit].col;
                self.objects[hit] = Faller { row: 0, col: self.respawn_col(other) };
                reward += 0.5;
            }
            _ => {}
        }
        self.fall_tick += 1;
        if self.fall_tick == 2 {
            self.fall_tick = 0;
            for i in 0..2 {
                self.objects[i].row += 1;
                if self.objects[i].row >= BOTTOM {
                    if self.objects[i].col == self.player_col {
                        return (-1.0, true);
                    }
                    let other = self.objects[1 - i].col;
                    self.objects[i] = Faller { row: 0, col: self.respawn_col(other) };
                }
            }
        }
        (reward + 0.1, false)
    }

    pub fn render(&self) -> Observation {
        let mut obs = Observation::blank();
        for o in &self.objects {
            if o.row >= 0 {
                obs.set(o.row as usize, o.col, OBJECT_PIXEL);
            }
        }
        obs.set(BOTTOM as usize, self.player_col, PLAYER_PIXEL);
        obs
    }

    /// Firing every step clears threats before they can land, and the +0.5
    /// bonus dominates every movement alternative.
    pub fn scripted_action(&self) -> usize {
        3
    }

    pub fn content_bytes(&self, out: &mut Vec<u8>) {
        out.push(self.player_col as u8);
        for o in &self.objects {
            out.extend_from_slice(&o.row.to_le_bytes());
            out.push(o.col as u8);
        }
        out.push(self.fall_tick);
        out.extend_from_slice(&self.layout_seed.to_le_bytes());
        out.extend_from_slice(&self.spawn_counter.to_le_bytes());
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        self.content_bytes(out);
    }

    pub fn decode(r: &mut super::ByteReader) -> crate::Result<Self> {
        let player_col = r.bounded_u8("player_col", FRAME as u8)? as usize;
        let mut objects = [Faller { row: 0, col: 0 }; 2];
        for o in &mut objects {
            let row = r.i32("object row")?;
            if !(-(FRAME as i32) * 2..FRAME as i32).contains(&row) {
                return Err(crate::PdError::Checkpoint(format!("object row {row} out of range")));
            }
            let col = r.bounded_u8("object col", FRAME as u8)? as usize;
            *o = Faller { row, col };
        }
        let fall_tick = r.bounded_u8("fall_tick", 2)?;
        let layout_seed = r.u64("layout_seed")?;
        let spawn_counter = r.u64("spawn_counter")?;
        Ok(Avoid { player_col, objects, fall_tick, layout_seed, spawn_counter })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{make_game, GameId};

    #[test]
    fn fire_destroys_and_pays() {
        let mut g = make_game(GameId::Avoid, 3);
        let res = g.step(3).unwrap();
        assert!((res.reward - 0.6).abs() < 1e-12);
        assert!(!res.terminal);
    }

    #[test]
    fn survival_pays_a_tenth_per_step() {
        let mut g = make_game(GameId::Avoid, 11);
        let res = g.step(1).unwrap();
        assert!((res.reward - 0.1).abs() < 1e-12);
    }

    #[test]
    fn always_firing_survives_to_the_cap() {
        for seed in 0..40 {
            let mut g = make_game(GameId::Avoid, seed);
            let mut total = 0.0;
            while !g.terminal() {
                total += g.step(3).unwrap().reward;
            }
            assert_eq!(g.step_count(), GameId::Avoid.episode_cap(), "seed {seed}");
            assert!((total - 36.0).abs() < 1e-9, "seed {seed}: total {total}");
        }
    }

    #[test]
    fn standing_still_eventually_gets_hit() {
        // With no dodging and no firing, some seed lands an object on the
        // player before the cap.
        let mut hit = false;
        for seed in 0..60 {
            let mut g = make_game(GameId::Avoid, seed);
            let mut last = 0.0;
            while !g.terminal() {
                last = g.step(1).unwrap().reward;
            }
            if last == -1.0 {
                hit = true;
                break;
            }
        }
        assert!(hit);
    }
}
