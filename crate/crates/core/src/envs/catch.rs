//! Catch: one object falls, the paddle on the bottom row catches it.
//!
//! Actions: 0 = left, 1 = stay, 2 = right. The object drops one row per step
//! and lands on step 11; the paddle is three pixels wide and drop columns are
//! central, so drops stay reachable even after null-op starts. Catching pays
//! +1, missing -1, and the episode ends at the bottom row.

use super::{derive_value, Observation, FRAME};

const OBJECT_PIXEL: f64 = 0.6;
const PADDLE_PIXEL: f64 = 1.0;
const BOTTOM: usize = FRAME - 1;
const PADDLE_SPEED: usize = 1;
const CATCH_RADIUS: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Catch {
    object_row: usize,
    object_col: usize,
    paddle_col: usize,
}

impl Catch {
    pub fn new(seed: u64) -> Self {
        // Central drop columns and a near-center paddle start keep every
        // drop reachable, even after null-op starts.
        Catch {
            object_row: 0,
            object_col: 2 + (derive_value(seed, 0) % 8) as usize,
            paddle_col: 4 + (derive_value(seed, 1) % 4) as usize,
        }
    }

    pub fn step(&mut self, action: usize) -> (f64, bool) {
        match action {
            0 => self.paddle_col = self.paddle_col.saturating_sub(PADDLE_SPEED),
            2 => self.paddle_col = (self.paddle_col + PADDLE_SPEED).min(FRAME - 1),
            _ => {}
        }
        self.object_row += 1;
        if self.object_row == BOTTOM {
            let caught = self.object_col.abs_diff(self.paddle_col) <= CATCH_RADIUS;
            return (if caught { 1.0 } else { -1.0 }, true);
        }
        (0.0, false)
    }

    pub fn render(&self) -> Observation {
        let mut obs = Observation::blank();
        obs.set(self.object_row, self.object_col, OBJECT_PIXEL);
        let lo = self.paddle_col.saturating_sub(CATCH_RADIUS);
        let hi = (self.paddle_col + CATCH_RADIUS).min(FRAME - 1);
        for col in lo..=hi {
            obs.set(BOTTOM, col, PADDLE_PIXEL);
        }
        obs
    }

    /// Optimal play: slide toward the drop column until it is under the
    /// paddle.
    pub fn scripted_action(&self) -> usize {
        if self.object_col > self.paddle_col + CATCH_RADIUS {
            2
        } else if self.object_col + CATCH_RADIUS < self.paddle_col {
            0
        } else {
            1
        }
    }

    pub fn content_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&[
            self.object_row as u8,
            self.object_col as u8,
            self.paddle_col as u8,
        ]);
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        self.content_bytes(out);
    }

    pub fn decode(r: &mut super::ByteReader) -> crate::Result<Self> {
        let object_row = r.bounded_u8("object_row", FRAME as u8)? as usize;
        let object_col = r.bounded_u8("object_col", FRAME as u8)? as usize;
        let paddle_col = r.bounded_u8("paddle_col", FRAME as u8)? as usize;
        Ok(Catch { object_row, object_col, paddle_col })
    }
}
