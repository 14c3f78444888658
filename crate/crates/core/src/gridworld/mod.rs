//! Deterministic grid worlds: layouts, dynamics, enumeration and rendering.
//!
//! Coordinates put `(0, 0)` at the top-left corner; `Up` decreases `y`.
//! Every layout is surrounded by a border of walls, so moves never leave
//! the grid.

mod config;
mod dynamics;
mod render;
mod spec;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{EnvConfig, VariantName};
pub use dynamics::{enumerate_states, rollout, step, DEFAULT_STATE_CAP};
pub(crate) use dynamics::{rollout_unchecked, step_unchecked as dynamics_step};
pub use render::{parse_ascii, render, render_with_size, Observation, DEFAULT_RESOLUTION};
pub use spec::{layouts, BoxMode, EnvState, GridParts, GridSpec, Variant};

/// Number of primitive actions available in every environment.
pub const NUM_ACTIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Neighbouring cell in direction `a`. Callers guarantee the result stays
    /// on the grid (layouts always have a wall border).
    pub fn shifted(self, a: Action) -> Cell {
        match a {
            Action::Up => Cell::new(self.x, self.y - 1),
            Action::Down => Cell::new(self.x, self.y + 1),
            Action::Left => Cell::new(self.x - 1, self.y),
            Action::Right => Cell::new(self.x + 1, self.y),
            Action::Stay => self,
        }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

// Row-major order keeps enumerations readable when dumped.
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl From<(usize, usize)> for Cell {
    fn from((x, y): (usize, usize)) -> Self {
        Cell::new(x, y)
    }
}

impl From<Cell> for (usize, usize) {
    fn from(c: Cell) -> Self {
        (c.x, c.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Primitive actions. The declaration order is the fixed tie-breaking order
/// used by planners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn letter(self) -> char {
        match self {
            Action::Up => 'U',
            Action::Down => 'D',
            Action::Left => 'L',
            Action::Right => 'R',
            Action::Stay => 'S',
        }
    }

    pub fn from_letter(c: char) -> Option<Action> {
        Self::ALL.into_iter().find(|a| a.letter() == c)
    }
}

/// An open-loop plan of `K` primitive actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSequence(pub Vec<Action>);

impl ActionSequence {
    pub fn new(actions: Vec<Action>) -> Self {
        Self(actions)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    /// Number of sequences of length `horizon`, or `None` on overflow.
    pub fn count(horizon: usize) -> Option<usize> {
        NUM_ACTIONS.checked_pow(u32::try_from(horizon).ok()?)
    }

    /// Decodes a base-N index; the first action is the most significant digit.
    pub fn from_index(mut index: usize, horizon: usize) -> Self {
        let mut actions = vec![Action::Stay; horizon];
        for slot in actions.iter_mut().rev() {
            *slot = Action::ALL[index % NUM_ACTIONS];
            index /= NUM_ACTIONS;
        }
        Self(actions)
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, a| acc * NUM_ACTIONS + a.index())
    }

    /// All sequences of the given length in index order.
    pub fn all(horizon: usize) -> Result<impl Iterator<Item = ActionSequence>> {
        let n = Self::count(horizon).ok_or(Error::CapExceeded {
            what: "action sequence count",
            size: usize::MAX,
            cap: usize::MAX,
        })?;
        Ok((0..n).map(move |i| Self::from_index(i, horizon)))
    }
}

impl fmt::Display for ActionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for a in &self.0 {
            write!(f, "{}", a.letter())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_index_roundtrip() {
        for k in 0..4 {
            for (i, seq) in ActionSequence::all(k).unwrap().enumerate() {
                assert_eq!(seq.len(), k);
                assert_eq!(seq.index(), i);
            }
        }
        assert_eq!(ActionSequence::count(3), Some(125));
    }

    #[test]
    fn sequence_display() {
        let s = ActionSequence::new(vec![Action::Up, Action::Right, Action::Stay]);
        assert_eq!(s.to_string(), "URS");
        assert_eq!(ActionSequence::new(Vec::new()).to_string(), "-");
    }

    #[test]
    fn cell_order_is_row_major() {
        assert!(Cell::new(5, 0) < Cell::new(0, 1));
        assert_eq!(Cell::new(1, 1).manhattan(Cell::new(3, 0)), 3);
    }
}
