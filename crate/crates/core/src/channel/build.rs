use std::collections::HashMap;

use super::DiscreteChannel;
use crate::error::{Error, Result};
use crate::gridworld::{dynamics_step, Action, ActionSequence, EnvState, GridSpec, NUM_ACTIONS};

/// Default cap on the number of action sequences (5^6).
pub const DEFAULT_SEQUENCE_CAP: usize = 15_625;

/// K-step channel of a grid world from one start state. Column `j` is the
/// terminal state `terminals[j]`; columns appear in order of the first
/// sequence reaching them.
#[derive(Debug, Clone)]
pub struct EnvChannel {
    pub start: EnvState,
    pub horizon: usize,
    pub channel: DiscreteChannel,
    pub terminals: Vec<EnvState>,
    /// Column reached by each row.
    pub targets: Vec<usize>,
}

impl EnvChannel {
    pub fn sequence(&self, row: usize) -> ActionSequence {
        ActionSequence::from_index(row, self.horizon)
    }
}

pub fn build_channel(spec: &GridSpec, start: &EnvState, horizon: usize) -> Result<EnvChannel> {
    build_channel_with_cap(spec, start, horizon, DEFAULT_SEQUENCE_CAP)
}

/// Materializes `p(s' | a, s)` by exhaustive rollout. Rollouts share
/// prefixes: level `k` holds the state after every length-`k` prefix, in
/// sequence-index order, so row order matches [`ActionSequence::index`].
pub fn build_channel_with_cap(
    spec: &GridSpec,
    start: &EnvState,
    horizon: usize,
    cap: usize,
) -> Result<EnvChannel> {
    spec.validate_state(start)?;
    let rows = ActionSequence::count(horizon)
        .filter(|&n| n <= cap)
        .ok_or(Error::CapExceeded {
            what: "action sequence count",
            size: ActionSequence::count(horizon).unwrap_or(usize::MAX),
            cap,
        })?;
    let mut level = vec![start.clone()];
    for _ in 0..horizon {
        let mut next = Vec::with_capacity(level.len() * NUM_ACTIONS);
        for s in &level {
            for a in Action::ALL {
                next.push(dynamics_step(spec, s, a));
            }
        }
        level = next;
    }
    debug_assert_eq!(level.len(), rows);

    let mut index: HashMap<&EnvState, usize> = HashMap::new();
    let mut terminals = Vec::new();
    let mut targets = Vec::with_capacity(rows);
    for s in &level {
        let j = *index.entry(s).or_insert_with(|| {
            terminals.push(s.clone());
            terminals.len() - 1
        });
        targets.push(j);
    }
    let channel = DiscreteChannel::from_targets(&targets, terminals.len())?;
    Ok(EnvChannel {
        start: start.clone(),
        horizon,
        channel,
        terminals,
        targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{layouts, rollout, Cell};

    #[test]
    fn center_k1_has_five_columns() {
        let g = layouts::empty_room(5, 5).unwrap();
        let ch = build_channel(&g, &g.state_at(Cell::new(2, 2)), 1).unwrap();
        assert_eq!(ch.channel.rows(), 5);
        assert_eq!(ch.channel.cols(), 5);
        assert!(ch.channel.is_deterministic());
    }

    #[test]
    fn corner_k1_has_three_columns() {
        let g = layouts::empty_room(5, 5).unwrap();
        let ch = build_channel(&g, &g.state_at(Cell::new(1, 1)), 1).unwrap();
        assert_eq!(ch.channel.rows(), 5);
        assert_eq!(ch.channel.cols(), 3);
    }

    #[test]
    fn k0_is_point_mass_on_start() {
        let g = layouts::empty_room(5, 5).unwrap();
        let s = g.state_at(Cell::new(2, 3));
        let ch = build_channel(&g, &s, 0).unwrap();
        assert_eq!(ch.channel.rows(), 1);
        assert_eq!(ch.terminals, vec![s]);
    }

    #[test]
    fn rows_match_rollout() {
        let g = layouts::two_rooms_default(12, 9).unwrap();
        let s = g.state_at(Cell::new(4, 3));
        let ch = build_channel(&g, &s, 3).unwrap();
        for row in 0..ch.channel.rows() {
            let seq = ch.sequence(row);
            let end = rollout(&g, &s, &seq).unwrap();
            assert_eq!(ch.terminals[ch.targets[row]], end);
            assert_eq!(ch.channel.get(row, ch.targets[row]), 1.0);
        }
    }

    #[test]
    fn cap_enforced() {
        let g = layouts::empty_room(5, 5).unwrap();
        let s = g.state_at(Cell::new(2, 2));
        assert!(matches!(
            build_channel(&g, &s, 7),
            Err(Error::CapExceeded { .. })
        ));
        assert!(build_channel_with_cap(&g, &s, 2, 24).is_err());
    }
}
