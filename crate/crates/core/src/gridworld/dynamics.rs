use std::collections::{HashSet, VecDeque};

use super::{Action, ActionSequence, EnvState, GridSpec};
use crate::error::{Error, Result};

/// Default cap on the number of reachable states `enumerate_states` will visit.
pub const DEFAULT_STATE_CAP: usize = 50_000;

/// One deterministic transition `T(s, a)`.
pub fn step(spec: &GridSpec, s: &EnvState, a: Action) -> Result<EnvState> {
    spec.validate_state(s)?;
    Ok(step_unchecked(spec, s, a))
}

/// `step` without validating `s`; only call on states known to be valid.
pub(crate) fn step_unchecked(spec: &GridSpec, s: &EnvState, a: Action) -> EnvState {
    let mut next = s.clone();
    advance(spec, &mut next, a);
    next
}

fn advance(spec: &GridSpec, s: &mut EnvState, a: Action) {
    if a == Action::Stay {
        return;
    }
    let target = s.agent.shifted(a);
    if spec.is_wall(target) {
        return;
    }
    if spec.door_cell() == Some(target) && !s.door_open {
        if !s.has_key {
            return;
        }
        s.door_open = true;
    }
    if let Ok(i) = s.boxes.binary_search(&target) {
        if !spec.boxes_movable() {
            return;
        }
        let beyond = target.shifted(a);
        let key_on_floor = !s.has_key && spec.key_cell() == Some(beyond);
        if spec.is_wall(beyond)
            || spec.door_cell() == Some(beyond)
            || key_on_floor
            || s.boxes.binary_search(&beyond).is_ok()
        {
            return;
        }
        s.boxes[i] = beyond;
        s.boxes.sort_unstable();
    }
    if spec.key_cell() == Some(target) {
        s.has_key = true;
    }
    s.agent = target;
}

/// Applies `seq` from `s`. An empty sequence returns `s` unchanged.
pub fn rollout(spec: &GridSpec, s: &EnvState, seq: &ActionSequence) -> Result<EnvState> {
    spec.validate_state(s)?;
    Ok(rollout_unchecked(spec, s, seq.actions()))
}

pub(crate) fn rollout_unchecked(spec: &GridSpec, s: &EnvState, actions: &[Action]) -> EnvState {
    let mut cur = s.clone();
    for &a in actions {
        advance(spec, &mut cur, a);
    }
    cur
}

/// Every state reachable from the designated start state, sorted.
pub fn enumerate_states(spec: &GridSpec, cap: usize) -> Result<Vec<EnvState>> {
    let start = spec.initial_state();
    spec.validate_state(&start)?;
    let mut seen: HashSet<EnvState> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        for a in Action::ALL {
            let next = step_unchecked(spec, &s, a);
            if !seen.contains(&next) {
                if seen.len() >= cap {
                    return Err(Error::EnumerationInfeasible { cap });
                }
                seen.insert(next.clone());
                queue.push_back(next);
            }
        }
    }
    let mut states: Vec<EnvState> = seen.into_iter().collect();
    states.sort();
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{layouts, BoxMode, Cell};

    #[test]
    fn stay_is_identity() {
        let g = layouts::empty_room(5, 5).unwrap();
        let s = g.state_at(Cell::new(2, 2));
        assert_eq!(step(&g, &s, Action::Stay).unwrap(), s);
    }

    #[test]
    fn wall_blocks() {
        let g = layouts::empty_room(5, 5).unwrap();
        let s = g.state_at(Cell::new(1, 2));
        assert_eq!(step(&g, &s, Action::Left).unwrap(), s);
        assert_eq!(step(&g, &s, Action::Right).unwrap().agent, Cell::new(2, 2));
    }

    #[test]
    fn push_moves_box() {
        let g = layouts::box_room(BoxMode::Movable, 7, 5, 1).unwrap();
        let b = g.box_cells()[0];
        let s = g.state_at(Cell::new(b.x - 1, b.y));
        let n = step(&g, &s, Action::Right).unwrap();
        assert_eq!(n.agent, b);
        assert_eq!(n.boxes, vec![Cell::new(b.x + 1, b.y)]);
    }

    // Exhaustive three-cell corridor: agent, box and free cell in every
    // arrangement; a push only succeeds when the cell behind the box is free.
    #[test]
    fn push_rule_in_corridor() {
        use crate::gridworld::{GridParts, GridSpec, Variant};
        use std::collections::BTreeSet;
        for agent_x in 1..=3usize {
            for box_x in 1..=3usize {
                if agent_x == box_x {
                    continue;
                }
                let g = GridSpec::try_new(GridParts {
                    width: 5,
                    height: 3,
                    variant: Variant::BoxRoom(BoxMode::Movable),
                    walls: BTreeSet::new(),
                    door_cell: None,
                    key_cell: None,
                    box_cells: vec![Cell::new(box_x, 1)],
                    openings: vec![],
                    start: Cell::new(agent_x, 1),
                })
                .unwrap();
                let s = g.initial_state();
                for a in [Action::Left, Action::Right] {
                    let n = step(&g, &s, a).unwrap();
                    let dx: isize = if a == Action::Right { 1 } else { -1 };
                    let target = (agent_x as isize + dx) as usize;
                    let expected = if target == box_x {
                        let beyond = (box_x as isize + dx) as usize;
                        if (1..=3).contains(&beyond) {
                            (target, beyond)
                        } else {
                            (agent_x, box_x)
                        }
                    } else if (1..=3).contains(&target) {
                        (target, box_x)
                    } else {
                        (agent_x, box_x)
                    };
                    assert_eq!((n.agent.x, n.boxes[0].x), expected, "{agent_x} {box_x} {a:?}");
                }
            }
        }
    }

    #[test]
    fn fixed_box_blocks() {
        let g = layouts::box_room(BoxMode::Fixed, 7, 5, 1).unwrap();
        let b = g.box_cells()[0];
        let s = g.state_at(Cell::new(b.x - 1, b.y));
        assert_eq!(step(&g, &s, Action::Right).unwrap(), s);
    }

    #[test]
    fn key_then_door() {
        let g = layouts::key_door(9, 7).unwrap();
        let door = g.door_cell().unwrap();
        let key = g.key_cell().unwrap();
        let beside = g.state_at(Cell::new(door.x - 1, door.y));
        assert_eq!(step(&g, &beside, Action::Right).unwrap(), beside);

        let near_key = g.state_at(Cell::new(key.x, key.y - 1));
        let got = step(&g, &near_key, Action::Down).unwrap();
        assert!(got.has_key && got.agent == key);

        let mut with_key = beside.clone();
        with_key.has_key = true;
        let opened = step(&g, &with_key, Action::Right).unwrap();
        assert!(opened.door_open && opened.agent == door);
        let through = step(&g, &opened, Action::Right).unwrap();
        assert_eq!(through.agent, Cell::new(door.x + 1, door.y));
        assert!(through.door_open);
    }

    #[test]
    fn rollout_examples() {
        let g = layouts::empty_room(5, 5).unwrap();
        let c = g.state_at(Cell::new(2, 2));
        assert_eq!(rollout(&g, &c, &ActionSequence::new(vec![])).unwrap(), c);
        let ud = ActionSequence::new(vec![Action::Up, Action::Down]);
        assert_eq!(rollout(&g, &c, &ud).unwrap(), c);
    }

    #[test]
    fn enumeration_counts() {
        let g = layouts::empty_room(20, 20).unwrap();
        assert_eq!(enumerate_states(&g, DEFAULT_STATE_CAP).unwrap().len(), 324);
        let g = layouts::empty_room(3, 3).unwrap();
        assert_eq!(enumerate_states(&g, DEFAULT_STATE_CAP).unwrap().len(), 1);
        let g = layouts::empty_room(20, 20).unwrap();
        assert!(matches!(
            enumerate_states(&g, 100),
            Err(Error::EnumerationInfeasible { cap: 100 })
        ));
    }

    #[test]
    fn invalid_state_rejected() {
        let g = layouts::empty_room(5, 5).unwrap();
        let s = g.state_at(Cell::new(0, 0));
        assert!(step(&g, &s, Action::Stay).is_err());
    }
}
