use super::{build_channel, DiscreteChannel, SourceDist};
use crate::error::{Error, Result};
use crate::gridworld::{EnvState, GridSpec};

/// Closed-form solution for a deterministic channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCount {
    /// `log n(s)`.
    pub nats: f64,
    /// Number of distinct reachable terminal states, `n(s)`.
    pub reachable: usize,
    /// `n(a, s)` for every row: how many sequences end where `a` ends.
    pub aliases: Vec<usize>,
    /// `ω(a) ∝ 1 / n(a, s)`.
    pub source: SourceDist,
}

pub fn path_count_channel(ch: &DiscreteChannel) -> Result<PathCount> {
    let targets = ch.deterministic_targets().ok_or(Error::NonDeterministic)?;
    let mut per_col = vec![0usize; ch.cols()];
    for &t in &targets {
        per_col[t] += 1;
    }
    let reachable = per_col.iter().filter(|&&c| c > 0).count();
    let aliases: Vec<usize> = targets.iter().map(|&t| per_col[t]).collect();
    let source =
        SourceDist::from_weights(&aliases.iter().map(|&n| 1.0 / n as f64).collect::<Vec<_>>())?;
    Ok(PathCount {
        nats: (reachable as f64).ln(),
        reachable,
        aliases,
        source,
    })
}

/// `E(s) = log n(s)` for the K-step channel of a deterministic grid world.
pub fn path_count_empowerment(spec: &GridSpec, start: &EnvState, horizon: usize) -> Result<(f64, SourceDist)> {
    let env = build_channel(spec, start, horizon)?;
    let pc = path_count_channel(&env.channel)?;
    Ok((pc.nats, pc.source))
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::channel::{blahut_arimoto, terminal_marginal, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::gridworld::{layouts, rollout, ActionSequence, Cell};

    #[test]
    fn horizon_zero_is_zero() {
        let g = layouts::empty_room(6, 6).unwrap();
        let (e, w) = path_count_empowerment(&g, &g.state_at(Cell::new(2, 2)), 0).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(w.probs(), &[1.0]);
    }

    #[test]
    fn interior_and_corner_k1() {
        let g = layouts::empty_room(7, 7).unwrap();
        let (e, _) = path_count_empowerment(&g, &g.state_at(Cell::new(3, 3)), 1).unwrap();
        assert!((e - 5f64.ln()).abs() < 1e-15);
        let (e, _) = path_count_empowerment(&g, &g.state_at(Cell::new(1, 1)), 1).unwrap();
        assert!((e - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn matches_independent_enumeration() {
        let g = layouts::cross_room(11, 11).unwrap();
        let s = g.state_at(Cell::new(5, 3));
        for k in 0..=4 {
            let distinct: HashSet<_> = ActionSequence::all(k)
                .unwrap()
                .map(|seq| rollout(&g, &s, &seq).unwrap())
                .collect();
            let (e, _) = path_count_empowerment(&g, &s, k).unwrap();
            assert_eq!(e, (distinct.len() as f64).ln());
        }
    }

    #[test]
    fn uniform_terminal_marginal_and_ba_agreement() {
        let g = layouts::two_rooms_default(12, 9).unwrap();
        let s = g.state_at(Cell::new(5, 2));
        let env = build_channel(&g, &s, 3).unwrap();
        let pc = path_count_channel(&env.channel).unwrap();
        let m = terminal_marginal(&env.channel, &pc.source).unwrap();
        let support: Vec<f64> = m.into_iter().filter(|&p| p > 0.0).collect();
        assert_eq!(support.len(), pc.reachable);
        let (lo, hi) = support
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
        assert!(hi - lo < 1e-12);
        let ba = blahut_arimoto(&env.channel, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((ba.capacity - pc.nats).abs() < 1e-6);
    }

    #[test]
    fn stochastic_channel_rejected() {
        let ch = DiscreteChannel::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert!(matches!(path_count_channel(&ch), Err(Error::NonDeterministic)));
    }
}
