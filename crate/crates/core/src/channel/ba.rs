use serde::{Deserialize, Serialize};

use super::{check_dims, mutual_information, posterior, terminal_marginal, DiscreteChannel, SourceDist};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Capacity estimate in nats: the mutual information achieved by `source`.
    pub capacity: f64,
    pub source: SourceDist,
    pub iterations: usize,
    pub converged: bool,
    /// Lower bound `log Σ ω c` computed at each iteration.
    pub capacity_history: Vec<f64>,
}

/// One classic Blahut-Arimoto update together with the capacity bounds it
/// certifies: `lower <= C <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaStep {
    pub source: SourceDist,
    pub lower: f64,
    pub upper: f64,
}

/// `ω'(a) ∝ ω(a) exp(D(p(·|a) || p_ω(·)))`.
pub fn ba_update(ch: &DiscreteChannel, w: &SourceDist) -> Result<BaStep> {
    let marginal = terminal_marginal(ch, w)?;
    let log_c: Vec<f64> = (0..ch.rows())
        .map(|i| {
            ch.row(i)
                .iter()
                .zip(&marginal)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, &m)| if m > 0.0 { p * (p / m).ln() } else { f64::INFINITY })
                .sum::<f64>()
        })
        .collect();
    let upper = log_c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_terms: Vec<f64> = w
        .probs()
        .iter()
        .zip(&log_c)
        .map(|(&wi, &lc)| if wi > 0.0 { wi.ln() + lc } else { f64::NEG_INFINITY })
        .collect();
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = max + log_terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    let source = SourceDist::from_log_weights(&log_terms)?;
    Ok(BaStep {
        source,
        lower,
        upper,
    })
}

/// Blahut-Arimoto from the uniform source. Stops once successive lower
/// bounds differ by less than `tol` or the upper/lower gap closes below
/// `tol`; otherwise reports `converged = false` after `max_iter` updates.
pub fn blahut_arimoto(ch: &DiscreteChannel, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut source = SourceDist::uniform(ch.rows());
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let step = ba_update(ch, &source)?;
        let stalled = history
            .last()
            .is_some_and(|prev| (step.lower - prev).abs() < tol);
        let gap_closed = step.upper - step.lower < tol;
        history.push(step.lower);
        source = step.source;
        if stalled || gap_closed {
            converged = true;
            break;
        }
    }
    let capacity = mutual_information(ch, &source)?;
    Ok(CapacityResult {
        capacity,
        source,
        iterations: history.len(),
        converged,
        capacity_history: history,
    })
}

/// Source update derived from the variational bound: take the exact
/// posterior as decoder, then `ω'(a) ∝ exp(β E_{p(s'|a)}[log q(a | s')])`.
/// At `β = 1` this is exactly one Blahut-Arimoto update.
pub fn ba_step_from_variational(ch: &DiscreteChannel, w: &SourceDist, beta: f64) -> Result<SourceDist> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    check_dims(ch, w)?;
    let q = posterior(ch, w)?;
    let log_weights: Vec<f64> = (0..ch.rows())
        .map(|i| beta * expected_log_decoder(ch, &q, i))
        .collect();
    SourceDist::from_log_weights(&log_weights)
}

/// `u(a) = Σ_{s'} p(s' | a) log q(a | s')`.
pub(crate) fn expected_log_decoder(ch: &DiscreteChannel, q: &super::DecoderTable, row: usize) -> f64 {
    ch.row(row)
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(j, &p)| {
            let qv = q.get(row, j);
            if qv > 0.0 {
                p * qv.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{variational_bound, NORM_TOL};

    fn bsc(p: f64) -> DiscreteChannel {
        DiscreteChannel::from_rows(&[vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    #[test]
    fn constant_channel_has_zero_capacity() {
        let ch = DiscreteChannel::from_targets(&[0, 0, 0, 0], 1).unwrap();
        let r = blahut_arimoto(&ch, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.capacity, 0.0);
        assert!(r.converged);
        assert!(r.source.probs().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn identity_channel_capacity() {
        let ch = DiscreteChannel::from_targets(&[0, 1, 2, 3, 4], 5).unwrap();
        let r = blahut_arimoto(&ch, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.capacity - 5f64.ln()).abs() < 1e-12);
        assert!(r.source.probs().iter().all(|&p| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn bsc_capacity_closed_form() {
        let h2 = -(0.1f64 * 0.1f64.ln() + 0.9 * 0.9f64.ln());
        let r = blahut_arimoto(&bsc(0.1), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.capacity - (2f64.ln() - h2)).abs() < DEFAULT_TOL);
    }

    #[test]
    fn asymmetric_channel_history_monotone() {
        let ch = DiscreteChannel::from_rows(&[
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.3, 0.3, 0.4],
            vec![0.0, 0.05, 0.95],
        ])
        .unwrap();
        let r = blahut_arimoto(&ch, 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert!(r.converged);
        for w in r.capacity_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
        assert!(r.capacity >= *r.capacity_history.last().unwrap() - 1e-12);
        let q = posterior(&ch, &r.source).unwrap();
        let b = variational_bound(&ch, &r.source, &q).unwrap();
        assert!((b - r.capacity).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_flagged() {
        let ch = DiscreteChannel::from_rows(&[vec![0.7, 0.3], vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let r = blahut_arimoto(&ch, 1e-15, 2).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!(blahut_arimoto(&ch, 0.0, 10).is_err());
    }

    #[test]
    fn variational_step_on_deterministic_channel() {
        // Targets with group sizes 3, 1, 2.
        let ch = DiscreteChannel::from_targets(&[0, 0, 1, 2, 0, 2], 3).unwrap();
        let next = ba_step_from_variational(&ch, &SourceDist::uniform(6), 1.0).unwrap();
        let n = [3.0, 3.0, 1.0, 2.0, 3.0, 2.0];
        let z: f64 = n.iter().map(|v| 1.0 / v).sum();
        for (p, v) in next.probs().iter().zip(n) {
            assert!((p - 1.0 / (v * z)).abs() < 1e-15);
        }
    }

    #[test]
    fn variational_step_identical_rows_uniform() {
        let ch = DiscreteChannel::from_rows(&vec![vec![0.4, 0.6]; 3]).unwrap();
        let w = SourceDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        let next = ba_step_from_variational(&ch, &w, 1.0).unwrap();
        // Posterior equals the prior, so u(a) = log ω(a) and ω' = ω at β = 1.
        for (a, b) in next.probs().iter().zip(w.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        let sum: f64 = next.probs().iter().sum();
        assert!((sum - 1.0).abs() < NORM_TOL);
        let uniform = ba_step_from_variational(&ch, &SourceDist::uniform(3), 2.0).unwrap();
        assert!(uniform.probs().iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }
}
