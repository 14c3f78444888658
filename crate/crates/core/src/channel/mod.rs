//! Exact information-theoretic machinery on discrete channels.
//!
//! A [`DiscreteChannel`] holds `p(s' | a, s)` for one fixed start state `s`:
//! rows are action sequences, columns are terminal states. All quantities
//! are in nats, and `0 log 0 = 0`.

mod ba;
mod build;
mod info;
mod io;
mod pathcount;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ba::{
    ba_step_from_variational, ba_update, blahut_arimoto, BaStep, CapacityResult, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
pub(crate) use ba::expected_log_decoder;
pub use build::{build_channel, build_channel_with_cap, EnvChannel, DEFAULT_SEQUENCE_CAP};
pub use info::{
    entropy, mutual_information, posterior, terminal_marginal, variational_bound, DecoderTable,
};
pub use io::{read_channel_csv, write_channel_csv, write_source_csv, CapacityRecord};
pub use pathcount::{path_count_channel, path_count_empowerment, PathCount};

/// Tolerance on row sums and source normalization.
pub const NORM_TOL: f64 = 1e-12;

/// Row-stochastic matrix `p(col | row)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl DiscreteChannel {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} channel",
                probs.len()
            )));
        }
        for (i, row) in probs.chunks(cols).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::NotNormalized(format!("row {i} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { rows, cols, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged channel rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Deterministic channel: row `i` is a point mass on `targets[i]`.
    pub fn from_targets(targets: &[usize], cols: usize) -> Result<Self> {
        let mut probs = vec![0.0; targets.len() * cols];
        for (i, &t) in targets.iter().enumerate() {
            if t >= cols {
                return Err(Error::DimensionMismatch(format!("target {t} >= {cols} columns")));
            }
            probs[i * cols + t] = 1.0;
        }
        Self::new(targets.len(), cols, probs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols + col]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Column index of each row's point mass, if every row is one.
    pub fn deterministic_targets(&self) -> Option<Vec<usize>> {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let t = row.iter().position(|&p| p == 1.0)?;
                row.iter()
                    .enumerate()
                    .all(|(j, &p)| j == t || p == 0.0)
                    .then_some(t)
            })
            .collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic_targets().is_some()
    }
}

/// Distribution `ω(a | s)` over the rows of a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceDist {
    probs: Vec<f64>,
}

impl SourceDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::NotNormalized("source has invalid entries".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(format!("source sums to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::NotNormalized(format!("weights sum to {sum}")));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NotNormalized("negative or non-finite weight".into()));
        }
        // Normalized by construction; skip the sum check, which long vectors
        // can fail by accumulated rounding alone.
        Ok(Self {
            probs: weights.iter().map(|w| w / sum).collect(),
        })
    }

    /// Normalizes `exp(log_weights)` with max-subtraction.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Numeric("no finite log-weight".into()));
        }
        let w: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
        Self::from_weights(&w)
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }
}

pub(crate) fn check_dims(ch: &DiscreteChannel, w: &SourceDist) -> Result<()> {
    if ch.rows() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "source of length {} for a channel with {} rows",
            w.len(),
            ch.rows()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_rows() {
        assert!(DiscreteChannel::from_rows(&[vec![0.5, 0.4]]).is_err());
        assert!(DiscreteChannel::from_rows(&[vec![1.5, -0.5]]).is_err());
        assert!(DiscreteChannel::from_rows(&[vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn deterministic_detection() {
        let ch = DiscreteChannel::from_targets(&[0, 2, 2], 3).unwrap();
        assert_eq!(ch.deterministic_targets(), Some(vec![0, 2, 2]));
        let bsc = DiscreteChannel::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert!(!bsc.is_deterministic());
    }

    #[test]
    fn log_weights_normalize() {
        let w = SourceDist::from_log_weights(&[-750.0, -750.0 + 2f64.ln()]).unwrap();
        assert!((w.probs()[1] - 2.0 / 3.0).abs() < 1e-12);
    }
}
