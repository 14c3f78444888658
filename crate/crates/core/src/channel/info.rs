use super::{check_dims, DiscreteChannel, SourceDist};
use crate::error::{Error, Result};

/// Shannon entropy in nats with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `p(s' | s) = Σ_a p(s' | a, s) ω(a | s)`.
pub fn terminal_marginal(ch: &DiscreteChannel, w: &SourceDist) -> Result<Vec<f64>> {
    check_dims(ch, w)?;
    let mut out = vec![0.0; ch.cols()];
    for (i, &wi) in w.probs().iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        for (o, &p) in out.iter_mut().zip(ch.row(i)) {
            *o += wi * p;
        }
    }
    Ok(out)
}

/// `I(a; s') = H(s') - H(s' | a)`, clamped to `[0, log #cols]` against
/// rounding.
pub fn mutual_information(ch: &DiscreteChannel, w: &SourceDist) -> Result<f64> {
    let marginal = terminal_marginal(ch, w)?;
    let h_out = entropy(&marginal);
    let h_cond: f64 = w
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(i, &wi)| wi * entropy(ch.row(i)))
        .sum();
    Ok((h_out - h_cond).clamp(0.0, (ch.cols() as f64).ln()))
}

/// Decoder `q(a | s')` as a table: one row per terminal state, one column
/// per action sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderTable {
    states: usize,
    sequences: usize,
    probs: Vec<f64>,
}

impl DecoderTable {
    pub fn new(states: usize, sequences: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != states * sequences {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {states}x{sequences} decoder",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::NotNormalized("decoder has invalid entries".into()));
        }
        Ok(Self {
            states,
            sequences,
            probs,
        })
    }

    pub fn uniform(states: usize, sequences: usize) -> Self {
        Self {
            states,
            sequences,
            probs: vec![1.0 / sequences as f64; states * sequences],
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn sequences(&self) -> usize {
        self.sequences
    }

    /// `q(a | s')` for terminal `state`.
    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state * self.sequences..(state + 1) * self.sequences]
    }

    pub fn get(&self, sequence: usize, state: usize) -> f64 {
        self.probs[state * self.sequences + sequence]
    }
}

/// Exact action posterior `p(a | s') ∝ p(s' | a) ω(a)`. Terminal states
/// with zero marginal get an all-zero row (`0/0 = 0`).
pub fn posterior(ch: &DiscreteChannel, w: &SourceDist) -> Result<DecoderTable> {
    let marginal = terminal_marginal(ch, w)?;
    let (rows, cols) = (ch.rows(), ch.cols());
    let mut probs = vec![0.0; rows * cols];
    for (j, &m) in marginal.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        for (i, &wi) in w.probs().iter().enumerate() {
            probs[j * rows + i] = ch.get(i, j) * wi / m;
        }
    }
    DecoderTable::new(cols, rows, probs)
}

/// Variational lower bound `H(a) + Σ ω(a) p(s'|a) log q(a | s')`.
///
/// Every decoder row for a terminal state that receives mass under
/// `(ch, w)` must sum to one. Returns `-inf` when `q` assigns zero
/// probability to a sequence that can produce an observed outcome.
pub fn variational_bound(ch: &DiscreteChannel, w: &SourceDist, q: &DecoderTable) -> Result<f64> {
    check_dims(ch, w)?;
    if q.states() != ch.cols() || q.sequences() != ch.rows() {
        return Err(Error::DimensionMismatch(format!(
            "decoder {}x{} for channel {}x{}",
            q.states(),
            q.sequences(),
            ch.rows(),
            ch.cols()
        )));
    }
    let marginal = terminal_marginal(ch, w)?;
    for (j, &m) in marginal.iter().enumerate() {
        let sum: f64 = q.row(j).iter().sum();
        if m > 0.0 && (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(format!("decoder row {j} sums to {sum}")));
        }
    }
    let mut expected_log_q = 0.0;
    for (i, &wi) in w.probs().iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        for (j, &p) in ch.row(i).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let qv = q.get(i, j);
            if qv == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            expected_log_q += wi * p * qv.ln();
        }
    }
    Ok(w.entropy() + expected_log_q)
}
