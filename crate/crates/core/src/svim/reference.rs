use crate::channel::{expected_log_decoder, posterior, variational_bound, DecoderTable, DiscreteChannel, SourceDist};
use crate::error::{Error, Result};

/// Tabular run of the alternation the neural models approximate.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReference {
    /// Final `I(ω_{t+1}, q_t)`.
    pub bound: f64,
    /// `(1/β) log Z(s)` at the final decoder: the objective's value at the
    /// optimal source for that decoder.
    pub log_partition: f64,
    pub decoder: DecoderTable,
    pub source: SourceDist,
    /// Bound after each iteration.
    pub bounds: Vec<f64>,
    /// Source after each iteration.
    pub sources: Vec<SourceDist>,
}

/// From the uniform source, repeats: `q_t` = exact posterior under `ω_t`,
/// `ω_{t+1} ∝ exp(β u_t)` with `u_t(a) = E_{p(s'|a)} log q_t(a | s')`.
/// At `β = 1` the sources are the Blahut-Arimoto iterates.
pub fn exact_variational_reference(ch: &DiscreteChannel, beta: f64, iters: usize) -> Result<VariationalReference> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    if iters == 0 {
        return Err(Error::InvalidArgument("at least one iteration is needed".into()));
    }
    let mut source = SourceDist::uniform(ch.rows());
    let mut bounds = Vec::with_capacity(iters);
    let mut sources = Vec::with_capacity(iters);
    let mut decoder = DecoderTable::uniform(ch.cols(), ch.rows());
    let mut log_partition = 0.0;
    for _ in 0..iters {
        decoder = posterior(ch, &source)?;
        let scaled: Vec<f64> = (0..ch.rows())
            .map(|i| beta * expected_log_decoder(ch, &decoder, i))
            .collect();
        let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        log_partition = (max + scaled.iter().map(|u| (u - max).exp()).sum::<f64>().ln()) / beta;
        source = SourceDist::from_log_weights(&scaled)?;
        bounds.push(variational_bound(ch, &source, &decoder)?);
        sources.push(source.clone());
    }
    Ok(VariationalReference {
        bound: *bounds.last().expect("iters > 0"),
        log_partition,
        decoder,
        source,
        bounds,
        sources,
    })
}
