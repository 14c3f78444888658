use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{CapacityResult, DiscreteChannel, SourceDist};
use crate::error::{Error, Result};
use crate::gridworld::ActionSequence;

/// Headerless numeric matrix, one channel row per line.
pub fn write_channel_csv<W: Write>(out: W, ch: &DiscreteChannel) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..ch.rows() {
        w.serialize(ch.row(i))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_channel_csv<R: Read>(input: R) -> Result<DiscreteChannel> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in r.deserialize::<Vec<f64>>() {
        rows.push(rec?);
    }
    if rows.is_empty() {
        return Err(Error::DimensionMismatch("empty channel file".into()));
    }
    DiscreteChannel::from_rows(&rows)
}

#[derive(Serialize)]
struct SourceRow {
    row: usize,
    sequence: String,
    probability: f64,
}

/// `row,sequence,probability`. The sequence column holds action letters
/// when `horizon` is known and is empty otherwise.
pub fn write_source_csv<W: Write>(out: W, source: &SourceDist, horizon: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (row, &probability) in source.probs().iter().enumerate() {
        let sequence = horizon
            .map(|k| ActionSequence::from_index(row, k).to_string())
            .unwrap_or_default();
        w.serialize(SourceRow {
            row,
            sequence,
            probability,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// JSON form of a [`CapacityResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub capacity: f64,
    pub iterations: usize,
    pub converged: bool,
    pub source: Vec<f64>,
}

impl From<&CapacityResult> for CapacityRecord {
    fn from(r: &CapacityResult) -> Self {
        Self {
            capacity: r.capacity,
            iterations: r.iterations,
            converged: r.converged,
            source: r.source.probs().to_vec(),
        }
    }
}
