use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::source_loss_with_psi;
use super::{decoder_loss, Experience, ExperienceBatch, ModelGrads, SvimConfig, SvimModel};
use crate::approx::AdagradState;
use crate::error::{Error, Result};
use crate::gridworld::{
    enumerate_states, render, rollout_unchecked, ActionSequence, EnvState, GridSpec, Observation,
    DEFAULT_STATE_CAP,
};

/// Bounded FIFO of experience with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Experience>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    /// `size` draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<ExperienceBatch> {
        if self.items.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let picks = (0..size)
            .map(|_| self.items[rng.random_range(0..self.items.len())].clone())
            .collect();
        ExperienceBatch::new(picks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    /// Means over the steps since the previous record.
    pub decoder_loss: f64,
    pub source_loss: f64,
    pub mean_psi: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<LogRecord>,
}

impl RunLog {
    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Records with wall-clock times zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> RunLog {
        RunLog {
            records: self
                .records
                .iter()
                .map(|r| LogRecord {
                    elapsed_secs: 0.0,
                    ..r.clone()
                })
                .collect(),
        }
    }
}

pub fn svim_train(spec: &GridSpec, config: &SvimConfig) -> Result<(SvimModel, RunLog)> {
    svim_train_with(spec, config, |_| {})
}

fn check_finite(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("{what} became {v}")))
    }
}

/// The training loop. Every step draws a start state uniformly from the
/// reachable states, samples a sequence from `h` (or uniformly with
/// probability `exploration_mix`), stores the outcome, then takes one
/// Adagrad step on the decoder loss followed by one on the source loss,
/// both over a mini-batch drawn from the replay buffer. `on_log` sees
/// every record as it is produced.
pub fn svim_train_with(
    spec: &GridSpec,
    config: &SvimConfig,
    mut on_log: impl FnMut(&LogRecord),
) -> Result<(SvimModel, RunLog)> {
    config.validate()?;
    let n_seq = ActionSequence::count(config.horizon)
        .ok_or_else(|| Error::Config(format!("horizon {} is too large", config.horizon)))?;
    let states = enumerate_states(spec, DEFAULT_STATE_CAP)?;
    let frames: HashMap<EnvState, Arc<Observation>> = states
        .iter()
        .map(|s| Ok((s.clone(), Arc::new(render(spec, s)?))))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = SvimModel::new(config.clone(), &mut rng)?;
    if config.normalize_inputs {
        model.fit_input_normalization(states.iter().map(|s| frames[s].as_ref()))?;
    }
    let mut log = RunLog::default();
    if config.total_steps == 0 {
        return Ok((model, log));
    }

    let mut opt_repr_dec = AdagradState::new(model.repr.num_params(), config.decoder_lr);
    let mut opt_dec = AdagradState::new(model.decoder.num_params(), config.decoder_lr);
    let mut opt_repr_src = AdagradState::new(model.repr.num_params(), config.source_lr);
    let mut opt_src = AdagradState::new(model.source.num_params(), config.source_lr);
    let mut opt_psi = AdagradState::new(model.psi.num_params(), config.source_lr);

    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let started = Instant::now();
    let (mut dec_sum, mut src_sum, mut psi_sum, mut window) = (0.0, 0.0, 0.0, 0usize);
    for step in 0..config.total_steps {
        let s = &states[rng.random_range(0..states.len())];
        let obs = Arc::clone(&frames[s]);
        let seq = if rng.random::<f64>() < config.exploration_mix {
            ActionSequence::from_index(rng.random_range(0..n_seq), config.horizon)
        } else {
            let f = model.features(&obs)?;
            model.source.sample(f.output(), &mut rng)?
        };
        let next = rollout_unchecked(spec, s, seq.actions());
        buffer.push(Experience {
            obs,
            seq,
            next_obs: Arc::clone(&frames[&next]),
        });

        let batch = buffer.sample(config.batch_size, &mut rng)?;
        let (dl, g) = decoder_loss(&model, &batch)?;
        apply(&mut opt_dec, model.decoder.params_mut(), &g.decoder)?;
        apply(&mut opt_repr_dec, model.repr.params_mut(), &g.repr)?;

        let (sl, g, mean_psi): (f64, ModelGrads, f64) = source_loss_with_psi(&model, &batch)?;
        apply(&mut opt_src, model.source.params_mut(), &g.source)?;
        apply(&mut opt_psi, model.psi.params_mut(), &g.psi)?;
        apply(&mut opt_repr_src, model.repr.params_mut(), &g.repr)?;

        dec_sum += check_finite("decoder loss", dl)?;
        src_sum += check_finite("source loss", sl)?;
        psi_sum += mean_psi;
        window += 1;
        if (step + 1) % config.log_every == 0 || step + 1 == config.total_steps {
            let w = window as f64;
            let record = LogRecord {
                step: step + 1,
                decoder_loss: dec_sum / w,
                source_loss: src_sum / w,
                mean_psi: psi_sum / w,
                elapsed_secs: started.elapsed().as_secs_f64(),
            };
            on_log(&record);
            log.records.push(record);
            (dec_sum, src_sum, psi_sum, window) = (0.0, 0.0, 0.0, 0);
        }
    }
    Ok((model, log))
}

fn apply(opt: &mut AdagradState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    opt.update(params, grads)?;
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numeric("non-finite parameter after update".into()));
    }
    Ok(())
}
