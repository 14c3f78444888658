use rand::Rng;

use super::{Activation, DenseNet, Trace};
use crate::error::{Error, Result};
use crate::gridworld::{Action, ActionSequence, NUM_ACTIONS};

/// Numerically stable `log softmax`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// Categorical autoregressive distribution over `K`-step action sequences:
/// `p(a | c) = Π_k softmax(f(onehot(a_{k-1}), c))[a_k]`, with an all-zero
/// one-hot before the first step.
///
/// The conditioning vector enters the first layer identically at every
/// step, so its contribution is computed once per sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ARPolicy {
    horizon: usize,
    cond_dim: usize,
    net: DenseNet,
}

impl ARPolicy {
    /// `hidden` lists the widths of the per-step network's ReLU layers.
    pub fn new<R: Rng + ?Sized>(
        cond_dim: usize,
        horizon: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut pol = Self::zeros(cond_dim, horizon, hidden)?;
        pol.net.init_glorot(rng);
        Ok(pol)
    }

    /// All parameters zero: the uniform distribution.
    pub fn zeros(cond_dim: usize, horizon: usize, hidden: &[usize]) -> Result<Self> {
        let mut dims = vec![NUM_ACTIONS + cond_dim];
        dims.extend_from_slice(hidden);
        dims.push(NUM_ACTIONS);
        let net = DenseNet::new(&dims, Activation::Relu, Activation::Identity)?;
        Ok(Self {
            horizon,
            cond_dim,
            net,
        })
    }

    pub fn from_net(net: DenseNet, horizon: usize) -> Result<Self> {
        if net.output_dim() != NUM_ACTIONS || net.input_dim() < NUM_ACTIONS {
            return Err(Error::DimensionMismatch(format!(
                "per-step network must map {NUM_ACTIONS}+c inputs to {NUM_ACTIONS} logits"
            )));
        }
        Ok(Self {
            horizon,
            cond_dim: net.input_dim() - NUM_ACTIONS,
            net,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cond_dim(&self) -> usize {
        self.cond_dim
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn num_params(&self) -> usize {
        self.net.num_params()
    }

    pub fn params(&self) -> &[f64] {
        self.net.params()
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        self.net.params_mut()
    }

    fn check(&self, cond: &[f64], seq: Option<&ActionSequence>) -> Result<()> {
        if cond.len() != self.cond_dim {
            return Err(Error::DimensionMismatch(format!(
                "conditioning vector of length {} for a policy taking {}",
                cond.len(),
                self.cond_dim
            )));
        }
        if let Some(seq) = seq {
            if seq.len() != self.horizon {
                return Err(Error::SequenceLength {
                    expected: self.horizon,
                    got: seq.len(),
                });
            }
        }
        Ok(())
    }

    /// First-layer pre-activation with no previous action.
    fn base(&self, cond: &[f64]) -> Vec<f64> {
        let mut pre = self.net.bias(0).to_vec();
        for (i, &c) in cond.iter().enumerate() {
            if c != 0.0 {
                for (p, &w) in pre.iter_mut().zip(self.net.weight_row(0, NUM_ACTIONS + i)) {
                    *p += c * w;
                }
            }
        }
        pre
    }

    fn step(&self, base: &[f64], prev: Option<Action>) -> Trace {
        let mut pre = base.to_vec();
        if let Some(a) = prev {
            for (p, &w) in pre.iter_mut().zip(self.net.weight_row(0, a.index())) {
                *p += w;
            }
        }
        self.net.trace_from_preactivation(Vec::new(), pre)
    }

    /// Logits of the next action after `prev` (`None` at the first step).
    pub fn step_logits(&self, cond: &[f64], prev: Option<Action>) -> Result<Vec<f64>> {
        self.check(cond, None)?;
        Ok(self.step(&self.base(cond), prev).output().to_vec())
    }

    pub fn logprob(&self, cond: &[f64], seq: &ActionSequence) -> Result<f64> {
        self.check(cond, Some(seq))?;
        let base = self.base(cond);
        let mut prev = None;
        let mut total = 0.0;
        for &a in seq.actions() {
            total += log_softmax(self.step(&base, prev).output())[a.index()];
            prev = Some(a);
        }
        Ok(total)
    }

    /// Adds `scale * d log p(seq | cond) / dθ` into `grads` and returns
    /// `(log p, scale * d log p / d cond)`.
    pub fn logprob_grad(
        &self,
        cond: &[f64],
        seq: &ActionSequence,
        scale: f64,
        grads: &mut [f64],
    ) -> Result<(f64, Vec<f64>)> {
        self.check(cond, Some(seq))?;
        if grads.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "{} gradient slots for {} parameters",
                grads.len(),
                self.num_params()
            )));
        }
        let width = self.net.width(0);
        let off = self.net.layer_offset(0);
        let bias_off = off + (NUM_ACTIONS + self.cond_dim) * width;
        let base = self.base(cond);
        let mut sum_delta = vec![0.0; width];
        let mut prev = None;
        let mut total = 0.0;
        for &a in seq.actions() {
            let trace = self.step(&base, prev);
            let lp = log_softmax(trace.output());
            total += lp[a.index()];
            let upstream: Vec<f64> = lp
                .iter()
                .enumerate()
                .map(|(j, l)| scale * (f64::from(j == a.index()) - l.exp()))
                .collect();
            let delta = self.net.backward_to_first_preactivation(&trace, &upstream, grads);
            for (g, &d) in grads[bias_off..bias_off + width].iter_mut().zip(&delta) {
                *g += d;
            }
            if let Some(p) = prev {
                let row = off + p.index() * width;
                for (g, &d) in grads[row..row + width].iter_mut().zip(&delta) {
                    *g += d;
                }
            }
            for (s, d) in sum_delta.iter_mut().zip(&delta) {
                *s += d;
            }
            prev = Some(a);
        }
        let mut dcond = vec![0.0; self.cond_dim];
        for (i, &c) in cond.iter().enumerate() {
            let row = off + (NUM_ACTIONS + i) * width;
            if c != 0.0 {
                for (g, &d) in grads[row..row + width].iter_mut().zip(&sum_delta) {
                    *g += c * d;
                }
            }
            dcond[i] = self
                .net
                .weight_row(0, NUM_ACTIONS + i)
                .iter()
                .zip(&sum_delta)
                .map(|(w, d)| w * d)
                .sum();
        }
        Ok((total, dcond))
    }

    /// Ancestral sampling, one categorical draw per step.
    pub fn sample<R: Rng + ?Sized>(&self, cond: &[f64], rng: &mut R) -> Result<ActionSequence> {
        self.check(cond, None)?;
        let base = self.base(cond);
        let mut prev = None;
        let mut actions = Vec::with_capacity(self.horizon);
        for _ in 0..self.horizon {
            let lp = log_softmax(self.step(&base, prev).output());
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = NUM_ACTIONS - 1;
            for (j, l) in lp.iter().enumerate() {
                acc += l.exp();
                if u < acc {
                    pick = j;
                    break;
                }
            }
            let a = Action::from_index(pick).expect("action index in range");
            actions.push(a);
            prev = Some(a);
        }
        Ok(ActionSequence::new(actions))
    }

    /// `log p(a | cond)` for every sequence, indexed by
    /// [`ActionSequence::index`]. Prefixes are shared.
    pub fn all_logprobs(&self, cond: &[f64]) -> Result<Vec<f64>> {
        self.check(cond, None)?;
        let base = self.base(cond);
        let mut level: Vec<(f64, Option<Action>)> = vec![(0.0, None)];
        for _ in 0..self.horizon {
            let mut next = Vec::with_capacity(level.len() * NUM_ACTIONS);
            for &(lp, prev) in &level {
                let step = log_softmax(self.step(&base, prev).output());
                for a in Action::ALL {
                    next.push((lp + step[a.index()], Some(a)));
                }
            }
            level = next;
        }
        Ok(level.into_iter().map(|(lp, _)| lp).collect())
    }
}
