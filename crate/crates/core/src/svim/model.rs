use std::io::{Read, Write};

use rand::Rng;

use super::SvimConfig;
use crate::approx::{read_snapshot, write_snapshot, ARPolicy, Activation, DenseNet, Snapshot, Tensor, Trace};
use crate::error::{Error, Result};
use crate::gridworld::{Observation, DEFAULT_RESOLUTION};

/// Representation, decoder `q(a | s, s')`, source `h(a | s)` and `ψ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvimModel {
    pub config: SvimConfig,
    /// Pixels to features, ReLU.
    pub repr: DenseNet,
    /// Conditioned on `[features(s), features(s')]`.
    pub decoder: ARPolicy,
    /// Conditioned on `features(s)`.
    pub source: ARPolicy,
    pub psi: DenseNet,
    /// Pixels enter the representation as `(x - shift) * scale`.
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
}

/// Gradients with the same layout as the model's parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub repr: Vec<f64>,
    pub decoder: Vec<f64>,
    pub source: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ModelGrads {
    pub fn zeros(model: &SvimModel) -> Self {
        Self {
            repr: vec![0.0; model.repr.num_params()],
            decoder: vec![0.0; model.decoder.num_params()],
            source: vec![0.0; model.source.num_params()],
            psi: vec![0.0; model.psi.num_params()],
        }
    }
}

const INPUT_DIM: usize = DEFAULT_RESOLUTION * DEFAULT_RESOLUTION;

impl SvimModel {
    pub fn new<R: Rng + ?Sized>(config: SvimConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (f, h, k) = (config.features, config.hidden, config.horizon);
        let mut repr = DenseNet::new(&[INPUT_DIM, f], Activation::Relu, Activation::Relu)?;
        repr.init_glorot(rng);
        let decoder = ARPolicy::new(2 * f, k, &[h], rng)?;
        let source = ARPolicy::new(f, k, &[h], rng)?;
        let psi = DenseNet::mlp(&[f, h, 1], rng)?;
        Ok(Self {
            config,
            repr,
            decoder,
            source,
            psi,
            input_shift: vec![0.0; INPUT_DIM],
            input_scale: vec![1.0; INPUT_DIM],
        })
    }

    /// Standardizes every pixel to zero mean and unit variance over
    /// `observations`. Constant pixels are centred only, which maps them to 0.
    pub fn fit_input_normalization<'a>(&mut self, observations: impl IntoIterator<Item = &'a Observation>) -> Result<()> {
        let mut sum = vec![0.0; INPUT_DIM];
        let mut sq = vec![0.0; INPUT_DIM];
        let mut n = 0usize;
        for obs in observations {
            let px = obs.pixels();
            if px.len() != INPUT_DIM {
                return Err(Error::DimensionMismatch(format!("observation has {} pixels, expected {INPUT_DIM}", px.len())));
            }
            for (i, &x) in px.iter().enumerate() {
                sum[i] += x;
                sq[i] += x * x;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidArgument("no observations to normalize over".into()));
        }
        let n = n as f64;
        for i in 0..INPUT_DIM {
            let mean = sum[i] / n;
            let var = (sq[i] / n - mean * mean).max(0.0);
            self.input_shift[i] = mean;
            self.input_scale[i] = if var > 1e-12 { 1.0 / var.sqrt() } else { 1.0 };
        }
        Ok(())
    }

    fn normalized(&self, obs: &Observation) -> Vec<f64> {
        obs.pixels()
            .iter()
            .zip(self.input_shift.iter().zip(&self.input_scale))
            .map(|(x, (m, s))| (x - m) * s)
            .collect()
    }

    pub fn beta(&self) -> f64 {
        self.config.beta
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn features(&self, obs: &Observation) -> Result<Trace> {
        self.repr.trace(&self.normalized(obs))
    }

    /// Decoder conditioning vector for a pair of feature traces.
    pub(crate) fn pair(s: &Trace, next: &Trace) -> Vec<f64> {
        let mut cond = s.output().to_vec();
        cond.extend_from_slice(next.output());
        cond
    }

    /// Raw `ψ(s)`.
    pub fn psi_value(&self, obs: &Observation) -> Result<f64> {
        let f = self.features(obs)?;
        Ok(self.psi.forward(f.output())?[0])
    }

    pub fn num_params(&self) -> usize {
        self.repr.num_params()
            + self.decoder.num_params()
            + self.source.num_params()
            + self.psi.num_params()
    }

    pub fn to_snapshot(&self) -> Result<Snapshot> {
        let flat = |p: &[f64]| Tensor::vector(p.to_vec());
        Ok(Snapshot {
            meta: serde_json::to_string(&self.config)?,
            tensors: vec![
                ("repr".into(), flat(self.repr.params())?),
                ("decoder".into(), flat(self.decoder.params())?),
                ("source".into(), flat(self.source.params())?),
                ("psi".into(), flat(self.psi.params())?),
                ("input_shift".into(), flat(&self.input_shift)?),
                ("input_scale".into(), flat(&self.input_scale)?),
            ],
        })
    }

    pub fn from_snapshot(snap: &Snapshot) -> Result<Self> {
        let config: SvimConfig = serde_json::from_str(&snap.meta)
            .map_err(|e| Error::Snapshot(format!("bad model metadata: {e}")))?;
        config.validate()?;
        let (f, h, k) = (config.features, config.hidden, config.horizon);
        let mut repr = DenseNet::new(&[INPUT_DIM, f], Activation::Relu, Activation::Relu)?;
        let mut decoder = ARPolicy::zeros(2 * f, k, &[h])?;
        let mut source = ARPolicy::zeros(f, k, &[h])?;
        let mut psi = DenseNet::new(&[f, h, 1], Activation::Relu, Activation::Identity)?;
        let load = |name: &str, dst: &mut [f64]| -> Result<()> {
            let t = snap.get(name)?;
            if t.len() != dst.len() {
                return Err(Error::Snapshot(format!(
                    "tensor {name:?} has {} values, model needs {}",
                    t.len(),
                    dst.len()
                )));
            }
            dst.copy_from_slice(t.values());
            Ok(())
        };
        load("repr", repr.params_mut())?;
        load("decoder", decoder.params_mut())?;
        load("source", source.params_mut())?;
        load("psi", psi.params_mut())?;
        let mut input_shift = vec![0.0; INPUT_DIM];
        let mut input_scale = vec![0.0; INPUT_DIM];
        load("input_shift", &mut input_shift)?;
        load("input_scale", &mut input_scale)?;
        Ok(Self {
            config,
            repr,
            decoder,
            source,
            psi,
            input_shift,
            input_scale,
        })
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_snapshot(w, &self.to_snapshot()?)
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        Self::from_snapshot(&read_snapshot(r)?)
    }
}
