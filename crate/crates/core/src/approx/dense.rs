use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, v: &mut [f64]) {
        if self == Activation::Relu {
            for x in v {
                *x = x.max(0.0);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    input: usize,
    output: usize,
    activation: Activation,
    /// Start of this layer's weights in the flat parameter vector. Weights
    /// are stored input-major (`w[i * output + j]` connects input `i` to
    /// output `j`) and followed by `output` biases.
    offset: usize,
}

impl Layer {
    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.input * self.output]
    }

    fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        let start = self.offset + self.input * self.output;
        &params[start..start + self.output]
    }

    fn len(&self) -> usize {
        (self.input + 1) * self.output
    }
}

/// Fully connected network with all parameters in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass, needed by backprop.
#[derive(Debug, Clone)]
pub struct Trace {
    input: Vec<f64>,
    outputs: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map_or(&self.input, Vec::as_slice)
    }
}

impl DenseNet {
    /// Zero-initialized network with layer widths `dims`; every layer but the
    /// last uses `hidden`.
    pub fn new(dims: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!("bad layer widths {dims:?}")));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        let mut offset = 0;
        for (l, pair) in dims.windows(2).enumerate() {
            let layer = Layer {
                input: pair[0],
                output: pair[1],
                activation: if l + 2 == dims.len() { output } else { hidden },
                offset,
            };
            offset += layer.len();
            layers.push(layer);
        }
        Ok(Self {
            layers,
            params: vec![0.0; offset],
        })
    }

    /// ReLU hidden layers, linear output, Glorot-uniform weights, zero biases.
    pub fn mlp<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::new(dims, Activation::Relu, Activation::Identity)?;
        net.init_glorot(rng);
        Ok(net)
    }

    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for layer in &self.layers {
            let r = (6.0 / (layer.input + layer.output) as f64).sqrt();
            let n = layer.input * layer.output;
            for w in &mut self.params[layer.offset..layer.offset + n] {
                *w = rng.random_range(-r..=r);
            }
            for b in &mut self.params[layer.offset + n..layer.offset + layer.len()] {
                *b = 0.0;
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.output))
            .collect()
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a network with {}",
                params.len(),
                self.params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Sets layer `l` from an `output x input` weight matrix and a bias.
    pub fn set_layer(&mut self, l: usize, weights: &[Vec<f64>], bias: &[f64]) -> Result<()> {
        let layer = self
            .layers
            .get(l)
            .ok_or_else(|| Error::DimensionMismatch(format!("no layer {l}")))?
            .clone();
        if weights.len() != layer.output
            || weights.iter().any(|r| r.len() != layer.input)
            || bias.len() != layer.output
        {
            return Err(Error::DimensionMismatch(format!(
                "layer {l} is {}x{}",
                layer.output, layer.input
            )));
        }
        for (j, row) in weights.iter().enumerate() {
            for (i, &w) in row.iter().enumerate() {
                self.params[layer.offset + i * layer.output + j] = w;
            }
        }
        let start = layer.offset + layer.input * layer.output;
        self.params[start..start + layer.output].copy_from_slice(bias);
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input of length {} for a network taking {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.outputs.pop().unwrap_or_default())
    }

    /// Forward pass over a `[in]` vector or a `[batch, in]` matrix.
    pub fn forward_tensor(&self, x: &Tensor) -> Result<Tensor> {
        match x.shape() {
            [_] => Tensor::vector(self.forward(x.values())?),
            [b, _] => {
                let mut out = Vec::with_capacity(b * self.output_dim());
                for row in x.values().chunks(self.input_dim().max(1)) {
                    out.extend(self.forward(row)?);
                }
                Tensor::new(vec![*b, self.output_dim()], out)
            }
            s => Err(Error::DimensionMismatch(format!("unsupported input shape {s:?}"))),
        }
    }

    pub fn trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let pre = self.affine(0, x);
        Ok(self.trace_from_preactivation(x.to_vec(), pre))
    }

    /// `b + W^T x` for layer `l`, skipping zero inputs.
    fn affine(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let layer = &self.layers[l];
        let w = layer.weights(&self.params);
        let mut out = layer.bias(&self.params).to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = &w[i * layer.output..(i + 1) * layer.output];
                for (o, &wij) in out.iter_mut().zip(row) {
                    *o += xi * wij;
                }
            }
        }
        out
    }

    /// Finishes a forward pass given the first layer's pre-activation.
    /// `input` may be left empty when the caller handles first-layer
    /// gradients itself.
    pub(crate) fn trace_from_preactivation(&self, input: Vec<f64>, mut pre: Vec<f64>) -> Trace {
        let mut outputs = Vec::with_capacity(self.layers.len());
        self.layers[0].activation.apply(&mut pre);
        outputs.push(pre);
        for l in 1..self.layers.len() {
            let mut h = self.affine(l, &outputs[l - 1]);
            self.layers[l].activation.apply(&mut h);
            outputs.push(h);
        }
        Trace { input, outputs }
    }

    /// Row `i` of layer `l`'s input-major weights: the contribution of
    /// input `i` to every output.
    pub(crate) fn weight_row(&self, l: usize, i: usize) -> &[f64] {
        let layer = &self.layers[l];
        &layer.weights(&self.params)[i * layer.output..(i + 1) * layer.output]
    }

    pub(crate) fn bias(&self, l: usize) -> &[f64] {
        self.layers[l].bias(&self.params)
    }

    pub(crate) fn layer_offset(&self, l: usize) -> usize {
        self.layers[l].offset
    }

    pub(crate) fn width(&self, l: usize) -> usize {
        self.layers[l].output
    }

    /// Backprop from `upstream = dL/d(output)` down to the first layer's
    /// pre-activation. Gradients of every layer above the first are added
    /// into `grads`.
    pub(crate) fn backward_to_first_preactivation(
        &self,
        trace: &Trace,
        upstream: &[f64],
        grads: &mut [f64],
    ) -> Vec<f64> {
        let mut delta = upstream.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if layer.activation == Activation::Relu {
                for (d, &h) in delta.iter_mut().zip(&trace.outputs[l]) {
                    if h <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let x = &trace.outputs[l - 1];
            delta = self.accumulate_layer(l, x, &delta, grads, true);
        }
        delta
    }

    /// Adds layer `l`'s weight and bias gradients for pre-activation
    /// gradient `delta` and returns the input gradient if asked.
    pub(crate) fn accumulate_layer(
        &self,
        l: usize,
        x: &[f64],
        delta: &[f64],
        grads: &mut [f64],
        want_input: bool,
    ) -> Vec<f64> {
        let layer = &self.layers[l];
        let (out, off) = (layer.output, layer.offset);
        let w = layer.weights(&self.params);
        let bias_start = off + layer.input * out;
        for (g, &d) in grads[bias_start..bias_start + out].iter_mut().zip(delta) {
            *g += d;
        }
        let mut dx = if want_input { vec![0.0; layer.input] } else { Vec::new() };
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let g = &mut grads[off + i * out..off + (i + 1) * out];
                for (gij, &d) in g.iter_mut().zip(delta) {
                    *gij += xi * d;
                }
            }
            if want_input {
                let row = &w[i * out..(i + 1) * out];
                dx[i] = row.iter().zip(delta).map(|(a, b)| a * b).sum();
            }
        }
        dx
    }

    /// Adds `d(upstream · output)/dθ` into `grads` and returns the input
    /// gradient.
    pub fn backward(&self, trace: &Trace, upstream: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        self.backward_impl(trace, upstream, grads, true)
    }

    /// [`DenseNet::backward`] without the input gradient.
    pub fn accumulate_grads(&self, trace: &Trace, upstream: &[f64], grads: &mut [f64]) -> Result<()> {
        self.backward_impl(trace, upstream, grads, false).map(|_| ())
    }

    fn backward_impl(
        &self,
        trace: &Trace,
        upstream: &[f64],
        grads: &mut [f64],
        want_input: bool,
    ) -> Result<Vec<f64>> {
        if upstream.len() != self.output_dim() || grads.len() != self.params.len() {
            return Err(Error::DimensionMismatch(format!(
                "upstream {} / grads {} for a {}-output net with {} parameters",
                upstream.len(),
                grads.len(),
                self.output_dim(),
                self.params.len()
            )));
        }
        if trace.input.len() != self.input_dim() || trace.outputs.len() != self.layers.len() {
            return Err(Error::DimensionMismatch("trace from a different network".into()));
        }
        let delta = self.backward_to_first_preactivation(trace, upstream, grads);
        Ok(self.accumulate_layer(0, &trace.input, &delta, grads, want_input))
    }
}
