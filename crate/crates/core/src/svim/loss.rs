use super::{ExperienceBatch, ModelGrads, SvimModel};
use crate::error::Result;
use crate::gridworld::{render, rollout, ActionSequence, EnvState, GridSpec, Observation};

/// Mean negative log-likelihood `-(1/B) Σ log q(a | s, s')` and its
/// gradient with respect to the decoder and representation.
pub fn decoder_loss(model: &SvimModel, batch: &ExperienceBatch) -> Result<(f64, ModelGrads)> {
    let mut grads = ModelGrads::zeros(model);
    let scale = 1.0 / batch.len() as f64;
    let f = model.config.features;
    let mut loss = 0.0;
    for e in batch.items() {
        let ts = model.features(&e.obs)?;
        let tn = model.features(&e.next_obs)?;
        let cond = SvimModel::pair(&ts, &tn);
        let (lp, dcond) = model.decoder.logprob_grad(&cond, &e.seq, -scale, &mut grads.decoder)?;
        loss -= scale * lp;
        model.repr.accumulate_grads(&ts, &dcond[..f], &mut grads.repr)?;
        model.repr.accumulate_grads(&tn, &dcond[f..], &mut grads.repr)?;
    }
    Ok((loss, grads))
}

/// Source loss together with the batch mean of `ψ(s)`.
pub(crate) fn source_loss_with_psi(
    model: &SvimModel,
    batch: &ExperienceBatch,
) -> Result<(f64, ModelGrads, f64)> {
    let mut grads = ModelGrads::zeros(model);
    let scale = 1.0 / batch.len() as f64;
    let beta = model.beta();
    let mut loss = 0.0;
    let mut psi_sum = 0.0;
    for e in batch.items() {
        let ts = model.features(&e.obs)?;
        let tn = model.features(&e.next_obs)?;
        // The decoder is a fixed target here: no gradient flows through it.
        let target = beta * model.decoder.logprob(&SvimModel::pair(&ts, &tn), &e.seq)?;
        let fs = ts.output();
        let log_h = model.source.logprob(fs, &e.seq)?;
        let psi_trace = model.psi.trace(fs)?;
        let psi = psi_trace.output()[0];
        psi_sum += psi;
        let r = target - log_h - psi;
        loss += scale * r * r;
        let g = -2.0 * scale * r;
        let (_, mut dfeat) = model.source.logprob_grad(fs, &e.seq, g, &mut grads.source)?;
        let dpsi = model.psi.backward(&psi_trace, &[g], &mut grads.psi)?;
        for (a, b) in dfeat.iter_mut().zip(&dpsi) {
            *a += b;
        }
        model.repr.accumulate_grads(&ts, &dfeat, &mut grads.repr)?;
    }
    Ok((loss, grads, psi_sum * scale))
}

/// `(1/B) Σ (β log q(a | s, s') - log h(a | s) - ψ(s))^2` and its gradient
/// with respect to the source, ψ and the representation. The decoder part
/// of the returned gradient is identically zero.
pub fn source_loss(model: &SvimModel, batch: &ExperienceBatch) -> Result<(f64, ModelGrads)> {
    source_loss_with_psi(model, batch).map(|(l, g, _)| (l, g))
}

/// `u(s, a) = log q(a | s, s')` at the deterministic outcome of `seq`.
pub fn energy(model: &SvimModel, spec: &GridSpec, s: &EnvState, seq: &ActionSequence) -> Result<f64> {
    let next = rollout(spec, s, seq)?;
    let ts = model.features(&render(spec, s)?)?;
    let tn = model.features(&render(spec, &next)?)?;
    model.decoder.logprob(&SvimModel::pair(&ts, &tn), seq)
}

/// `ψ(s) / β` in nats.
pub fn empowerment_estimate(model: &SvimModel, obs: &Observation) -> Result<f64> {
    Ok(model.psi_value(obs)? / model.beta())
}
