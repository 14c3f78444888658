//! Importance-sampling approximation of the Blahut-Arimoto iteration.
//!
//! A fixed set of action sequences (particles) carries log-weights. Each
//! iteration scores every particle by a Monte Carlo estimate of the
//! divergence between its outcome distribution and the current weighted
//! mixture, then reweights. Only the weights ever change.

use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::DiscreteChannel;
use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ISConfig {
    /// Number of particles `S`.
    pub particles: usize,
    /// Future samples `J` per particle.
    pub futures: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Use every channel row once instead of drawing `S` of them.
    pub exhaustive: bool,
    /// Replace sampled futures by exact expectations. Needs `exhaustive`.
    pub analytic: bool,
}

impl Default for ISConfig {
    fn default() -> Self {
        Self {
            particles: 32,
            futures: 64,
            iterations: 200,
            seed: 0,
            exhaustive: false,
            analytic: false,
        }
    }
}

impl ISConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 || self.futures == 0 || self.iterations == 0 {
            return Err(Error::Config("particles, futures and iterations must be positive".into()));
        }
        if self.analytic && !self.exhaustive {
            return Err(Error::Config("analytic mode needs exhaustive particles".into()));
        }
        Ok(())
    }
}

/// How the expectation over outcomes is taken.
#[derive(Debug, Clone, PartialEq)]
pub enum Futures {
    /// `J` sampled outcome columns per particle.
    Sampled(Vec<Vec<usize>>),
    /// Exact expectation under each particle's channel row.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    /// Channel row of each particle.
    pub sequences: Vec<usize>,
    /// `ln α_i`, normalized.
    pub log_weights: Vec<f64>,
    pub futures: Futures,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }
}

/// Draws `S` distinct rows uniformly (or takes all rows in exhaustive mode),
/// gives them equal weight, and samples `J` outcomes for each.
pub fn init_particles<R: Rng + ?Sized>(ch: &DiscreteChannel, cfg: &ISConfig, rng: &mut R) -> Result<ParticleSet> {
    cfg.validate()?;
    if cfg.particles > ch.rows() {
        return Err(Error::InvalidArgument(format!(
            "{} particles requested from {} sequences",
            cfg.particles,
            ch.rows()
        )));
    }
    if cfg.exhaustive && cfg.particles != ch.rows() {
        return Err(Error::InvalidArgument(format!(
            "exhaustive mode needs one particle per sequence ({}), got {}",
            ch.rows(),
            cfg.particles
        )));
    }
    let sequences: Vec<usize> = if cfg.exhaustive {
        (0..ch.rows()).collect()
    } else {
        index::sample(rng, ch.rows(), cfg.particles).into_vec()
    };
    let futures = if cfg.analytic {
        Futures::Exact
    } else {
        // Round-major draws: with a fixed seed, the futures for a smaller
        // `J` are a prefix of those for a larger one.
        let mut f = vec![Vec::with_capacity(cfg.futures); sequences.len()];
        for _ in 0..cfg.futures {
            for (cols, &i) in f.iter_mut().zip(&sequences) {
                cols.push(sample_column(ch.row(i), rng));
            }
        }
        Futures::Sampled(f)
    };
    let s = sequences.len();
    Ok(ParticleSet {
        sequences,
        log_weights: vec![-(s as f64).ln(); s],
        futures,
    })
}

fn sample_column<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn check_particles(ps: &ParticleSet, ch: &DiscreteChannel) -> Result<()> {
    if ps.is_empty() || ps.log_weights.len() != ps.len() {
        return Err(Error::DimensionMismatch("particle set is empty or ragged".into()));
    }
    if let Some(&bad) = ps.sequences.iter().find(|&&i| i >= ch.rows()) {
        return Err(Error::DimensionMismatch(format!(
            "particle row {bad} outside a channel with {} rows",
            ch.rows()
        )));
    }
    if let Futures::Sampled(f) = &ps.futures {
        if f.len() != ps.len() || f.iter().flatten().any(|&c| c >= ch.cols()) {
            return Err(Error::DimensionMismatch("future samples do not match the channel".into()));
        }
    }
    Ok(())
}

/// `D_i = (1/J) Σ_k ln p(s'_k | a_i) / p_t(s'_k)` with the mixture
/// `p_t(s') = Σ_j α_j p(s' | a_j)` over the particles. In exact mode the
/// average is the expectation under `p(· | a_i)`, i.e. a KL divergence.
pub fn distortion(ps: &ParticleSet, ch: &DiscreteChannel) -> Result<Vec<f64>> {
    check_particles(ps, ch)?;
    let log_mix: Vec<f64> = (0..ch.cols())
        .map(|c| {
            log_sum_exp(
                ps.sequences
                    .iter()
                    .zip(&ps.log_weights)
                    .map(move |(&i, &lw)| lw + ch.get(i, c).ln()),
            )
        })
        .collect();
    let term = |i: usize, c: usize| -> Result<f64> {
        let lm = log_mix[c];
        if lm == f64::NEG_INFINITY {
            return Err(Error::Numeric(format!("outcome {c} has zero mixture probability")));
        }
        Ok(ch.get(i, c).ln() - lm)
    };
    match &ps.futures {
        Futures::Exact => ps
            .sequences
            .iter()
            .map(|&i| {
                ch.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(c, &p)| Ok(p * term(i, c)?))
                    .sum::<Result<f64>>()
            })
            .collect(),
        Futures::Sampled(samples) => ps
            .sequences
            .iter()
            .zip(samples)
            .map(|(&i, cols)| {
                let total: f64 = cols.iter().map(|&c| term(i, c)).sum::<Result<f64>>()?;
                Ok(total / cols.len() as f64)
            })
            .collect(),
    }
}

/// `ln α'_i = ln α_i + D_i - ln Σ_j α_j exp D_j`.
pub fn weight_update(ps: &ParticleSet, d: &[f64]) -> Result<ParticleSet> {
    if d.len() != ps.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} distortions for {} particles",
            d.len(),
            ps.len()
        )));
    }
    let shifted: Vec<f64> = ps.log_weights.iter().zip(d).map(|(l, x)| l + x).collect();
    let norm = log_sum_exp(shifted.iter().copied());
    if !norm.is_finite() {
        return Err(Error::Numeric(format!("weight normalizer is {norm}")));
    }
    let log_weights: Vec<f64> = shifted.iter().map(|s| s - norm).collect();
    let total: f64 = log_weights.iter().map(|l| l.exp()).sum();
    if (total - 1.0).abs() > WEIGHT_TOL || log_weights.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric(format!("weights sum to {total} after update")));
    }
    Ok(ParticleSet {
        log_weights,
        ..ps.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ISResult {
    /// `Σ α_i D_i` at the last iteration, in nats.
    pub estimate: f64,
    /// The estimate at every iteration, computed before that iteration's update.
    pub history: Vec<f64>,
    /// Final weights.
    pub log_weights: Vec<f64>,
    pub sequences: Vec<usize>,
}

pub fn is_capacity(ch: &DiscreteChannel, cfg: &ISConfig) -> Result<ISResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ps = init_particles(ch, cfg, &mut rng)?;
    let mut history = Vec::with_capacity(cfg.iterations);
    for t in 0..cfg.iterations {
        let d = distortion(&ps, ch)?;
        history.push(ps.weights().iter().zip(&d).map(|(a, x)| a * x).sum());
        if t + 1 < cfg.iterations {
            ps = weight_update(&ps, &d)?;
        }
    }
    Ok(ISResult {
        estimate: *history.last().expect("iterations > 0"),
        history,
        log_weights: ps.log_weights,
        sequences: ps.sequences,
    })
}

/// `iteration,estimate` rows.
pub fn write_history_csv<W: Write>(out: W, history: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "estimate"])?;
    for (t, e) in history.iter().enumerate() {
        w.write_record([t.to_string(), format!("{e:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::channel::{ba_update, SourceDist};

    fn identity(n: usize) -> DiscreteChannel {
        DiscreteChannel::from_targets(&(0..n).collect::<Vec<_>>(), n).unwrap()
    }

    fn exhaustive(ch: &DiscreteChannel, analytic: bool, futures: usize) -> ISConfig {
        ISConfig {
            particles: ch.rows(),
            futures,
            iterations: 50,
            seed: 3,
            exhaustive: true,
            analytic,
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn exhaustive_draw_covers_every_sequence() {
        let ch = identity(6);
        let ps = init_particles(&ch, &exhaustive(&ch, false, 4), &mut rng()).unwrap();
        assert_eq!(ps.sequences, (0..6).collect::<Vec<_>>());
        let sampled = init_particles(&ch, &ISConfig { particles: 6, ..Default::default() }, &mut rng()).unwrap();
        let mut seen = sampled.sequences.clone();
        seen.sort();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn too_many_particles_rejected() {
        let ch = identity(4);
        let cfg = ISConfig { particles: 5, ..Default::default() };
        assert!(matches!(init_particles(&ch, &cfg, &mut rng()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn deterministic_rows_give_identical_futures() {
        let ch = DiscreteChannel::from_targets(&[2, 0, 2, 1], 3).unwrap();
        let ps = init_particles(&ch, &ISConfig { particles: 3, futures: 9, ..Default::default() }, &mut rng()).unwrap();
        let Futures::Sampled(f) = &ps.futures else { panic!() };
        for (i, cols) in ps.sequences.iter().zip(f) {
            assert!(cols.iter().all(|&c| ch.get(*i, c) == 1.0));
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let ch = DiscreteChannel::from_rows(&[vec![0.3, 0.7], vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        let cfg = ISConfig { particles: 2, futures: 7, ..Default::default() };
        let a = init_particles(&ch, &cfg, &mut rng()).unwrap();
        let b = init_particles(&ch, &cfg, &mut rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn futures_nest_across_sample_sizes() {
        let ch = DiscreteChannel::from_rows(&[vec![0.3, 0.7], vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        let draw = |j| {
            let cfg = ISConfig { particles: 3, futures: j, exhaustive: true, ..Default::default() };
            match init_particles(&ch, &cfg, &mut rng()).unwrap().futures {
                Futures::Sampled(f) => f,
                Futures::Exact => unreachable!(),
            }
        };
        let (small, large) = (draw(5), draw(12));
        for (a, b) in small.iter().zip(&large) {
            assert_eq!(a[..], b[..5]);
        }
    }

    #[test]
    fn single_particle_has_zero_distortion() {
        let ch = DiscreteChannel::from_rows(&[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        let ps = init_particles(&ch, &ISConfig { particles: 1, futures: 20, ..Default::default() }, &mut rng()).unwrap();
        assert!(distortion(&ps, &ch).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn identical_rows_have_zero_distortion() {
        let ch = DiscreteChannel::from_rows(&vec![vec![0.1, 0.6, 0.3]; 4]).unwrap();
        for analytic in [false, true] {
            let ps = init_particles(&ch, &exhaustive(&ch, analytic, 16), &mut rng()).unwrap();
            assert!(distortion(&ps, &ch).unwrap().iter().all(|d| d.abs() < 1e-14));
            assert!(is_capacity(&ch, &exhaustive(&ch, analytic, 16)).unwrap().estimate.abs() < 1e-14);
        }
    }

    #[test]
    fn identity_channel_distortion_is_log_n() {
        // p(s'|a_i) = 1 at s' = i, mixture 1/3 there: ln(1 / (1/3)).
        let ch = identity(3);
        let ps = init_particles(&ch, &exhaustive(&ch, false, 5), &mut rng()).unwrap();
        for d in distortion(&ps, &ch).unwrap() {
            assert!((d - 3f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn equal_distortions_leave_weights() {
        let ps = ParticleSet {
            sequences: vec![0, 1, 2],
            log_weights: [0.2f64, 0.3, 0.5].iter().map(|w| w.ln()).collect(),
            futures: Futures::Exact,
        };
        let next = weight_update(&ps, &[0.7; 3]).unwrap();
        for (a, b) in ps.log_weights.iter().zip(&next.log_weights) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_uniform_is_fixed_point() {
        let ch = identity(4);
        let ps = init_particles(&ch, &exhaustive(&ch, true, 1), &mut rng()).unwrap();
        let next = weight_update(&ps, &distortion(&ps, &ch).unwrap()).unwrap();
        assert!(next.log_weights.iter().all(|l| (l + 4f64.ln()).abs() < 1e-14));
    }

    #[test]
    fn dominant_distortion_gains_weight() {
        let ps = ParticleSet {
            sequences: vec![0, 1, 2],
            log_weights: vec![-(3f64.ln()); 3],
            futures: Futures::Exact,
        };
        let next = weight_update(&ps, &[0.1, 2.0, 0.1]).unwrap();
        assert!(next.log_weights[1] > ps.log_weights[1]);
        assert!(next.log_weights[0] < ps.log_weights[0]);
    }

    #[test]
    fn identity_five_converges_to_log_five() {
        let ch = identity(5);
        let r = is_capacity(&ch, &exhaustive(&ch, false, 8)).unwrap();
        assert!((r.estimate - 5f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn analytic_mode_tracks_ba() {
        let ch = DiscreteChannel::from_rows(&[
            vec![0.7, 0.2, 0.1, 0.0],
            vec![0.1, 0.1, 0.4, 0.4],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.0, 0.0, 0.1, 0.9],
        ])
        .unwrap();
        let cfg = exhaustive(&ch, true, 1);
        let mut ps = init_particles(&ch, &cfg, &mut rng()).unwrap();
        let mut w = SourceDist::uniform(ch.rows());
        for _ in 0..30 {
            ps = weight_update(&ps, &distortion(&ps, &ch).unwrap()).unwrap();
            w = ba_update(&ch, &w).unwrap().source;
            for (l, p) in ps.log_weights.iter().zip(w.probs()) {
                assert!((l.exp() - p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn history_csv() {
        let mut buf = Vec::new();
        write_history_csv(&mut buf, &[0.5, 0.75]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,estimate");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,7.5"));
    }

    fn channel_strategy() -> impl Strategy<Value = DiscreteChannel> {
        (1usize..7, 1usize..6).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(0.01f64..1.0, c), r)
                .prop_map(|rows| {
                    let rows: Vec<Vec<f64>> = rows
                        .into_iter()
                        .map(|row| {
                            let s: f64 = row.iter().sum();
                            row.into_iter().map(|x| x / s).collect()
                        })
                        .collect();
                    DiscreteChannel::from_rows(&rows).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn updates_keep_weights_normalized(ch in channel_strategy(), seed in 0u64..1000, j in 1usize..20) {
            let cfg = ISConfig { particles: ch.rows(), futures: j, iterations: 10, seed, ..Default::default() };
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let mut ps = init_particles(&ch, &cfg, &mut r).unwrap();
            for _ in 0..10 {
                ps = weight_update(&ps, &distortion(&ps, &ch).unwrap()).unwrap();
                let total: f64 = ps.weights().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-10);
                prop_assert!(ps.weights().iter().all(|&w| w > 0.0));
            }
        }
    }
}
