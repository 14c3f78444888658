use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use empowerment::channel::{
    blahut_arimoto, build_channel, path_count_channel, read_channel_csv, write_source_csv, CapacityRecord,
    DiscreteChannel, SourceDist,
};
use empowerment::gridworld::{render, EnvState, GridSpec, Observation};
use empowerment::particles::{is_capacity, write_history_csv};
use empowerment::plan::{
    compute_map, heatmap_slices, run_agent, write_heatmap_csv, write_pgm, Estimator, GreedyPolicy,
};
use empowerment::svim::{empowerment_estimate, svim_train_with, SvimModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Solver};
use crate::error::CliError;

/// More inventory slices than this and only the start state's slice is
/// drawn as an image.
pub const MAX_PGM_SLICES: usize = 16;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub bits: bool,
    pub quiet: bool,
}

impl RunOptions {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn show(&self, nats: f64) -> String {
        if self.bits {
            format!("{:.6} bits", nats / std::f64::consts::LN_2)
        } else {
            format!("{nats:.6} nats")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the effective configuration serialized as TOML.
    pub config_hash: String,
    pub artifact_version: String,
    /// Paths relative to the output directory, excluding the manifest.
    pub files: Vec<String>,
    pub wall_clock_secs: f64,
    pub seed: u64,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Tracks every file a command writes.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn finish(self, command: &str, cfg: &ExperimentConfig, started: Instant) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash: config_hash(cfg)?,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            files: self.files,
            wall_clock_secs: started.elapsed().as_secs_f64(),
            seed: cfg.seed,
        };
        let mut w = BufWriter::new(File::create(self.dir.join(MANIFEST_NAME))?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(manifest)
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> Result<String, CliError> {
    Ok(hex::encode(Sha256::digest(cfg.to_toml()?.as_bytes())))
}

fn load_model(cfg: &ExperimentConfig) -> Result<SvimModel, CliError> {
    let path = cfg
        .snapshot
        .as_ref()
        .ok_or_else(|| CliError::Config("solver \"svim\" needs `snapshot` pointing at a trained model".into()))?;
    let file = File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open snapshot {}: {e}", path.display())))?;
    Ok(SvimModel::load(std::io::BufReader::new(file))?)
}

fn estimator<'a>(cfg: &ExperimentConfig, model: Option<&'a SvimModel>) -> Result<Estimator<'a>, CliError> {
    Ok(match cfg.solver {
        Solver::Pathcount => Estimator::PathCount,
        Solver::Ba => {
            let ba = cfg.ba.clone().unwrap_or_default();
            Estimator::BlahutArimoto {
                tol: ba.tol,
                max_iter: ba.max_iter,
            }
        }
        Solver::Svim => Estimator::Variational(model.expect("model loaded for svim")),
        Solver::Particles => {
            return Err(CliError::Config(
                "solver \"particles\" only supports the capacity command".into(),
            ))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub solver: Solver,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<EnvState>,
    /// Nats.
    pub capacity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<Vec<f64>>,
}

/// Capacity at one start state, or of an explicit channel.
pub fn cmd_capacity(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CapacityReport, CliError> {
    let started = Instant::now();
    let horizon = cfg.horizon();
    let (channel, start, seq_horizon): (Option<DiscreteChannel>, Option<EnvState>, Option<usize>) =
        match (&cfg.channel, cfg.solver) {
            (Some(_), Solver::Svim) => {
                return Err(CliError::Config("solver \"svim\" cannot read a channel file".into()))
            }
            (Some(path), _) => {
                let file = File::open(path)
                    .map_err(|e| CliError::Config(format!("cannot open channel {}: {e}", path.display())))?;
                (Some(read_channel_csv(file)?), None, None)
            }
            (None, _) => {
                let spec = cfg.build_env()?;
                let s = cfg.start_state(&spec)?;
                let ch = match cfg.solver {
                    Solver::Svim => None,
                    _ => Some(build_channel(&spec, &s, horizon)?.channel),
                };
                (ch, Some(s), Some(horizon))
            }
        };

    let mut out = Outputs::new(&opts.out)?;
    let mut report = CapacityReport {
        solver: cfg.solver,
        horizon: seq_horizon,
        start: start.clone(),
        capacity: 0.0,
        iterations: None,
        converged: None,
        source: None,
    };
    let mut source: Option<SourceDist> = None;
    match (cfg.solver, &channel) {
        (Solver::Pathcount, Some(ch)) => {
            let pc = path_count_channel(ch)?;
            report.capacity = pc.nats;
            source = Some(pc.source);
        }
        (Solver::Ba, Some(ch)) => {
            let ba = cfg.ba.clone().unwrap_or_default();
            let r = blahut_arimoto(ch, ba.tol, ba.max_iter)?;
            let rec = CapacityRecord::from(&r);
            report.capacity = rec.capacity;
            report.iterations = Some(rec.iterations);
            report.converged = Some(rec.converged);
            source = Some(r.source);
        }
        (Solver::Particles, Some(ch)) => {
            let is = cfg.particles.clone().expect("validated");
            let r = is_capacity(ch, &is)?;
            report.capacity = r.estimate;
            report.iterations = Some(r.history.len());
            let mut w = vec![0.0; ch.rows()];
            for (&row, lw) in r.sequences.iter().zip(&r.log_weights) {
                w[row] = lw.exp();
            }
            source = Some(SourceDist::from_weights(&w)?);
            write_history_csv(out.create("particles_history.csv")?, &r.history)?;
        }
        (Solver::Svim, _) => {
            let model = load_model(cfg)?;
            let spec = cfg.build_env()?;
            let s = start.as_ref().expect("environment start");
            report.horizon = Some(model.horizon());
            report.capacity = empowerment_estimate(&model, &render(&spec, s)?)?;
        }
        (_, None) => unreachable!("exact solvers always have a channel"),
    }
    if let Some(src) = &source {
        write_source_csv(out.create("source.csv")?, src, seq_horizon)?;
        report.source = Some(src.probs().to_vec());
    }
    let mut w = out.create("capacity.json")?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    out.finish("capacity", cfg, started)?;
    opts.say(format!("capacity: {}", opts.show(report.capacity)));
    Ok(report)
}

/// Map of every reachable state, as CSV plus one PGM per inventory slice.
pub fn cmd_heatmap(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let spec = cfg.build_env()?;
    let model = match cfg.solver {
        Solver::Svim => Some(load_model(cfg)?),
        _ => None,
    };
    let est = estimator(cfg, model.as_ref())?;
    let horizon = model.as_ref().map_or(cfg.horizon(), |m| m.horizon());
    let map = compute_map(&spec, &est, horizon)?;

    let mut out = Outputs::new(&opts.out)?;
    write_heatmap_csv(out.create("heatmap.csv")?, &map, 1.0)?;
    let mut slices = heatmap_slices(&spec, &map);
    if slices.len() > MAX_PGM_SLICES {
        let label = cfg.start_state(&spec)?.inventory_label();
        slices.retain(|s| s.inventory == label);
    }
    for (i, slice) in slices.iter().enumerate() {
        let side = write_pgm(out.create(&format!("heatmap_{i}.pgm"))?, slice, &map)?;
        let mut w = out.create(&format!("heatmap_{i}.json"))?;
        serde_json::to_writer_pretty(&mut w, &side)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    let best = map.argmax(1e-9);
    opts.say(format!(
        "{} states, max {} at {}",
        map.len(),
        opts.show(map.max_value()),
        best.iter()
            .map(|s| format!("({},{})", s.agent.x, s.agent.y))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    out.finish("heatmap", cfg, started)
}

pub const SNAPSHOT_NAME: &str = "model.snap";
pub const TRAIN_LOG_NAME: &str = "train_log.jsonl";

pub fn cmd_train(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    if cfg.solver != Solver::Svim {
        return Err(CliError::Config("train needs solver = \"svim\"".into()));
    }
    let svim = cfg.svim.clone().expect("validated");
    let spec = cfg.build_env()?;
    let (model, log) = svim_train_with(&spec, &svim, |r| {
        opts.say(format!(
            "step {:>7}  decoder {:.4}  source {:.4}  psi {:.4}  {:.1}s",
            r.step, r.decoder_loss, r.source_loss, r.mean_psi, r.elapsed_secs
        ))
    })?;
    let mut out = Outputs::new(&opts.out)?;
    let mut w = out.create(SNAPSHOT_NAME)?;
    model.save(&mut w)?;
    w.flush()?;
    log.write_jsonl(out.create(TRAIN_LOG_NAME)?)?;
    out.finish("train", cfg, started)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    pub state: EnvState,
    /// Action taken from this state; absent for the last one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    /// Empowerment of the successor the action leads to, in nats.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

pub fn cmd_agent(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<AgentStep>, CliError> {
    let started = Instant::now();
    let spec = cfg.build_env()?;
    let model = match cfg.solver {
        Solver::Svim => Some(load_model(cfg)?),
        _ => None,
    };
    let est = estimator(cfg, model.as_ref())?;
    let horizon = model.as_ref().map_or(cfg.horizon(), |m| m.horizon());
    let agent = cfg.agent.clone().unwrap_or_default();
    let start = cfg.start_state(&spec)?;
    let mut policy = GreedyPolicy::new(est, horizon);
    let traj = run_agent(&spec, &start, &mut policy, agent.steps)?;

    let steps: Vec<AgentStep> = traj
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| AgentStep {
            state: s.clone(),
            action: traj.actions.get(i).map(|a| format!("{a:?}")),
            value: traj.values.get(i).copied(),
        })
        .collect();
    let mut out = Outputs::new(&opts.out)?;
    let mut w = out.create("trajectory.json")?;
    serde_json::to_writer_pretty(&mut w, &steps)?;
    w.write_all(b"\n")?;
    w.flush()?;
    if agent.frames {
        for (i, s) in traj.states.iter().enumerate() {
            write_frame(out.create(&format!("frames/frame_{i:04}.pgm"))?, &render(&spec, s)?)?;
        }
    }
    let last = traj.states.last().expect("start state");
    opts.say(format!(
        "{} steps, ended at ({},{}) {}",
        agent.steps,
        last.agent.x,
        last.agent.y,
        last.inventory_label()
    ));
    out.finish("agent", cfg, started)?;
    Ok(steps)
}

fn write_frame<W: Write>(mut w: W, obs: &Observation) -> Result<(), CliError> {
    let n = obs.size();
    write!(w, "P5\n{n} {n}\n255\n")?;
    let px: Vec<u8> = obs.pixels().iter().map(|x| (x * 255.0).round() as u8).collect();
    w.write_all(&px)?;
    w.flush()?;
    Ok(())
}

/// Exact reference map for a spec, used to score trained models.
pub fn exact_values(spec: &GridSpec, horizon: usize) -> Result<Vec<(EnvState, f64)>, CliError> {
    let map = compute_map(spec, &Estimator::PathCount, horizon)?;
    Ok(map.iter().map(|(s, v)| (s.clone(), v)).collect())
}
