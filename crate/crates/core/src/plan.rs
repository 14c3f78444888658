//! Empowerment maps and the one-step greedy empowerment policy.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{blahut_arimoto, build_channel, path_count_channel, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::gridworld::{enumerate_states, render, step, Action, EnvState, GridSpec, DEFAULT_STATE_CAP};
use crate::svim::{empowerment_estimate, SvimModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    PathCount,
    BlahutArimoto,
    Variational,
}

/// Something that assigns an empowerment value to a state.
#[derive(Debug, Clone, Copy, Default)]
pub enum Estimator<'a> {
    /// `log n(s)`; deterministic environments only.
    #[default]
    PathCount,
    BlahutArimoto { tol: f64, max_iter: usize },
    /// `ψ(s) / β` from a trained model. The horizon is the model's.
    Variational(&'a SvimModel),
}

impl<'a> Estimator<'a> {
    pub fn blahut_arimoto() -> Self {
        Estimator::BlahutArimoto {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::PathCount => EstimatorKind::PathCount,
            Estimator::BlahutArimoto { .. } => EstimatorKind::BlahutArimoto,
            Estimator::Variational(_) => EstimatorKind::Variational,
        }
    }

    /// Empowerment of `s` in nats over `horizon` steps.
    pub fn evaluate(&self, spec: &GridSpec, s: &EnvState, horizon: usize) -> Result<f64> {
        match *self {
            Estimator::PathCount => Ok(path_count_channel(&build_channel(spec, s, horizon)?.channel)?.nats),
            Estimator::BlahutArimoto { tol, max_iter } => {
                Ok(blahut_arimoto(&build_channel(spec, s, horizon)?.channel, tol, max_iter)?.capacity)
            }
            Estimator::Variational(model) => {
                if model.horizon() != horizon {
                    return Err(Error::InvalidArgument(format!(
                        "model was trained for horizon {}, asked for {horizon}",
                        model.horizon()
                    )));
                }
                empowerment_estimate(model, &render(spec, s)?)
            }
        }
    }
}

/// Empowerment of every enumerated state, in enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpowermentMap {
    pub estimator: EstimatorKind,
    pub horizon: usize,
    pub states: Vec<EnvState>,
    pub values: Vec<f64>,
}

impl EmpowermentMap {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, s: &EnvState) -> Option<f64> {
        self.states.iter().position(|t| t == s).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EnvState, f64)> {
        self.states.iter().zip(self.values.iter().copied())
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// States within `tol` of the maximum.
    pub fn argmax(&self, tol: f64) -> Vec<&EnvState> {
        let m = self.max_value();
        self.iter().filter(|(_, v)| *v >= m - tol).map(|(s, _)| s).collect()
    }

    pub fn lookup(&self) -> HashMap<EnvState, f64> {
        self.iter().map(|(s, v)| (s.clone(), v)).collect()
    }
}

/// Evaluates `estimator` at every state reachable from the spec's initial
/// state. Start states are independent and run in parallel on the current
/// rayon pool; the result does not depend on the thread count.
pub fn compute_map(spec: &GridSpec, estimator: &Estimator<'_>, horizon: usize) -> Result<EmpowermentMap> {
    compute_map_with_cap(spec, estimator, horizon, DEFAULT_STATE_CAP)
}

pub fn compute_map_with_cap(
    spec: &GridSpec,
    estimator: &Estimator<'_>,
    horizon: usize,
    cap: usize,
) -> Result<EmpowermentMap> {
    let states = enumerate_states(spec, cap)?;
    let values = states
        .par_iter()
        .map(|s| estimator.evaluate(spec, s, horizon))
        .collect::<Result<Vec<f64>>>()?;
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("estimator returned {v}")));
    }
    Ok(EmpowermentMap {
        estimator: estimator.kind(),
        horizon,
        states,
        values,
    })
}

/// Greedy one-step empowerment maximisation. Values are memoized per state,
/// so a precomputed map can seed the cache.
#[derive(Debug, Clone)]
pub struct GreedyPolicy<'a> {
    estimator: Estimator<'a>,
    horizon: usize,
    cache: HashMap<EnvState, f64>,
}

impl<'a> GreedyPolicy<'a> {
    pub fn new(estimator: Estimator<'a>, horizon: usize) -> Self {
        Self {
            estimator,
            horizon,
            cache: HashMap::new(),
        }
    }

    pub fn with_map(estimator: Estimator<'a>, map: &EmpowermentMap) -> Self {
        Self {
            estimator,
            horizon: map.horizon,
            cache: map.lookup(),
        }
    }

    pub fn value(&mut self, spec: &GridSpec, s: &EnvState) -> Result<f64> {
        if let Some(&v) = self.cache.get(s) {
            return Ok(v);
        }
        let v = self.estimator.evaluate(spec, s, self.horizon)?;
        self.cache.insert(s.clone(), v);
        Ok(v)
    }

    /// Best action and the value of its successor. Dynamics are
    /// deterministic, so `E_{p(s'|s,a)} E(s')` is just `E(step(s, a))`.
    /// Ties go to the earliest action in `Up, Down, Left, Right, Stay`.
    pub fn choose(&mut self, spec: &GridSpec, s: &EnvState) -> Result<(Action, f64)> {
        let mut best: Option<(Action, f64)> = None;
        for a in Action::ALL {
            let v = self.value(spec, &step(spec, s, a)?)?;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((a, v));
            }
        }
        Ok(best.expect("five actions"))
    }
}

pub fn greedy_action(spec: &GridSpec, s: &EnvState, policy: &mut GreedyPolicy<'_>) -> Result<Action> {
    policy.choose(spec, s).map(|(a, _)| a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `steps + 1` states, starting with the start state.
    pub states: Vec<EnvState>,
    pub actions: Vec<Action>,
    /// Value of the successor chosen at each step.
    pub values: Vec<f64>,
}

pub fn run_agent(spec: &GridSpec, start: &EnvState, policy: &mut GreedyPolicy<'_>, steps: usize) -> Result<Trajectory> {
    spec.validate_state(start)?;
    let mut t = Trajectory {
        states: vec![start.clone()],
        actions: Vec::with_capacity(steps),
        values: Vec::with_capacity(steps),
    };
    let mut s = start.clone();
    for _ in 0..steps {
        let (a, v) = policy.choose(spec, &s)?;
        s = step(spec, &s, a)?;
        t.states.push(s.clone());
        t.actions.push(a);
        t.values.push(v);
    }
    Ok(t)
}

/// `x,y,inventory,value`, sorted by inventory label, then row, then column.
pub fn write_heatmap_csv<W: Write>(out: W, map: &EmpowermentMap, scale: f64) -> Result<()> {
    let mut rows: Vec<(String, usize, usize, f64)> = map
        .iter()
        .map(|(s, v)| (s.inventory_label(), s.agent.y, s.agent.x, v * scale))
        .collect();
    rows.sort_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "inventory", "value"])?;
    for (inv, y, x, v) in rows {
        w.write_record([x.to_string(), y.to_string(), inv, format!("{v:.12}")])?;
    }
    w.flush()?;
    Ok(())
}

/// The map restricted to one inventory state, laid out on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSlice {
    pub inventory: String,
    pub width: usize,
    pub height: usize,
    /// Row-major; `None` where no state of this inventory puts the agent.
    pub values: Vec<Option<f64>>,
}

/// One slice per distinct inventory label, in label order.
pub fn heatmap_slices(spec: &GridSpec, map: &EmpowermentMap) -> Vec<HeatmapSlice> {
    let mut by_label: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    let (w, h) = (spec.width(), spec.height());
    for (s, v) in map.iter() {
        let cells = by_label.entry(s.inventory_label()).or_insert_with(|| vec![None; w * h]);
        cells[s.agent.y * w + s.agent.x] = Some(v);
    }
    by_label
        .into_iter()
        .map(|(inventory, values)| HeatmapSlice {
            inventory,
            width: w,
            height: h,
            values,
        })
        .collect()
}

/// How grey levels in a heatmap image map back to nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub inventory: String,
    pub width: usize,
    pub height: usize,
    pub estimator: EstimatorKind,
    pub horizon: usize,
    /// Value shown as grey level 1.
    pub min: f64,
    /// Value shown as grey level 255.
    pub max: f64,
    /// Grey level of cells the agent cannot occupy.
    pub empty_level: u8,
    pub normalization: String,
}

/// Binary PGM, one pixel per cell. Occupiable cells get
/// `1 + round(254 (v - min) / (max - min))`, every other cell 0. A constant
/// slice is drawn at 255.
pub fn write_pgm<W: Write>(mut out: W, slice: &HeatmapSlice, map: &EmpowermentMap) -> Result<PgmSidecar> {
    let present = slice.values.iter().flatten().copied();
    let min = present.clone().fold(f64::INFINITY, f64::min);
    let max = present.fold(f64::NEG_INFINITY, f64::max);
    let pixels: Vec<u8> = slice
        .values
        .iter()
        .map(|v| match v {
            None => 0,
            Some(_) if !(max > min) => 255,
            Some(v) => 1 + (254.0 * (v - min) / (max - min)).round() as u8,
        })
        .collect();
    write!(out, "P5\n{} {}\n255\n", slice.width, slice.height)?;
    out.write_all(&pixels)?;
    out.flush()?;
    Ok(PgmSidecar {
        inventory: slice.inventory.clone(),
        width: slice.width,
        height: slice.height,
        estimator: map.estimator,
        horizon: map.horizon,
        min,
        max,
        empty_level: 0,
        normalization: "min-max over occupiable cells to grey levels 1..=255".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{layouts, Cell};

    #[test]
    fn single_cell_room_is_zero() {
        let g = layouts::empty_room(3, 3).unwrap();
        let m = compute_map(&g, &Estimator::PathCount, 3).unwrap();
        assert_eq!(m.values, vec![0.0]);
    }

    #[test]
    fn empty_room_map_is_symmetric() {
        let g = layouts::empty_room(8, 8).unwrap();
        let m = compute_map(&g, &Estimator::PathCount, 3).unwrap();
        let v = m.lookup();
        for (s, e) in m.iter() {
            let Cell { x, y } = s.agent;
            for c in [Cell::new(7 - x, y), Cell::new(x, 7 - y), Cell::new(y, x)] {
                assert_eq!(v[&g.state_at(c)], e);
            }
        }
    }

    #[test]
    fn ba_map_matches_path_count() {
        let g = layouts::two_rooms_default(7, 7).unwrap();
        let pc = compute_map(&g, &Estimator::PathCount, 2).unwrap();
        let ba = compute_map(&g, &Estimator::blahut_arimoto(), 2).unwrap();
        assert_eq!(pc.states, ba.states);
        for (a, b) in pc.values.iter().zip(&ba.values) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(ba.estimator, EstimatorKind::BlahutArimoto);
    }

    #[test]
    fn ties_go_to_up() {
        let g = layouts::empty_room(3, 3).unwrap();
        let mut p = GreedyPolicy::new(Estimator::PathCount, 2);
        assert_eq!(greedy_action(&g, &g.initial_state(), &mut p).unwrap(), Action::Up);
    }

    #[test]
    fn moves_toward_center() {
        let g = layouts::empty_room(9, 9).unwrap();
        let mut p = GreedyPolicy::new(Estimator::PathCount, 3);
        let center = g.state_at(Cell::new(4, 4));
        for (c, want) in [
            (Cell::new(4, 3), Action::Down),
            (Cell::new(4, 5), Action::Up),
            (Cell::new(3, 4), Action::Right),
            (Cell::new(5, 4), Action::Left),
        ] {
            assert_eq!(greedy_action(&g, &g.state_at(c), &mut p).unwrap(), want);
        }
        assert_eq!(greedy_action(&g, &center, &mut p).unwrap(), Action::Stay);
    }

    #[test]
    fn zero_steps_and_fixed_points() {
        let g = layouts::empty_room(9, 9).unwrap();
        let mut p = GreedyPolicy::new(Estimator::PathCount, 3);
        let s = g.state_at(Cell::new(1, 1));
        assert_eq!(run_agent(&g, &s, &mut p, 0).unwrap().states, vec![s.clone()]);
        let t = run_agent(&g, &s, &mut p, 20).unwrap();
        let last = t.states.last().unwrap();
        assert_eq!(last.agent, Cell::new(4, 4));
        assert!(t.states[t.states.len() - 5..].iter().all(|x| x == last));
    }

    #[test]
    fn argmax_invariant_under_monotone_maps() {
        let g = layouts::two_rooms_default(9, 9).unwrap();
        let m = compute_map(&g, &Estimator::PathCount, 3).unwrap();
        let mut warped = m.clone();
        warped.values = m.values.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
        let mut a = GreedyPolicy::with_map(Estimator::PathCount, &m);
        let mut b = GreedyPolicy::with_map(Estimator::PathCount, &warped);
        for s in &m.states {
            assert_eq!(greedy_action(&g, s, &mut a).unwrap(), greedy_action(&g, s, &mut b).unwrap());
        }
    }

    #[test]
    fn csv_and_pgm() {
        let g = layouts::empty_room(4, 4).unwrap();
        let m = compute_map(&g, &Estimator::PathCount, 1).unwrap();
        let mut buf = Vec::new();
        write_heatmap_csv(&mut buf, &m, 1.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,inventory,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,1,key=0;door=0,1.0986"));

        let slices = heatmap_slices(&g, &m);
        assert_eq!(slices.len(), 1);
        let mut img = Vec::new();
        let side = write_pgm(&mut img, &slices[0], &m).unwrap();
        let header = b"P5\n4 4\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 16);
        assert_eq!(px[0], 0);
        // Every free cell of a 2x2 room has three reachable outcomes.
        assert_eq!(px[5], 255);
        assert_eq!(side.min, side.max);
    }
}
