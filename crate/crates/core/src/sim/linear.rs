//! Linear upper-bound systems `ṗ = (BA(t) − D)p` and
//! `p(k+1) = (BA(k) + I − D)p(k)` along sampled edge paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::environment::FixedEnvironment;
use crate::error::{Error, Result};
use crate::graph::{sample_edge_path, DynamicGraphModel, EdgePath, TimeModel};
use crate::oracle::mean_se;
use crate::rng;
use crate::threshold::EpidemicParams;

/// One sampled realization `A(·)` of a dynamic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPath {
    pub n: usize,
    /// Shared time model of the switching edges, `None` if all are static.
    pub time: Option<TimeModel>,
    pub horizon: f64,
    /// `positions[e]`: adjacency positions driven by `paths[e]`.
    pub positions: Vec<Vec<(usize, usize)>>,
    pub paths: Vec<EdgePath>,
}

/// Samples every edge over `[0, horizon]` (steps `0..=horizon` for DT).
/// Edge `e` uses a stream derived from `(seed, e)`.
pub fn sample_graph_path(graph: &DynamicGraphModel, horizon: f64, seed: u64) -> Result<GraphPath> {
    let mut positions = Vec::with_capacity(graph.edge_count());
    let mut paths = Vec::with_capacity(graph.edge_count());
    for (e, (&key, model)) in graph.edges().enumerate() {
        positions.push(graph.positions(key).collect());
        let s = rng::derive_seed(seed, &["graph-path".into(), e.into()]);
        paths.push(sample_edge_path(model, horizon, s)?);
    }
    Ok(GraphPath {
        n: graph.n(),
        time: graph.time_model(),
        horizon,
        positions,
        paths,
    })
}

impl GraphPath {
    /// `A(t)`, right-continuous at switch times.
    pub fn adjacency_at(&self, t: f64) -> nalgebra::DMatrix<f64> {
        let mut a = nalgebra::DMatrix::zeros(self.n, self.n);
        for (pos, path) in self.positions.iter().zip(&self.paths) {
            if path.value_at(t) {
                for &(i, j) in pos {
                    a[(i, j)] = 1.0;
                }
            }
        }
        a
    }

    /// The same path as a discrete-time simulation environment.
    pub fn environment(&self) -> Result<FixedEnvironment> {
        if self.time == Some(TimeModel::Ct) {
            return Err(Error::WrongTime { expected: "DT" });
        }
        let states = self
            .paths
            .iter()
            .map(|p| match p {
                EdgePath::Dt { states } => states.clone(),
                EdgePath::Ct { initial, .. } => vec![*initial],
            })
            .collect();
        Ok(FixedEnvironment::from_states(states))
    }

    /// Sorted switch times in `(0, horizon)`.
    fn switch_times(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .paths
            .iter()
            .flat_map(|p| match p {
                EdgePath::Ct { switches, .. } => switches.as_slice(),
                EdgePath::Dt { .. } => &[],
            })
            .copied()
            .filter(|&t| t > 0.0 && t < self.horizon)
            .collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }

    /// Nonzero entries `(i, j)` of `A(t)`.
    fn on_positions(&self, t: f64) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for (pos, path) in self.positions.iter().zip(&self.paths) {
            if path.value_at(t) {
                v.extend_from_slice(pos);
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearMode {
    Ct,
    Dt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOptions {
    /// Mixed absolute/relative tolerance of the CT integrator, per interval.
    pub tol: f64,
    /// CT stamp spacing; DT stamps every step.
    pub record_step: f64,
    /// Cap on accepted plus rejected CT steps per interval.
    pub max_steps: usize,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            record_step: 1.0,
            max_steps: 100_000,
        }
    }
}

/// `p(t) = exp(log_norms[k]) · directions[k]` at `times[k]`, with `‖·‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTrajectory {
    pub mode: LinearMode,
    pub times: Vec<f64>,
    pub log_norms: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl LinearTrajectory {
    pub fn state(&self, k: usize) -> Vec<f64> {
        let s = self.log_norms[k].exp();
        self.directions[k].iter().map(|v| v * s).collect()
    }

    fn push(&mut self, t: f64, log_norm: f64, dir: &[f64]) {
        self.times.push(t);
        self.log_norms.push(log_norm);
        self.directions.push(dir.to_vec());
    }
}

/// `y = (B A − D) x` with `A` given by its nonzero positions.
fn apply(on: &[(usize, usize)], beta: &[f64], delta: &[f64], x: &[f64], y: &mut [f64]) {
    for i in 0..x.len() {
        y[i] = -delta[i] * x[i];
    }
    for &(i, j) in on {
        y[i] += beta[i] * x[j];
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v.abs()).sum();
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
    s
}

/// Propagates `p0` along `path` up to `horizon`.
pub fn propagate_linear(
    path: &GraphPath,
    params: &EpidemicParams,
    horizon: f64,
    p0: &[f64],
    mode: LinearMode,
) -> Result<LinearTrajectory> {
    propagate_linear_with(path, params, horizon, p0, mode, &LinearOptions::default())
}

pub fn propagate_linear_with(
    path: &GraphPath,
    params: &EpidemicParams,
    horizon: f64,
    p0: &[f64],
    mode: LinearMode,
    opts: &LinearOptions,
) -> Result<LinearTrajectory> {
    let n = path.n;
    if params.n() != n || p0.len() != n {
        return Err(Error::InvalidParams(format!(
            "{n} nodes, {} rate entries, {} initial values",
            params.n(),
            p0.len()
        )));
    }
    if p0.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::DomainError(
            "initial vector must be finite and nonnegative".into(),
        ));
    }
    if !(horizon >= 0.0 && horizon <= path.horizon) {
        return Err(Error::DomainError(format!(
            "horizon {horizon} outside the sampled range [0, {}]",
            path.horizon
        )));
    }
    match (mode, path.time) {
        (LinearMode::Ct, Some(TimeModel::Dt)) => return Err(Error::WrongTime { expected: "CT" }),
        (LinearMode::Dt, Some(TimeModel::Ct)) => return Err(Error::WrongTime { expected: "DT" }),
        _ => {}
    }
    match mode {
        LinearMode::Dt => {
            params.check_discrete()?;
            Ok(propagate_dt(path, params, horizon as usize, p0))
        }
        LinearMode::Ct => propagate_ct(path, params, horizon, p0, opts),
    }
}

fn propagate_dt(
    path: &GraphPath,
    params: &EpidemicParams,
    steps: usize,
    p0: &[f64],
) -> LinearTrajectory {
    let (beta, delta) = (params.beta(), params.delta());
    let mut traj = LinearTrajectory {
        mode: LinearMode::Dt,
        times: Vec::with_capacity(steps + 1),
        log_norms: Vec::with_capacity(steps + 1),
        directions: Vec::with_capacity(steps + 1),
    };
    let mut x = p0.to_vec();
    let mut log_norm = normalize(&mut x).ln();
    traj.push(0.0, log_norm, &x);
    let mut y = vec![0.0; x.len()];
    for k in 0..steps {
        if log_norm == f64::NEG_INFINITY {
            traj.push((k + 1) as f64, log_norm, &x);
            continue;
        }
        let on = path.on_positions(k as f64);
        apply(&on, beta, delta, &x, &mut y);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += xi;
        }
        std::mem::swap(&mut x, &mut y);
        log_norm += normalize(&mut x).ln();
        traj.push((k + 1) as f64, log_norm, &x);
    }
    traj
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Dopri<'a> {
    beta: &'a [f64],
    delta: &'a [f64],
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Dopri<'_> {
    /// Integrates `x` over `[0, len]` in place; returns the last accepted
    /// step size for the next interval.
    fn integrate(
        &mut self,
        on: &[(usize, usize)],
        x: &mut [f64],
        len: f64,
        mut h: f64,
        tol: f64,
        max_steps: usize,
    ) -> Result<f64> {
        let n = x.len();
        let mut t = 0.0;
        let mut fresh = true;
        let mut steps = 0;
        while t < len {
            if steps >= max_steps {
                return Err(Error::ToleranceFailure(format!(
                    "{max_steps} steps did not cover an interval of length {len:e}"
                )));
            }
            steps += 1;
            let h_try = h.min(len - t);
            if fresh {
                apply(on, self.beta, self.delta, x, &mut self.k[0]);
                fresh = false;
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = x[i];
                    for (r, a) in A[s].iter().enumerate().take(s) {
                        acc += h_try * a * self.k[r][i];
                    }
                    self.tmp[i] = acc;
                }
                apply(on, self.beta, self.delta, &self.tmp, &mut self.k[s]);
            }
            // tmp now holds the fifth-order solution (stage 7 is FSAL)
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (s, w) in E.iter().enumerate() {
                    e += w * self.k[s][i];
                }
                // relative per component; the floor is relative to ‖x‖₁ = 1
                let scale = tol * (x[i].abs().max(self.tmp[i].abs()) + 1e-6);
                err += (h_try * e / scale).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::ToleranceFailure("non-finite error estimate".into()));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t += h_try;
                x.copy_from_slice(&self.tmp);
                self.k.swap(0, 6);
                if h_try == h {
                    h *= factor;
                }
            } else {
                h = h_try * factor;
                if h < len.max(1.0) * 1e-14 {
                    return Err(Error::ToleranceFailure(format!(
                        "step size {h:e} underflows"
                    )));
                }
            }
        }
        Ok(h)
    }
}

fn propagate_ct(
    path: &GraphPath,
    params: &EpidemicParams,
    horizon: f64,
    p0: &[f64],
    opts: &LinearOptions,
) -> Result<LinearTrajectory> {
    let n = path.n;
    let (beta, delta) = (params.beta(), params.delta());
    let mut traj = LinearTrajectory {
        mode: LinearMode::Ct,
        times: Vec::new(),
        log_norms: Vec::new(),
        directions: Vec::new(),
    };
    let mut x = p0.to_vec();
    let mut log_norm = normalize(&mut x).ln();
    traj.push(0.0, log_norm, &x);

    let switches = path.switch_times();
    let record = opts.record_step.max(f64::MIN_POSITIVE);
    let mut breaks: Vec<(f64, bool)> = switches.into_iter().map(|t| (t, false)).collect();
    let mut r = record;
    while r < horizon {
        breaks.push((r, true));
        r += record;
    }
    breaks.push((horizon, true));
    breaks.sort_by(|a, b| a.0.total_cmp(&b.0));

    let scale = delta
        .iter()
        .chain(beta)
        .fold(0.0f64, |m, &v| m.max(v))
        .max(1e-3);
    let mut h = 0.01 / scale;
    let mut dop = Dopri {
        beta,
        delta,
        k: std::array::from_fn(|_| vec![0.0; n]),
        tmp: vec![0.0; n],
    };
    let mut t = 0.0;
    let mut on = path.on_positions(0.0);
    for (tb, is_record) in breaks {
        if tb > t && log_norm > f64::NEG_INFINITY {
            h = dop.integrate(&on, &mut x, tb - t, h, opts.tol, opts.max_steps)?;
            for v in x.iter_mut() {
                // Metzler flow keeps p ≥ 0; negatives are integration error
                *v = v.max(0.0);
            }
            log_norm += normalize(&mut x).ln();
            t = tb;
        }
        if is_record && traj.times.last().is_some_and(|&l| tb > l) {
            traj.push(tb, log_norm, &x);
        }
        if !is_record {
            on = path.on_positions(tb);
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    /// Mean of `−slope(log ‖p‖₁)` over trajectories.
    pub rate: f64,
    pub std_error: f64,
    /// Normal-approximation 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub trajectories: usize,
}

/// Minimum number of trajectories for [`decay_rate_estimate`].
pub const MIN_TRAJECTORIES: usize = 20;

/// Least-squares slope of `log ‖p‖` against time after `burn_in`, negated
/// and averaged over trajectories.
pub fn decay_rate_estimate(
    trajectories: &[LinearTrajectory],
    burn_in: f64,
) -> Result<DecayEstimate> {
    if trajectories.len() < MIN_TRAJECTORIES {
        return Err(Error::InsufficientData {
            got: trajectories.len(),
            need: MIN_TRAJECTORIES,
        });
    }
    let rates = trajectories
        .iter()
        .map(|tr| {
            let pts: Vec<(f64, f64)> = tr
                .times
                .iter()
                .zip(&tr.log_norms)
                .filter(|(&t, l)| t >= burn_in && l.is_finite())
                .map(|(&t, &l)| (t, l))
                .collect();
            if pts.len() < 2 {
                return Err(Error::InsufficientData {
                    got: pts.len(),
                    need: 2,
                });
            }
            Ok(-slope(&pts))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rate, se) = mean_se(&rates);
    Ok(DecayEstimate {
        rate,
        std_error: se,
        ci_low: rate - 1.96 * se,
        ci_high: rate + 1.96 * se,
        trajectories: rates.len(),
    })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in pts {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
    }
    sxy / sxx
}

/// Decay rate of the linear system over `trajectories` independent sampled
/// paths started from `p(0) = 1`, in parallel with deterministic ordering.
pub fn linear_decay_rate(
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
    mode: LinearMode,
    horizon: f64,
    burn_in: f64,
    trajectories: usize,
    seed: u64,
) -> Result<DecayEstimate> {
    let p0 = vec![1.0; graph.n()];
    let trajs = (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let s = rng::derive_seed(seed, &["linear-decay".into(), k.into()]);
            let path = sample_graph_path(graph, horizon, s)?;
            propagate_linear(&path, params, horizon, &p0, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    decay_rate_estimate(&trajs, burn_in)
}
