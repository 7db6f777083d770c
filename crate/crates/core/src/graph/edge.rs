//! Aggregated Markov edge processes `σ = f(θ)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::chain::{stationary_distribution, MarkovChainSpec, TimeModel};
use crate::error::{Error, Result};
use crate::rng;

/// Parametric description of an edge process, as it appears in graph files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "lowercase")]
pub enum ProcessSpec {
    /// Two-state chain: off→on at `q`, on→off at `r` (rates in CT,
    /// probabilities in DT).
    Markov2 {
        q: f64,
        r: f64,
    },
    /// Coxian on/off chain `c_1..c_n, d_1..d_m`.
    Coxian {
        up: Vec<f64>,
        exit: Vec<f64>,
        down: Vec<f64>,
        ret: Vec<f64>,
    },
    Static {
        on: bool,
    },
}

/// An edge process: a chain plus a `{0,1}` output map over its states.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProcessModel {
    chain: MarkovChainSpec,
    output: Vec<bool>,
    spec: Option<ProcessSpec>,
}

impl EdgeProcessModel {
    /// General aggregated process. `output` must hit both values.
    pub fn new(chain: MarkovChainSpec, output: Vec<bool>) -> Result<Self> {
        if output.len() != chain.len() {
            return Err(Error::InvalidChain(format!(
                "output map has {} entries for {} states",
                output.len(),
                chain.len()
            )));
        }
        if !(output.iter().any(|&b| b) && output.iter().any(|&b| !b)) {
            return Err(Error::InvalidChain(
                "output map must be surjective onto {0,1}; use a static edge instead".into(),
            ));
        }
        Ok(Self {
            chain,
            output,
            spec: None,
        })
    }

    pub fn static_on(time: TimeModel) -> Self {
        Self {
            chain: MarkovChainSpec::trivial("on", time),
            output: vec![true],
            spec: Some(ProcessSpec::Static { on: true }),
        }
    }

    pub fn static_off(time: TimeModel) -> Self {
        Self {
            chain: MarkovChainSpec::trivial("off", time),
            output: vec![false],
            spec: Some(ProcessSpec::Static { on: false }),
        }
    }

    pub fn from_spec(spec: &ProcessSpec, time: TimeModel) -> Result<Self> {
        match spec {
            ProcessSpec::Markov2 { q, r } => build_edge_markovian(*q, *r, time),
            ProcessSpec::Coxian {
                up,
                exit,
                down,
                ret,
            } => {
                if time != TimeModel::Ct {
                    return Err(Error::InvalidRates(
                        "Coxian edges are continuous-time".into(),
                    ));
                }
                build_coxian_edge(up, exit, down, ret)
            }
            ProcessSpec::Static { on: true } => Ok(Self::static_on(time)),
            ProcessSpec::Static { on: false } => Ok(Self::static_off(time)),
        }
    }

    pub fn chain(&self) -> &MarkovChainSpec {
        &self.chain
    }

    pub fn output(&self) -> &[bool] {
        &self.output
    }

    pub fn spec(&self) -> Option<&ProcessSpec> {
        self.spec.as_ref()
    }

    pub fn time(&self) -> TimeModel {
        self.chain.time()
    }

    pub fn is_static(&self) -> bool {
        self.output.iter().all(|&b| b == self.output[0])
    }

    pub fn is_static_on(&self) -> bool {
        self.is_static() && self.output[0]
    }

    pub fn is_static_off(&self) -> bool {
        self.is_static() && !self.output[0]
    }

    pub fn with_initial(mut self, state: usize) -> Result<Self> {
        self.chain = self.chain.with_initial(state)?;
        Ok(self)
    }

    /// `(up, down)` when the edge is a plain two-state chain: the off→on and
    /// on→off rate (CT) or probability (DT).
    pub fn two_state_rates(&self) -> Option<(f64, f64)> {
        if self.chain.len() != 2 || self.output[0] == self.output[1] {
            return None;
        }
        let (off, on) = if self.output[1] { (0, 1) } else { (1, 0) };
        let m = self.chain.matrix();
        Some((m[(off, on)], m[(on, off)]))
    }
}

/// Long-run probability that the edge is present: `π(f⁻¹({1}))`.
pub fn edge_on_probability(edge: &EdgeProcessModel) -> Result<f64> {
    if edge.is_static() {
        return Ok(if edge.output[0] { 1.0 } else { 0.0 });
    }
    let pi = stationary_distribution(&edge.chain)?;
    let p: f64 = pi
        .iter()
        .zip(&edge.output)
        .filter(|(_, &on)| on)
        .map(|(p, _)| p)
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Edge-Markovian two-state edge (`off` = state 0, `on` = state 1).
pub fn build_edge_markovian(q: f64, r: f64, time: TimeModel) -> Result<EdgeProcessModel> {
    if !(q > 0.0 && r > 0.0) {
        return Err(Error::InvalidRates(format!(
            "two-state edge needs q > 0 and r > 0 (got q = {q}, r = {r})"
        )));
    }
    let labels = vec!["off".to_string(), "on".to_string()];
    let chain = match time {
        TimeModel::Ct => {
            MarkovChainSpec::continuous(labels, DMatrix::from_row_slice(2, 2, &[-q, q, r, -r]))?
        }
        TimeModel::Dt => {
            if q > 1.0 || r > 1.0 {
                return Err(Error::InvalidRates(format!(
                    "discrete-time probabilities must be <= 1 (got q = {q}, r = {r})"
                )));
            }
            MarkovChainSpec::discrete(
                labels,
                DMatrix::from_row_slice(2, 2, &[1.0 - q, q, r, 1.0 - r]),
            )?
        }
    };
    Ok(EdgeProcessModel {
        chain,
        output: vec![false, true],
        spec: Some(ProcessSpec::Markov2 { q, r }),
    })
}

/// Coxian on/off edge over `c_1..c_n, d_1..d_m`.
///
/// `c_i → c_{i+1}` at `up[i]`, `c_i → d_1` at `exit[i]`, `d_j → d_{j+1}` at
/// `down[j]`, `d_j → c_1` at `ret[j]`. The edge is on exactly in the `c`
/// states, so the on-duration is Coxian with phases `c_1..c_n`.
pub fn build_coxian_edge(
    up: &[f64],
    exit: &[f64],
    down: &[f64],
    ret: &[f64],
) -> Result<EdgeProcessModel> {
    let n = exit.len();
    let m = ret.len();
    if n == 0 || m == 0 {
        return Err(Error::InvalidRates(
            "need at least one on and one off phase".into(),
        ));
    }
    if up.len() + 1 != n || down.len() + 1 != m {
        return Err(Error::InvalidRates(format!(
            "expected {} up and {} down rates, got {} and {}",
            n - 1,
            m - 1,
            up.len(),
            down.len()
        )));
    }
    if up
        .iter()
        .chain(exit)
        .chain(down)
        .chain(ret)
        .any(|&v| !(v >= 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidRates(
            "rates must be finite and nonnegative".into(),
        ));
    }
    let k = n + m;
    let mut q = DMatrix::zeros(k, k);
    let d1 = n;
    for i in 0..n {
        if i + 1 < n {
            q[(i, i + 1)] += up[i];
        }
        q[(i, d1)] += exit[i];
    }
    for j in 0..m {
        if j + 1 < m {
            q[(n + j, n + j + 1)] += down[j];
        }
        q[(n + j, 0)] += ret[j];
    }
    for i in 0..k {
        let out: f64 = (0..k).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
        if out <= 0.0 {
            let name = if i < n {
                format!("c{}", i + 1)
            } else {
                format!("d{}", i - n + 1)
            };
            return Err(Error::InvalidRates(format!("state {name} is absorbing")));
        }
        q[(i, i)] = -out;
    }
    let labels = (1..=n)
        .map(|i| format!("c{i}"))
        .chain((1..=m).map(|j| format!("d{j}")))
        .collect();
    let chain = MarkovChainSpec::continuous(labels, q)?;
    let output = (0..k).map(|i| i < n).collect();
    Ok(EdgeProcessModel {
        chain,
        output,
        spec: Some(ProcessSpec::Coxian {
            up: up.to_vec(),
            exit: exit.to_vec(),
            down: down.to_vec(),
            ret: ret.to_vec(),
        }),
    })
}

/// A sampled `{0,1}` trajectory of one edge.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgePath {
    /// Piecewise constant on `[0, horizon]`: value `initial` until the first
    /// switch time, toggling at every entry of `switches`.
    Ct {
        initial: bool,
        switches: Vec<f64>,
        horizon: f64,
    },
    /// Values at steps `0..=steps`.
    Dt { states: Vec<bool> },
}

impl EdgePath {
    pub fn value_at(&self, t: f64) -> bool {
        match self {
            EdgePath::Ct {
                initial, switches, ..
            } => {
                let flips = switches.partition_point(|&s| s <= t);
                *initial ^ (flips % 2 == 1)
            }
            EdgePath::Dt { states } => {
                let k = (t.max(0.0) as usize).min(states.len() - 1);
                states[k]
            }
        }
    }

    /// Fraction of the horizon (or of the steps) spent on.
    pub fn fraction_on(&self) -> f64 {
        match self {
            EdgePath::Ct {
                initial,
                switches,
                horizon,
            } => {
                let mut on = *initial;
                let mut last = 0.0;
                let mut total = 0.0;
                for &s in switches {
                    if on {
                        total += s - last;
                    }
                    on = !on;
                    last = s;
                }
                if on {
                    total += horizon - last;
                }
                total / horizon
            }
            EdgePath::Dt { states } => {
                states.iter().filter(|&&b| b).count() as f64 / states.len() as f64
            }
        }
    }
}

/// Exact sample path of an edge, replayable from `seed`.
///
/// For continuous-time edges `horizon` is a time; for discrete-time edges it
/// is truncated to a step count.
pub fn sample_edge_path(edge: &EdgeProcessModel, horizon: f64, seed: u64) -> Result<EdgePath> {
    if !(horizon > 0.0) {
        return Err(Error::DomainError(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let mut rng = rng::stream(seed, &["edge-path".into()]);
    let pi = if edge.chain.initial().is_some() || edge.is_static() {
        vec![1.0; edge.chain.len()]
    } else {
        stationary_distribution(&edge.chain)?
    };
    let mut state = edge.chain.sample_initial(&pi, &mut rng);
    match edge.time() {
        TimeModel::Ct => {
            let initial = edge.output[state];
            let mut cur = initial;
            let mut switches = Vec::new();
            let mut t = 0.0;
            loop {
                let rate = edge.chain.exit_rate(state);
                if rate <= 0.0 {
                    break;
                }
                t += Exp::new(rate).expect("positive rate").sample(&mut rng);
                if t > horizon {
                    break;
                }
                state = edge.chain.sample_next(state, &mut rng);
                if edge.output[state] != cur {
                    cur = !cur;
                    switches.push(t);
                }
            }
            Ok(EdgePath::Ct {
                initial,
                switches,
                horizon,
            })
        }
        TimeModel::Dt => {
            let steps = horizon as usize;
            let mut states = Vec::with_capacity(steps + 1);
            states.push(edge.output[state]);
            for _ in 0..steps {
                state = edge.chain.sample_next(state, &mut rng);
                states.push(edge.output[state]);
            }
            Ok(EdgePath::Dt { states })
        }
    }
}

/// Empirical occupancy of each chain state along one sampled path of length
/// `horizon` (time for CT, steps for DT), starting from `start`.
pub fn sample_occupancy<R: Rng + ?Sized>(
    chain: &MarkovChainSpec,
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut occ = vec![0.0; chain.len()];
    let mut state = start;
    match chain.time() {
        TimeModel::Ct => {
            let mut t = 0.0;
            while t < horizon {
                let rate = chain.exit_rate(state);
                let hold = if rate > 0.0 {
                    Exp::new(rate).expect("positive rate").sample(rng)
                } else {
                    f64::INFINITY
                };
                let dt = hold.min(horizon - t);
                occ[state] += dt;
                t += hold;
                if t < horizon {
                    state = chain.sample_next(state, rng);
                }
            }
            for v in &mut occ {
                *v /= horizon;
            }
        }
        TimeModel::Dt => {
            let steps = horizon as usize;
            for _ in 0..steps {
                occ[state] += 1.0;
                state = chain.sample_next(state, rng);
            }
            for v in &mut occ {
                *v /= steps as f64;
            }
        }
    }
    occ
}
