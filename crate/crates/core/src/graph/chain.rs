//! Finite-state Markov chains in continuous or discrete time.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeModel {
    /// Generator matrix, rates per unit time.
    Ct,
    /// Transition matrix, one step per tick.
    Dt,
}

/// A time-homogeneous chain over an ordered label set.
///
/// For [`TimeModel::Ct`] `matrix` is the generator `Q` (off-diagonals
/// nonnegative, rows summing to zero); for [`TimeModel::Dt`] it is the
/// transition matrix `P` (entries in `[0,1]`, rows summing to one).
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChainSpec {
    labels: Vec<String>,
    time: TimeModel,
    matrix: DMatrix<f64>,
    /// Fixed initial state, or `None` to draw it from the stationary law.
    initial: Option<usize>,
}

impl MarkovChainSpec {
    pub fn continuous(labels: Vec<String>, generator: DMatrix<f64>) -> Result<Self> {
        Self::new(labels, TimeModel::Ct, generator)
    }

    pub fn discrete(labels: Vec<String>, transition: DMatrix<f64>) -> Result<Self> {
        Self::new(labels, TimeModel::Dt, transition)
    }

    pub fn new(labels: Vec<String>, time: TimeModel, matrix: DMatrix<f64>) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::InvalidChain("empty state space".into()));
        }
        if matrix.nrows() != k || matrix.ncols() != k {
            return Err(Error::InvalidChain(format!(
                "{} labels but {}x{} matrix",
                k,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for i in 0..k {
            let mut sum = 0.0;
            for j in 0..k {
                let v = matrix[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidChain(format!(
                        "non-finite entry at ({i},{j})"
                    )));
                }
                match time {
                    TimeModel::Ct if i != j && v < 0.0 => {
                        return Err(Error::InvalidChain(format!(
                            "negative rate {v} at ({i},{j})"
                        )))
                    }
                    TimeModel::Dt if !(0.0..=1.0).contains(&v) => {
                        return Err(Error::InvalidChain(format!(
                            "probability {v} at ({i},{j}) outside [0,1]"
                        )))
                    }
                    _ => {}
                }
                sum += v;
            }
            let target = match time {
                TimeModel::Ct => 0.0,
                TimeModel::Dt => 1.0,
            };
            let scale = match time {
                TimeModel::Ct => 1.0_f64.max(matrix[(i, i)].abs()),
                TimeModel::Dt => 1.0,
            };
            if (sum - target).abs() > ROW_TOL * scale {
                return Err(Error::InvalidChain(format!(
                    "row {i} sums to {sum}, expected {target}"
                )));
            }
        }
        Ok(Self {
            labels,
            time,
            matrix,
            initial: None,
        })
    }

    /// Single absorbing state.
    pub fn trivial(label: &str, time: TimeModel) -> Self {
        let m = match time {
            TimeModel::Ct => DMatrix::zeros(1, 1),
            TimeModel::Dt => DMatrix::from_element(1, 1, 1.0),
        };
        Self {
            labels: vec![label.to_string()],
            time,
            matrix: m,
            initial: None,
        }
    }

    pub fn with_initial(mut self, state: usize) -> Result<Self> {
        if state >= self.len() {
            return Err(Error::InvalidChain(format!(
                "initial state {state} out of range"
            )));
        }
        self.initial = Some(state);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn time(&self) -> TimeModel {
        self.time
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn initial(&self) -> Option<usize> {
        self.initial
    }

    /// Off-diagonal positive-weight successor lists.
    fn successors(&self) -> Vec<Vec<usize>> {
        let k = self.len();
        (0..k)
            .map(|i| {
                (0..k)
                    .filter(|&j| j != i && self.matrix[(i, j)] > 0.0)
                    .collect()
            })
            .collect()
    }

    /// Number of strongly connected components of the transition digraph.
    pub fn component_count(&self) -> usize {
        let succ = self.successors();
        let mut g = petgraph::graph::DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..self.len()).map(|_| g.add_node(())).collect();
        for (i, s) in succ.iter().enumerate() {
            for &j in s {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        petgraph::algo::tarjan_scc(&g).len()
    }

    pub fn is_irreducible(&self) -> bool {
        self.component_count() == 1
    }

    /// Period of an irreducible discrete-time chain (1 = aperiodic).
    /// Continuous-time chains are always aperiodic.
    pub fn period(&self) -> usize {
        if self.time == TimeModel::Ct {
            return 1;
        }
        let k = self.len();
        let mut level = vec![usize::MAX; k];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        let mut g = 0usize;
        while let Some(i) = queue.pop_front() {
            for j in 0..k {
                if self.matrix[(i, j)] <= 0.0 {
                    continue;
                }
                if level[j] == usize::MAX {
                    level[j] = level[i] + 1;
                    queue.push_back(j);
                } else {
                    let d = (level[i] + 1).abs_diff(level[j]);
                    g = gcd(g, d);
                }
            }
        }
        g.max(1)
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period() == 1
    }

    /// Holding rate of a state (continuous time).
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.matrix[(state, state)]
    }

    /// Next state drawn from the jump chain (CT) or the transition row (DT).
    pub fn sample_next<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let k = self.len();
        let (total, skip_diag) = match self.time {
            TimeModel::Ct => (self.exit_rate(state), true),
            TimeModel::Dt => (1.0, false),
        };
        if total <= 0.0 {
            return state;
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = state;
        for j in 0..k {
            if skip_diag && j == state {
                continue;
            }
            let w = self.matrix[(state, j)];
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = j;
            if u < acc {
                return j;
            }
        }
        last
    }

    /// Initial state: the fixed one, or a draw from `stationary`.
    pub fn sample_initial<R: Rng + ?Sized>(&self, stationary: &[f64], rng: &mut R) -> usize {
        if let Some(s) = self.initial {
            return s;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in stationary.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        stationary.len() - 1
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Unique stationary distribution of an irreducible chain.
///
/// Solves the balance equations by dense LU with the last equation replaced
/// by the normalisation `Σπ = 1`.
pub fn stationary_distribution(chain: &MarkovChainSpec) -> Result<Vec<f64>> {
    let k = chain.len();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    let comps = chain.component_count();
    if comps != 1 {
        return Err(Error::ReducibleChain { components: comps });
    }
    // Rows of `sys` are the balance equations πQ = 0 (or π(P - I) = 0).
    let mut sys = chain.matrix.transpose();
    if chain.time == TimeModel::Dt {
        for i in 0..k {
            sys[(i, i)] -= 1.0;
        }
    }
    for j in 0..k {
        sys[(k - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(k);
    rhs[k - 1] = 1.0;
    let pi = sys
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("singular balance system".into()))?;
    let mut pi: Vec<f64> = pi
        .iter()
        .map(|&v| if v < 0.0 && v > -1e-13 { 0.0 } else { v })
        .collect();
    if pi.iter().any(|&v| v < 0.0) {
        return Err(Error::NumericalFailure("negative stationary mass".into()));
    }
    let s: f64 = pi.iter().sum();
    for v in &mut pi {
        *v /= s;
    }
    let residual = balance_residual(chain, &pi);
    if residual > RESIDUAL_TOL {
        return Err(Error::NumericalFailure(format!(
            "balance residual {residual:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(pi)
}

/// Max-norm of πQ (CT) or πP − π (DT), scaled by the largest rate.
pub fn balance_residual(chain: &MarkovChainSpec, pi: &[f64]) -> f64 {
    let k = chain.len();
    let scale = match chain.time {
        TimeModel::Ct => (0..k).map(|i| chain.exit_rate(i)).fold(1.0, f64::max),
        TimeModel::Dt => 1.0,
    };
    let mut worst: f64 = 0.0;
    for j in 0..k {
        let mut r: f64 = (0..k).map(|i| pi[i] * chain.matrix[(i, j)]).sum();
        if chain.time == TimeModel::Dt {
            r -= pi[j];
        }
        worst = worst.max(r.abs() / scale);
    }
    worst
}
