//! Named graph generators.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::chain::TimeModel;
use super::edge::{build_edge_markovian, EdgeProcessModel};
use super::model::{DynamicGraphModel, GraphKind};
use crate::error::{Error, Result};
use crate::rng;

/// How the dispersion `1/8` of the experiment's off-probability distribution is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dispersion {
    /// `N(1/2, σ² = 1/8)`.
    #[default]
    Variance,
    /// `N(1/2, σ = 1/8)`.
    StdDev,
}

impl Dispersion {
    pub fn std_dev(self) -> f64 {
        match self {
            Dispersion::Variance => (0.125_f64).sqrt(),
            Dispersion::StdDev => 0.125,
        }
    }
}

/// A generated experiment graph together with its Erdős–Rényi skeleton.
#[derive(Debug, Clone)]
pub struct ExperimentGraph {
    pub graph: DynamicGraphModel,
    /// Unordered skeleton pairs `i < j`, in generation order.
    pub skeleton: Vec<(usize, usize)>,
    /// Sampled off-probability `r_ij` of each skeleton pair, after clamping.
    pub r: Vec<f64>,
}

impl ExperimentGraph {
    pub fn skeleton_adjacency(&self) -> DMatrix<f64> {
        let n = self.graph.n();
        let mut a = DMatrix::zeros(n, n);
        for &(i, j) in &self.skeleton {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }
}

/// Discrete-time two-state edge with `q = 1 − r`.
///
/// Clamped rates give reducible chains; those edges become static: `r = 0`
/// never switches off, `r = 1` never switches on.
fn complementary_dt_edge(r: f64) -> Result<EdgeProcessModel> {
    if r <= 0.0 {
        Ok(EdgeProcessModel::static_on(TimeModel::Dt))
    } else if r >= 1.0 {
        Ok(EdgeProcessModel::static_off(TimeModel::Dt))
    } else {
        build_edge_markovian(1.0 - r, r, TimeModel::Dt)
    }
}

/// The simulation graph: ER skeleton with edge probability `p`, each
/// skeleton edge a DT two-state chain with `r ~ N(1/2, ·)` clamped to
/// `[0, 1]` and `q = 1 − r`.
///
/// Every unordered pair owns a stream derived from `(seed, pair index)`, so
/// the draws of one pair do not depend on `n` or on other pairs.
pub fn experiment_graph(
    n: usize,
    p: f64,
    seed: u64,
    dispersion: Dispersion,
) -> Result<ExperimentGraph> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("need n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!(
            "edge probability {p} outside [0,1]"
        )));
    }
    let normal = Normal::new(0.5, dispersion.std_dev()).expect("finite parameters");
    let key = rng::derive_key(seed, &["experiment-graph".into()]);
    let mut graph = DynamicGraphModel::new(n, GraphKind::Amei);
    let mut skeleton = Vec::new();
    let mut rs = Vec::new();
    for j in 1..n {
        for i in 0..j {
            let id = (j * (j - 1) / 2 + i) as u64;
            let mut s = rng::item_stream(&key, id);
            if !s.random_bool(p) {
                continue;
            }
            let r = normal.sample(&mut s).clamp(0.0, 1.0);
            graph.insert(i, j, complementary_dt_edge(r)?)?;
            skeleton.push((i, j));
            rs.push(r);
        }
    }
    Ok(ExperimentGraph {
        graph,
        skeleton,
        r: rs,
    })
}

/// Two-state edge with stationary on-probability `pi` and total switching
/// rate `speed` (`q + r`).
fn edge_with_mean(pi: f64, speed: f64, time: TimeModel) -> Result<EdgeProcessModel> {
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "stationary probability {pi} outside (0,1]"
        )));
    }
    if pi == 1.0 {
        return Ok(EdgeProcessModel::static_on(time));
    }
    build_edge_markovian(pi * speed, (1.0 - pi) * speed, time)
}

/// Dynamic small-world graph: static ring `1→2→…→n→1` plus a two-state
/// process with stationary probability `r` on every other pair.
///
/// The ring is a set of ordered pairs, so for [`GraphKind::Amai`] the mean
/// matrix has a single 1 per row and `η(Ā) = 1 + r(n−2)`. With
/// [`GraphKind::Amei`] the ring is undirected and `η(Ā) = 2 + r(n−3)`.
pub fn small_world(
    n: usize,
    r: f64,
    speed: f64,
    kind: GraphKind,
    time: TimeModel,
) -> Result<DynamicGraphModel> {
    if n < 3 {
        return Err(Error::InvalidParams(format!(
            "small-world needs n >= 3, got {n}"
        )));
    }
    let mut g = DynamicGraphModel::new(n, kind);
    let on_ring = |i: usize, j: usize| match kind {
        GraphKind::Amai => j == (i + 1) % n,
        GraphKind::Amei => j == (i + 1) % n || i == (j + 1) % n,
    };
    for i in 0..n {
        for j in 0..n {
            if i == j || (kind == GraphKind::Amei && j < i) {
                continue;
            }
            let e = if on_ring(i, j) {
                EdgeProcessModel::static_on(time)
            } else {
                edge_with_mean(r, speed, time)?
            };
            g.insert(i, j, e)?;
        }
    }
    Ok(g)
}

/// Edge-Markovian complete graph: every unordered pair switches on at `q`
/// and off at `r`.
pub fn edge_markovian_complete(
    n: usize,
    q: f64,
    r: f64,
    time: TimeModel,
) -> Result<DynamicGraphModel> {
    let mut g = DynamicGraphModel::new(n, GraphKind::Amei);
    let e = build_edge_markovian(q, r, time)?;
    for j in 1..n {
        for i in 0..j {
            g.insert(i, j, e.clone())?;
        }
    }
    Ok(g)
}
