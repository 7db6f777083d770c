//! Edge- and arc-independent dynamic graph models and their mean matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chain::TimeModel;
use super::edge::{edge_on_probability, EdgeProcessModel, ProcessSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// Undirected: one process per unordered pair drives `A_ij = A_ji`.
    Amei,
    /// Directed: every ordered pair has its own process.
    Amai,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Amei => "AMEI",
            GraphKind::Amai => "AMAI",
        }
    }
}

/// `n` nodes and a sparse map from pairs to edge processes.
///
/// Keys follow the adjacency convention `A_ij = 1` when `j` can infect `i`.
/// For [`GraphKind::Amei`] only `i < j` is stored and the entry is mirrored.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicGraphModel {
    n: usize,
    kind: GraphKind,
    edges: BTreeMap<(usize, usize), EdgeProcessModel>,
}

impl DynamicGraphModel {
    pub fn new(n: usize, kind: GraphKind) -> Self {
        Self {
            n,
            kind,
            edges: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// Adds (or replaces) the process of pair `(i, j)`.
    pub fn insert(&mut self, i: usize, j: usize, edge: EdgeProcessModel) -> Result<()> {
        if i == j {
            return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidGraph(format!(
                "pair ({i}, {j}) out of range for n = {}",
                self.n
            )));
        }
        if !edge.is_static() {
            if let Some(t) = self.time_model() {
                if t != edge.time() {
                    return Err(Error::InvalidGraph(format!(
                        "pair ({i}, {j}) mixes continuous and discrete time"
                    )));
                }
            }
        }
        let key = match self.kind {
            GraphKind::Amei => (i.min(j), i.max(j)),
            GraphKind::Amai => (i, j),
        };
        self.edges.insert(key, edge);
        Ok(())
    }

    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &EdgeProcessModel)> {
        self.edges.iter()
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&EdgeProcessModel> {
        let key = match self.kind {
            GraphKind::Amei => (i.min(j), i.max(j)),
            GraphKind::Amai => (i, j),
        };
        self.edges.get(&key)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Time model shared by the switching edges (`None` when all are static).
    pub fn time_model(&self) -> Option<TimeModel> {
        self.edges
            .values()
            .find(|e| !e.is_static())
            .map(|e| e.time())
    }

    /// Adjacency positions controlled by the process stored under `key`.
    pub fn positions(&self, key: (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
        let (i, j) = key;
        let mirror = (self.kind == GraphKind::Amei).then_some((j, i));
        std::iter::once((i, j)).chain(mirror)
    }

    /// Every edge process irreducible.
    pub fn check_irreducible(&self) -> Result<()> {
        for (&(i, j), e) in &self.edges {
            if !e.is_static() && !e.chain().is_irreducible() {
                return Err(Error::ReducibleEdge { i, j });
            }
        }
        Ok(())
    }

    /// Every discrete-time edge chain aperiodic.
    pub fn check_aperiodic(&self) -> Result<()> {
        for (&(i, j), e) in &self.edges {
            if !e.is_static() && !e.chain().is_aperiodic() {
                return Err(Error::PeriodicEdge { i, j });
            }
        }
        Ok(())
    }

    /// Stationary mean matrix `Ā_ij = lim Pr(A_ij(t) = 1)`.
    pub fn mean_matrix(&self) -> Result<MeanMatrix> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (&(i, j), e) in &self.edges {
            let p = edge_on_probability(e).map_err(|err| match err {
                Error::ReducibleChain { .. } => Error::ReducibleEdge { i, j },
                other => other,
            })?;
            for (r, c) in self.positions((i, j)) {
                a[(r, c)] = p;
            }
        }
        Ok(MeanMatrix { a_bar: a })
    }

    /// Adjacency matrix with every non-static-off edge present.
    pub fn support_adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (&key, e) in &self.edges {
            if e.is_static_off() {
                continue;
            }
            for (r, c) in self.positions(key) {
                a[(r, c)] = 1.0;
            }
        }
        a
    }

    pub fn to_spec(&self) -> Result<GraphSpec> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for (&(i, j), e) in &self.edges {
            let process = e.spec().cloned().ok_or_else(|| {
                Error::InvalidGraph(format!("edge ({i}, {j}) has no parametric description"))
            })?;
            edges.push(EdgeEntry {
                i,
                j,
                model: EdgeModelSpec {
                    process,
                    time: e.time(),
                    initial: e.chain().initial(),
                },
            });
        }
        Ok(GraphSpec {
            n: self.n,
            kind: self.kind,
            edges,
        })
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let mut g = Self::new(spec.n, spec.kind);
        for e in &spec.edges {
            let mut edge = EdgeProcessModel::from_spec(&e.model.process, e.model.time)?;
            if let Some(s) = e.model.initial {
                edge = edge.with_initial(s)?;
            }
            g.insert(e.i, e.j, edge)?;
        }
        Ok(g)
    }
}

/// The stationary mean matrix `Ā`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix {
    pub a_bar: DMatrix<f64>,
}

impl MeanMatrix {
    pub fn new(a_bar: DMatrix<f64>) -> Result<Self> {
        if !a_bar.is_square() {
            return Err(Error::InvalidGraph("mean matrix must be square".into()));
        }
        for i in 0..a_bar.nrows() {
            if a_bar[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("nonzero diagonal at {i}")));
            }
        }
        if a_bar.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidGraph("mean entries must lie in [0,1]".into()));
        }
        Ok(Self { a_bar })
    }

    pub fn n(&self) -> usize {
        self.a_bar.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.a_bar == self.a_bar.transpose()
    }

    /// Entry-wise sign, `sgn Ā`.
    pub fn support_matrix(&self) -> DMatrix<f64> {
        self.a_bar.map(|v| if v > 0.0 { 1.0 } else { 0.0 })
    }
}

/// Free-function form of [`MeanMatrix::support_matrix`].
pub fn support_matrix(mean: &MeanMatrix) -> DMatrix<f64> {
    mean.support_matrix()
}

/// Free-function form of [`DynamicGraphModel::mean_matrix`].
pub fn mean_matrix(graph: &DynamicGraphModel) -> Result<MeanMatrix> {
    graph.mean_matrix()
}

/// Graph file: `{"n", "kind", "edges": [{"i", "j", "model"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub kind: GraphKind,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub i: usize,
    pub j: usize,
    pub model: EdgeModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeModelSpec {
    #[serde(flatten)]
    pub process: ProcessSpec,
    #[serde(default = "default_time")]
    pub time: TimeModel,
    /// Fixed initial chain state; stationary draw when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<usize>,
}

fn default_time() -> TimeModel {
    TimeModel::Ct
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::edge::build_edge_markovian;

    #[test]
    fn amei_mirrors_and_is_symmetric() {
        let mut g = DynamicGraphModel::new(4, GraphKind::Amei);
        g.insert(2, 0, build_edge_markovian(0.3, 0.9, TimeModel::Ct).unwrap())
            .unwrap();
        g.insert(1, 3, build_edge_markovian(1.7, 0.2, TimeModel::Ct).unwrap())
            .unwrap();
        let m = g.mean_matrix().unwrap();
        assert!(m.is_symmetric());
        assert_eq!(m.a_bar[(0, 2)], m.a_bar[(2, 0)]);
        assert!((m.a_bar[(0, 2)] - 0.25).abs() < 1e-15);
        assert!(g.edge(0, 2).is_some());
    }

    #[test]
    fn amai_keeps_direction() {
        let mut g = DynamicGraphModel::new(3, GraphKind::Amai);
        g.insert(0, 1, build_edge_markovian(1.0, 1.0, TimeModel::Ct).unwrap())
            .unwrap();
        let m = g.mean_matrix().unwrap();
        assert_eq!(m.a_bar[(0, 1)], 0.5);
        assert_eq!(m.a_bar[(1, 0)], 0.0);
    }

    #[test]
    fn rejects_self_loops_and_mixed_time() {
        let mut g = DynamicGraphModel::new(3, GraphKind::Amai);
        let e = build_edge_markovian(1.0, 1.0, TimeModel::Ct).unwrap();
        assert!(g.insert(1, 1, e.clone()).is_err());
        assert!(g.insert(0, 3, e.clone()).is_err());
        g.insert(0, 1, e).unwrap();
        let d = build_edge_markovian(0.5, 0.5, TimeModel::Dt).unwrap();
        assert!(g.insert(1, 2, d).is_err());
        g.insert(1, 2, EdgeProcessModel::static_on(TimeModel::Dt))
            .unwrap();
    }

    #[test]
    fn empty_mean_is_zero() {
        let g = DynamicGraphModel::new(5, GraphKind::Amei);
        let m = g.mean_matrix().unwrap();
        assert_eq!(m.a_bar, DMatrix::zeros(5, 5));
        assert_eq!(m.support_matrix(), DMatrix::zeros(5, 5));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "n": 3, "kind": "amei",
            "edges": [
                {"i": 0, "j": 1, "model": {"type": "markov2", "params": {"q": 0.5, "r": 1.5}, "time": "ct"}},
                {"i": 1, "j": 2, "model": {"type": "static", "params": {"on": true}, "time": "ct"}},
                {"i": 0, "j": 2, "model": {"type": "coxian",
                    "params": {"up": [1.0], "exit": [0.0, 2.0], "down": [], "ret": [0.5]}}}
            ]
        }"#;
        let spec: GraphSpec = serde_json::from_str(text).unwrap();
        let g = DynamicGraphModel::from_spec(&spec).unwrap();
        assert_eq!(g.edge_count(), 3);
        let back = g.to_spec().unwrap();
        let again: GraphSpec =
            serde_json::from_str(&serde_json::to_string(&back).unwrap()).unwrap();
        assert_eq!(back, again);
        assert_eq!(DynamicGraphModel::from_spec(&again).unwrap(), g);
    }
}
