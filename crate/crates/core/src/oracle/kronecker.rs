//! Exponential-size condition: `Π ⊗ I_n + ⊕_ℓ (B F_ℓ − D)` is Hurwitz.
//!
//! Labels `ℓ ∈ [0, 2^m)` encode the switching edges by bit: bit `k` of `ℓ`
//! set means edge `k` is present. Operator index of `(ℓ, i)` is `ℓ·n + i`.

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicGraphModel, TimeModel};
use crate::spectral::{perron_root, LinearOperator, PowerOptions};
use crate::threshold::EpidemicParams;

/// Hard cap on switching edges.
pub const MAX_EDGES: usize = 20;
/// Hard cap on the operator dimension `n·2^m`.
pub const MAX_DIM: usize = 2_000_000;

/// One two-state switching edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchEdge {
    /// Adjacency positions `(i, j)` it controls (two for undirected edges).
    pub positions: Vec<(usize, usize)>,
    /// Off→on rate.
    pub u: f64,
    /// On→off rate.
    pub v: f64,
}

/// The `2^m` possible contact graphs of a graph with `m` switching edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphEnumeration {
    pub n: usize,
    pub edges: Vec<SwitchEdge>,
    /// Positions present in every subgraph.
    pub static_on: Vec<(usize, usize)>,
}

impl SubgraphEnumeration {
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> usize {
        1usize << self.m()
    }

    /// `χ_ℓ`: presence bit of each switching edge.
    pub fn chi(&self, label: usize) -> Vec<bool> {
        (0..self.m()).map(|k| label >> k & 1 == 1).collect()
    }

    /// Adjacency `F_ℓ`.
    pub fn f_matrix(&self, label: usize) -> DMatrix<f64> {
        let mut f = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.static_on {
            f[(i, j)] = 1.0;
        }
        for (k, e) in self.edges.iter().enumerate() {
            if label >> k & 1 == 1 {
                for &(i, j) in &e.positions {
                    f[(i, j)] = 1.0;
                }
            }
        }
        f
    }

    /// Rate of flipping edge `k` out of label `ℓ`.
    pub fn flip_rate(&self, label: usize, k: usize) -> f64 {
        let e = &self.edges[k];
        if label >> k & 1 == 0 {
            e.u
        } else {
            e.v
        }
    }

    /// Entry `Π_{ℓℓ'}`.
    pub fn pi_entry(&self, l: usize, lp: usize) -> f64 {
        let d = l ^ lp;
        if d == 0 {
            -(0..self.m()).map(|k| self.flip_rate(l, k)).sum::<f64>()
        } else if d.is_power_of_two() {
            self.flip_rate(l, d.trailing_zeros() as usize)
        } else {
            0.0
        }
    }

    /// Dense `Π` (for small `m`).
    pub fn pi_matrix(&self) -> DMatrix<f64> {
        let l = self.labels();
        DMatrix::from_fn(l, l, |a, b| self.pi_entry(a, b))
    }

    /// Union of all contact graphs.
    pub fn union_adjacency(&self) -> DMatrix<f64> {
        self.f_matrix(self.labels() - 1)
    }
}

/// Splits `graph` into static and two-state switching edges.
pub fn enumerate_subgraphs(graph: &DynamicGraphModel) -> Result<SubgraphEnumeration> {
    if graph.time_model() == Some(TimeModel::Dt) {
        return Err(Error::WrongTime {
            expected: "continuous time",
        });
    }
    let mut edges = Vec::new();
    let mut static_on = Vec::new();
    for (&key, e) in graph.edges() {
        let positions: Vec<_> = graph.positions(key).collect();
        if e.is_static_on() {
            static_on.extend(positions);
        } else if e.is_static_off() {
            continue;
        } else {
            let (u, v) = e
                .two_state_rates()
                .ok_or(Error::NonMarkovEdge { i: key.0, j: key.1 })?;
            edges.push(SwitchEdge { positions, u, v });
        }
    }
    if edges.len() > MAX_EDGES {
        return Err(Error::TooManyEdges {
            m: edges.len(),
            limit: MAX_EDGES,
        });
    }
    Ok(SubgraphEnumeration {
        n: graph.n(),
        edges,
        static_on,
    })
}

/// Matrix-free `Π ⊗ I_n + ⊕_ℓ (B F_ℓ − D)` restricted to a node subset.
#[derive(Debug, Clone)]
pub struct KroneckerOperator {
    n: usize,
    m: usize,
    rates: Vec<(f64, f64)>,
    beta: Vec<f64>,
    delta: Vec<f64>,
    /// Per row `i`: static in-neighbours `j` (local indices).
    static_in: Vec<Vec<usize>>,
    /// Per row `i`: `(k, j)` for switching edge `k` feeding `i` from `j`.
    switch_in: Vec<Vec<(usize, usize)>>,
}

impl KroneckerOperator {
    /// Operator on the nodes in `nodes` (local order as given).
    pub fn new(sub: &SubgraphEnumeration, params: &EpidemicParams, nodes: &[usize]) -> Self {
        let mut local = vec![usize::MAX; sub.n];
        for (a, &i) in nodes.iter().enumerate() {
            local[i] = a;
        }
        let n = nodes.len();
        let mut static_in = vec![Vec::new(); n];
        let mut switch_in = vec![Vec::new(); n];
        for &(i, j) in &sub.static_on {
            if local[i] != usize::MAX && local[j] != usize::MAX {
                static_in[local[i]].push(local[j]);
            }
        }
        for (k, e) in sub.edges.iter().enumerate() {
            for &(i, j) in &e.positions {
                if local[i] != usize::MAX && local[j] != usize::MAX {
                    switch_in[local[i]].push((k, local[j]));
                }
            }
        }
        Self {
            n,
            m: sub.m(),
            rates: sub.edges.iter().map(|e| (e.u, e.v)).collect(),
            beta: nodes.iter().map(|&i| params.beta()[i]).collect(),
            delta: nodes.iter().map(|&i| params.delta()[i]).collect(),
            static_in,
            switch_in,
        }
    }

    fn leave_rate(&self, l: usize) -> f64 {
        self.rates
            .iter()
            .enumerate()
            .map(|(k, &(u, v))| if l >> k & 1 == 0 { u } else { v })
            .sum()
    }
}

impl LinearOperator for KroneckerOperator {
    fn dim(&self) -> usize {
        self.n << self.m
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for l in 0..(1usize << self.m) {
            let xl = &x[l * n..(l + 1) * n];
            let out = &mut y[l * n..(l + 1) * n];
            let leave = self.leave_rate(l);
            for i in 0..n {
                let mut contact = 0.0;
                for &j in &self.static_in[i] {
                    contact += xl[j];
                }
                for &(k, j) in &self.switch_in[i] {
                    if l >> k & 1 == 1 {
                        contact += xl[j];
                    }
                }
                out[i] = self.beta[i] * contact - (self.delta[i] + leave) * xl[i];
            }
            for (k, &(u, v)) in self.rates.iter().enumerate() {
                let lp = l ^ (1 << k);
                let rate = if l >> k & 1 == 0 { u } else { v };
                let xp = &x[lp * n..(lp + 1) * n];
                for i in 0..n {
                    out[i] += rate * xp[i];
                }
            }
        }
    }

    fn diagonal(&self, idx: usize) -> f64 {
        let (l, i) = (idx / self.n, idx % self.n);
        -self.delta[i] - self.leave_rate(l)
    }

    fn max_offdiag_row_sum(&self) -> f64 {
        let flips: f64 = self.rates.iter().map(|&(u, v)| u.max(v)).sum();
        let contact = (0..self.n)
            .map(|i| self.beta[i] * (self.static_in[i].len() + self.switch_in[i].len()) as f64)
            .fold(0.0, f64::max);
        flips + contact
    }
}

/// Spectral abscissa of the exponential-size matrix and the Hurwitz verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialVerdict {
    pub stable: bool,
    pub eta: f64,
    pub m: usize,
    pub dim: usize,
}

/// Builds the exponential-size operator sparsely and tests it for Hurwitz
/// stability.
///
/// With positive switching rates every label communicates with every other,
/// so the strongly connected blocks are `labels × C` for the components `C`
/// of the union contact graph; each block is irreducible Metzler.
pub fn exponential_condition(
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
) -> Result<ExponentialVerdict> {
    let sub = enumerate_subgraphs(graph)?;
    if params.n() != sub.n {
        return Err(Error::InvalidParams(format!(
            "{} rate entries for {} nodes",
            params.n(),
            sub.n
        )));
    }
    let dim = sub.n.checked_shl(sub.m() as u32).unwrap_or(usize::MAX);
    if dim > MAX_DIM {
        return Err(Error::TooManyEdges {
            m: sub.m(),
            limit: MAX_EDGES.min((MAX_DIM / sub.n.max(1)).ilog2() as usize),
        });
    }
    let eta = exponential_abscissa(&sub, params)?;
    Ok(ExponentialVerdict {
        stable: eta < 0.0,
        eta,
        m: sub.m(),
        dim,
    })
}

/// `η(Π ⊗ I_n + ⊕_ℓ (B F_ℓ − D))`.
pub fn exponential_abscissa(sub: &SubgraphEnumeration, params: &EpidemicParams) -> Result<f64> {
    let union = sub.union_adjacency();
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..sub.n).map(|_| g.add_node(())).collect();
    for j in 0..sub.n {
        for i in 0..sub.n {
            if i != j && union[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut eta = f64::NEG_INFINITY;
    for comp in tarjan_scc(&g) {
        let mut idx: Vec<usize> = comp.into_iter().map(|v| v.index()).collect();
        idx.sort_unstable();
        let v = if idx.len() == 1 {
            -params.delta()[idx[0]]
        } else {
            let op = KroneckerOperator::new(sub, params, &idx);
            perron_root(&op, None, PowerOptions::default())?.value
        };
        eta = eta.max(v);
    }
    Ok(eta)
}

/// Dense reference assembly `Π ⊗ I_n + Σ_ℓ e_ℓ e_ℓᵀ ⊗ (B F_ℓ − D)`.
pub fn dense_kronecker(sub: &SubgraphEnumeration, params: &EpidemicParams) -> DMatrix<f64> {
    let n = sub.n;
    let pi = sub.pi_matrix();
    let labels = sub.labels();
    let mut out = pi.kronecker(&DMatrix::<f64>::identity(n, n));
    for l in 0..labels {
        let block = params.ct_matrix(&sub.f_matrix(l));
        let mut v = out.view_mut((l * n, l * n), (n, n));
        v += block;
    }
    out
}
