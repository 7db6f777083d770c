//! Exact event-driven simulation of the joint edge/node process.

use rand::Rng;

use super::environment::EdgeIndex;
use super::trace::{InitialInfection, SimulationTrace};
use crate::error::{Error, Result};
use crate::graph::{stationary_distribution, DynamicGraphModel, TimeModel};
use crate::rng;
use crate::threshold::EpidemicParams;

/// Binary sum tree over event channels. Parents are recomputed from their
/// children on every update, so no rounding drift accumulates.
#[derive(Debug, Clone)]
struct RateTree {
    cap: usize,
    t: Vec<f64>,
}

impl RateTree {
    fn new(len: usize) -> Self {
        let cap = len.max(1).next_power_of_two();
        Self {
            cap,
            t: vec![0.0; 2 * cap],
        }
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut k = self.cap + i;
        self.t[k] = v;
        while k > 1 {
            k /= 2;
            self.t[k] = self.t[2 * k] + self.t[2 * k + 1];
        }
    }

    fn total(&self) -> f64 {
        self.t[1]
    }

    /// Channel whose cumulative interval contains `u ∈ [0, total)`.
    fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.cap {
            let l = self.t[2 * k];
            if u < l || self.t[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= l;
                k = 2 * k + 1;
            }
        }
        k - self.cap
    }
}

struct State<'a> {
    index: &'a EdgeIndex,
    beta: &'a [f64],
    delta: &'a [f64],
    x: Vec<bool>,
    /// `pressure[i]`: on positions `(i, j)` with `j` infected.
    pressure: Vec<usize>,
    edge_state: Vec<usize>,
    edge_on: Vec<bool>,
    tree: RateTree,
    infected: usize,
}

impl State<'_> {
    fn node_rate(&self, i: usize) -> f64 {
        if self.x[i] {
            self.delta[i]
        } else {
            self.beta[i] * self.pressure[i] as f64
        }
    }

    fn refresh_node(&mut self, i: usize) {
        let m = self.index.len();
        let r = self.node_rate(i);
        self.tree.set(m + i, r);
    }

    fn toggle_node(&mut self, j: usize) {
        self.x[j] = !self.x[j];
        if self.x[j] {
            self.infected += 1;
        } else {
            self.infected -= 1;
        }
        let index = self.index;
        for &(i, e) in &index.out[j] {
            if self.edge_on[e] {
                if self.x[j] {
                    self.pressure[i] += 1;
                } else {
                    self.pressure[i] -= 1;
                }
                self.refresh_node(i);
            }
        }
        self.refresh_node(j);
    }

    fn set_edge_on(&mut self, e: usize, on: bool) {
        if self.edge_on[e] == on {
            return;
        }
        self.edge_on[e] = on;
        let index = self.index;
        for &(i, j) in &index.positions[e] {
            if self.x[j] {
                if on {
                    self.pressure[i] += 1;
                } else {
                    self.pressure[i] -= 1;
                }
                self.refresh_node(i);
            }
        }
    }
}

/// Gillespie simulation up to `horizon` or extinction, whichever comes first.
///
/// Channels are the edge chains (at their exit rates), recoveries at `δ_i`
/// and infections at `β_i · #{infected j : A_ij = 1}`. Stamps are taken at
/// `t = 0`, at every node event and at the horizon.
pub fn simulate_ct_exact(
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
    horizon: f64,
    init: &InitialInfection,
    seed: u64,
) -> Result<SimulationTrace> {
    simulate_ct_exact_with(graph, params, horizon, init, seed, false)
}

/// [`simulate_ct_exact`], optionally recording node states at every stamp.
pub fn simulate_ct_exact_with(
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
    horizon: f64,
    init: &InitialInfection,
    seed: u64,
    record_states: bool,
) -> Result<SimulationTrace> {
    if graph.time_model() == Some(TimeModel::Dt) {
        return Err(Error::WrongTime { expected: "CT" });
    }
    if !(horizon > 0.0) {
        return Err(Error::DomainError(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let n = graph.n();
    if params.n() != n {
        return Err(Error::InvalidParams(format!(
            "{} rate entries for {n} nodes",
            params.n()
        )));
    }
    let index = EdgeIndex::new(graph);
    let m = index.len();
    let mut rng = rng::stream(seed, &["ct-exact".into()]);

    let mut edge_state = Vec::with_capacity(m);
    for model in &index.models {
        let chain = model.chain();
        let s = if chain.initial().is_some() || model.is_static() {
            chain.initial().unwrap_or(0)
        } else {
            chain.sample_initial(&stationary_distribution(chain)?, &mut rng)
        };
        edge_state.push(s);
    }
    let mut st = State {
        index: &index,
        beta: params.beta(),
        delta: params.delta(),
        x: vec![false; n],
        pressure: vec![0; n],
        edge_on: edge_state
            .iter()
            .zip(&index.models)
            .map(|(&s, m)| m.output()[s])
            .collect(),
        edge_state,
        tree: RateTree::new(m + n),
        infected: 0,
    };
    for e in 0..m {
        let model = &index.models[e];
        if !model.is_static() {
            st.tree.set(e, model.chain().exit_rate(st.edge_state[e]));
        }
    }
    for i in 0..n {
        st.refresh_node(i);
    }
    for (j, on) in init.state(n).into_iter().enumerate() {
        if on {
            st.toggle_node(j);
        }
    }

    let mut trace = SimulationTrace::new(seed, record_states);
    trace.push(0.0, &st.x, st.infected);
    let mut t = 0.0;
    while st.infected > 0 {
        let total = st.tree.total();
        if total <= 0.0 {
            break;
        }
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / total;
        if t >= horizon {
            break;
        }
        let c = loop {
            let c = st.tree.find(rng.random::<f64>() * total);
            // rounding can land on an empty leaf at a subtree boundary
            if st.tree.t[st.tree.cap + c] > 0.0 {
                break c;
            }
        };
        if c < m {
            let chain = index.models[c].chain();
            let s = chain.sample_next(st.edge_state[c], &mut rng);
            st.edge_state[c] = s;
            st.tree.set(c, chain.exit_rate(s));
            st.set_edge_on(c, index.models[c].output()[s]);
        } else {
            st.toggle_node(c - m);
            trace.push(t, &st.x, st.infected);
        }
    }
    if st.infected > 0 && trace.times.last().is_some_and(|&l| l < horizon) {
        trace.push(horizon, &st.x, st.infected);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_edge_markovian, EdgeProcessModel, GraphKind};

    #[test]
    fn rate_tree_selects_by_weight() {
        let mut t = RateTree::new(5);
        for (i, v) in [1.0, 0.0, 2.0, 0.0, 3.0].into_iter().enumerate() {
            t.set(i, v);
        }
        assert_eq!(t.total(), 6.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.5), 2);
        assert_eq!(t.find(2.999), 2);
        assert_eq!(t.find(3.0), 4);
        assert_eq!(t.find(5.999), 4);
    }

    #[test]
    fn pure_death_is_monotone() {
        let mut g = DynamicGraphModel::new(8, GraphKind::Amei);
        for i in 0..7 {
            g.insert(
                i,
                i + 1,
                build_edge_markovian(1.0, 1.0, TimeModel::Ct).unwrap(),
            )
            .unwrap();
        }
        let p = EpidemicParams::nonnegative(vec![0.0; 8], vec![1.0; 8]).unwrap();
        let t = simulate_ct_exact(&g, &p, 100.0, &InitialInfection::All, 5).unwrap();
        assert!(t.infected_counts.windows(2).all(|w| w[1] < w[0]));
        assert!(t.times.windows(2).all(|w| w[1] > w[0]));
        assert!(t.is_extinct());
    }

    #[test]
    fn no_recovery_saturates() {
        let n = 6;
        let mut g = DynamicGraphModel::new(n, GraphKind::Amei);
        for i in 0..n {
            for j in i + 1..n {
                g.insert(i, j, EdgeProcessModel::static_on(TimeModel::Ct))
                    .unwrap();
            }
        }
        let p = EpidemicParams::nonnegative(vec![1.0; n], vec![0.0; n]).unwrap();
        let t = simulate_ct_exact(&g, &p, 1e3, &InitialInfection::Nodes(vec![0]), 2).unwrap();
        assert!(t.infected_counts.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(t.final_count(), n);
    }

    #[test]
    fn replayable() {
        let mut g = DynamicGraphModel::new(4, GraphKind::Amai);
        for i in 0..4 {
            g.insert(
                i,
                (i + 1) % 4,
                build_edge_markovian(0.5, 0.5, TimeModel::Ct).unwrap(),
            )
            .unwrap();
        }
        let p = EpidemicParams::homogeneous(4, 2.0, 0.5).unwrap();
        let a = simulate_ct_exact(&g, &p, 50.0, &InitialInfection::All, 9).unwrap();
        let b = simulate_ct_exact(&g, &p, 50.0, &InitialInfection::All, 9).unwrap();
        assert_eq!(a, b);
        let dt = DynamicGraphModel::new(2, GraphKind::Amei);
        let mut dt = dt;
        dt.insert(0, 1, build_edge_markovian(0.5, 0.5, TimeModel::Dt).unwrap())
            .unwrap();
        let p = EpidemicParams::homogeneous(2, 0.1, 0.1).unwrap();
        assert!(simulate_ct_exact(&dt, &p, 1.0, &InitialInfection::All, 0).is_err());
    }
}
