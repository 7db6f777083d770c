//! Edge indexing and discrete-time edge environments.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use crate::error::Result;
use crate::graph::{
    stationary_distribution, DynamicGraphModel, EdgePath, EdgeProcessModel, MarkovChainSpec,
};

/// Edges of a graph in a fixed order, with contact lists.
#[derive(Debug, Clone)]
pub struct EdgeIndex {
    pub n: usize,
    /// `out[j]`: `(i, e)` for every position `(i, j)` controlled by edge `e`,
    /// i.e. the nodes `j` can infect through `e`.
    pub out: Vec<Vec<(usize, usize)>>,
    /// `positions[e]`: adjacency positions of edge `e`.
    pub positions: Vec<Vec<(usize, usize)>>,
    pub models: Vec<EdgeProcessModel>,
}

impl EdgeIndex {
    pub fn new(graph: &DynamicGraphModel) -> Self {
        let n = graph.n();
        let mut out = vec![Vec::new(); n];
        let mut positions = Vec::new();
        let mut models = Vec::new();
        for (e, (&key, model)) in graph.edges().enumerate() {
            let pos: Vec<_> = graph.positions(key).collect();
            for &(i, j) in &pos {
                out[j].push((i, e));
            }
            positions.push(pos);
            models.push(model.clone());
        }
        Self {
            n,
            out,
            positions,
            models,
        }
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// Source of edge states for a discrete-time run.
pub trait EdgeEnvironment {
    /// Whether edge `e` is present at step `k`. Calls for one edge arrive
    /// with nondecreasing `k`.
    fn is_on(&mut self, e: usize, k: usize) -> bool;
}

/// Pre-sampled paths, one per edge.
#[derive(Debug, Clone)]
pub struct FixedEnvironment {
    paths: Vec<Vec<bool>>,
}

impl FixedEnvironment {
    pub fn new(paths: &[EdgePath]) -> Self {
        let paths = paths
            .iter()
            .map(|p| match p {
                EdgePath::Dt { states } => states.clone(),
                EdgePath::Ct { .. } => panic!("fixed DT environment needs DT paths"),
            })
            .collect();
        Self { paths }
    }

    pub fn from_states(paths: Vec<Vec<bool>>) -> Self {
        Self { paths }
    }
}

impl EdgeEnvironment for FixedEnvironment {
    fn is_on(&mut self, e: usize, k: usize) -> bool {
        let p = &self.paths[e];
        p[k.min(p.len() - 1)]
    }
}

#[derive(Debug, Clone)]
enum Dynamics {
    Static(bool),
    /// Two-state chain with `P(on)` relaxing as `π + (x − π)λ^t`.
    Two {
        pi: f64,
        lambda: f64,
    },
    General {
        chain: MarkovChainSpec,
        output: Vec<bool>,
        pi: Vec<f64>,
    },
}

/// Discrete-time edge dynamics shared by many runs.
#[derive(Debug, Clone)]
pub struct DtEdgeDynamics {
    dynamics: Vec<Dynamics>,
    initial: Vec<Option<usize>>,
}

impl DtEdgeDynamics {
    pub fn new(index: &EdgeIndex) -> Result<Self> {
        let mut dynamics = Vec::with_capacity(index.len());
        let mut initial = Vec::with_capacity(index.len());
        for m in &index.models {
            let two = m.two_state_rates();
            // two-state edges are tracked as 0 = off, 1 = on
            initial.push(m.chain().initial().map(|s| {
                if two.is_some() {
                    usize::from(m.output()[s])
                } else {
                    s
                }
            }));
            let d = if m.is_static() {
                Dynamics::Static(m.output()[0])
            } else if let Some((q, r)) = two {
                Dynamics::Two {
                    pi: q / (q + r),
                    lambda: 1.0 - q - r,
                }
            } else {
                Dynamics::General {
                    chain: m.chain().clone(),
                    output: m.output().to_vec(),
                    pi: stationary_distribution(m.chain())?,
                }
            };
            dynamics.push(d);
        }
        Ok(Self { dynamics, initial })
    }

    /// Lazily sampled environment for one run. Edge `e` draws from its own
    /// generator seeded by `(seed, e)`.
    pub fn lazy(&self, seed: u64) -> LazyEnvironment<'_> {
        LazyEnvironment {
            dyn_: self,
            seed,
            state: vec![None; self.dynamics.len()],
        }
    }
}

#[derive(Debug, Clone)]
struct EdgeState {
    k: usize,
    /// Chain state; for two-state edges `1` is on.
    s: usize,
    rng: SmallRng,
}

/// Edges sampled on demand; each edge is advanced only when queried.
pub struct LazyEnvironment<'a> {
    dyn_: &'a DtEdgeDynamics,
    seed: u64,
    state: Vec<Option<EdgeState>>,
}

impl LazyEnvironment<'_> {
    fn output(&self, e: usize, s: usize) -> bool {
        match &self.dyn_.dynamics[e] {
            Dynamics::Static(on) => *on,
            Dynamics::Two { .. } => s == 1,
            Dynamics::General { output, .. } => output[s],
        }
    }
}

impl EdgeEnvironment for LazyEnvironment<'_> {
    fn is_on(&mut self, e: usize, k: usize) -> bool {
        let (dy, seed) = (self.dyn_, self.seed);
        let dynamics = &dy.dynamics[e];
        if let Dynamics::Static(on) = dynamics {
            return *on;
        }
        let st = self.state[e].get_or_insert_with(|| {
            let mut rng =
                SmallRng::seed_from_u64(seed ^ (e as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (k0, s) = match dy.initial[e] {
                Some(s) => (0, s),
                // stationary at 0 and unobserved, hence stationary at k
                None => (k, draw_stationary(dynamics, &mut rng)),
            };
            EdgeState { k: k0, s, rng }
        });
        if st.k < k {
            let t = k - st.k;
            st.s = match dynamics {
                Dynamics::Two { pi, lambda } => {
                    let x = if st.s == 1 { 1.0 } else { 0.0 };
                    let p_on = pi + (x - pi) * lambda.powi(t.min(i32::MAX as usize) as i32);
                    usize::from(st.rng.random::<f64>() < p_on)
                }
                Dynamics::General { chain, .. } => {
                    let mut s = st.s;
                    for _ in 0..t {
                        s = chain.sample_next(s, &mut st.rng);
                    }
                    s
                }
                Dynamics::Static(_) => unreachable!(),
            };
            st.k = k;
        }
        let s = st.s;
        self.output(e, s)
    }
}

fn draw_stationary<R: Rng>(d: &Dynamics, rng: &mut R) -> usize {
    match d {
        Dynamics::Static(_) => 0,
        Dynamics::Two { pi, .. } => usize::from(rng.random::<f64>() < *pi),
        Dynamics::General { pi, .. } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, p) in pi.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            pi.len() - 1
        }
    }
}
