use serde::{Deserialize, Serialize};

/// `X_i = true` when node `i` is infected.
pub type NodeState = Vec<bool>;

/// Infected counts of one exact run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    /// Strictly increasing event times (CT) or steps (DT).
    pub times: Vec<f64>,
    pub infected_counts: Vec<usize>,
    /// Node states at each stamp, when recorded.
    pub states: Option<Vec<NodeState>>,
    pub seed: u64,
    pub reinfections: usize,
}

impl SimulationTrace {
    pub(crate) fn new(seed: u64, record_states: bool) -> Self {
        Self {
            times: Vec::new(),
            infected_counts: Vec::new(),
            states: record_states.then(Vec::new),
            seed,
            reinfections: 0,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: &[bool], count: usize) {
        self.times.push(t);
        self.infected_counts.push(count);
        if let Some(s) = &mut self.states {
            s.push(x.to_vec());
        }
    }

    pub fn final_count(&self) -> usize {
        self.infected_counts.last().copied().unwrap_or(0)
    }

    pub fn is_extinct(&self) -> bool {
        self.final_count() == 0
    }
}

/// Initial infection pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialInfection {
    /// Every node infected.
    All,
    Nodes(Vec<usize>),
}

impl InitialInfection {
    pub fn state(&self, n: usize) -> NodeState {
        match self {
            InitialInfection::All => vec![true; n],
            InitialInfection::Nodes(v) => {
                let mut x = vec![false; n];
                for &i in v {
                    if i < n {
                        x[i] = true;
                    }
                }
                x
            }
        }
    }
}
