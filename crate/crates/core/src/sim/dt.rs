//! Exact discrete-time SIS chain over a sampled dynamic graph.

use rand::Rng;

use super::environment::{DtEdgeDynamics, EdgeEnvironment, EdgeIndex};
use super::trace::{InitialInfection, SimulationTrace};
use crate::error::{Error, Result};
use crate::graph::{DynamicGraphModel, TimeModel};
use crate::rng;
use crate::threshold::EpidemicParams;

/// Shared per-graph data for repeated discrete-time runs.
#[derive(Debug, Clone)]
pub struct DtSimulator {
    index: EdgeIndex,
    dynamics: DtEdgeDynamics,
}

impl DtSimulator {
    pub fn new(graph: &DynamicGraphModel) -> Result<Self> {
        if graph.time_model() == Some(TimeModel::Ct) {
            return Err(Error::WrongTime { expected: "DT" });
        }
        let index = EdgeIndex::new(graph);
        let dynamics = DtEdgeDynamics::new(&index)?;
        Ok(Self { index, dynamics })
    }

    pub fn index(&self) -> &EdgeIndex {
        &self.index
    }

    /// One run with edges sampled lazily from their chains. Node events and
    /// edge paths draw from streams derived from `seed`.
    pub fn run(
        &self,
        params: &EpidemicParams,
        steps: usize,
        init: &InitialInfection,
        reinfect: bool,
        seed: u64,
        record_states: bool,
    ) -> Result<SimulationTrace> {
        let mut env = self
            .dynamics
            .lazy(rng::derive_seed(seed, &["edges".into()]));
        run_in_environment(
            &self.index,
            &mut env,
            params,
            steps,
            init,
            reinfect,
            seed,
            record_states,
        )
    }
}

/// `simulate_dt_exact` with a fresh [`DtSimulator`] and no state recording.
pub fn simulate_dt_exact(
    graph: &DynamicGraphModel,
    params: &EpidemicParams,
    steps: usize,
    init: &InitialInfection,
    reinfect: bool,
    seed: u64,
) -> Result<SimulationTrace> {
    DtSimulator::new(graph)?.run(params, steps, init, reinfect, seed, false)
}

fn check_probabilities(params: &EpidemicParams, n: usize) -> Result<()> {
    if params.n() != n {
        return Err(Error::InvalidParams(format!(
            "{} rate entries for {n} nodes",
            params.n()
        )));
    }
    params.check_discrete()?;
    if let Some(b) = params.beta().iter().find(|&&b| b > 1.0) {
        return Err(Error::ParamRange(format!(
            "infection probability {b} exceeds 1"
        )));
    }
    Ok(())
}

/// Synchronous update over an arbitrary edge environment.
///
/// At step `k` each infected node recovers with probability `δ_i` and each
/// susceptible `i` is infected with probability `1 − Π_j (1 − β_i A_ij(k) X_j(k))`.
/// With `reinfect`, an extinct state is reseeded at one uniform node before
/// step `k + 1`. The trace has one stamp per step `0..=steps`.
#[allow(clippy::too_many_arguments)]
pub fn run_in_environment<E: EdgeEnvironment>(
    index: &EdgeIndex,
    env: &mut E,
    params: &EpidemicParams,
    steps: usize,
    init: &InitialInfection,
    reinfect: bool,
    seed: u64,
    record_states: bool,
) -> Result<SimulationTrace> {
    let n = index.n;
    check_probabilities(params, n)?;
    let (beta, delta) = (params.beta(), params.delta());
    let mut rng = rng::stream(seed, &["nodes".into()]);
    let mut trace = SimulationTrace::new(seed, record_states);

    let mut x = init.state(n);
    let mut infected: Vec<usize> = (0..n).filter(|&i| x[i]).collect();
    trace.push(0.0, &x, infected.len());
    let mut next = x.clone();
    let mut next_infected = Vec::with_capacity(n);

    for k in 0..steps {
        next_infected.clear();
        for &j in &infected {
            if rng.random::<f64>() >= delta[j] {
                next_infected.push(j);
            } else {
                next[j] = false;
            }
        }
        for &j in &infected {
            for &(i, e) in &index.out[j] {
                // contacts of an already infected target cannot change it
                if x[i] || next[i] {
                    continue;
                }
                // the edge is queried only after the contact draw succeeds;
                // skipping a query leaves the edge's law unchanged
                if rng.random::<f64>() < beta[i] && env.is_on(e, k) {
                    next[i] = true;
                    next_infected.push(i);
                }
            }
        }
        if reinfect && next_infected.is_empty() && n > 0 {
            let i = rng.random_range(0..n);
            next[i] = true;
            next_infected.push(i);
            trace.reinfections += 1;
        }
        next_infected.sort_unstable();
        x.copy_from_slice(&next);
        std::mem::swap(&mut infected, &mut next_infected);
        trace.push((k + 1) as f64, &x, infected.len());
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_edge_markovian, EdgeProcessModel, GraphKind};

    fn complete_static(n: usize) -> DynamicGraphModel {
        let mut g = DynamicGraphModel::new(n, GraphKind::Amei);
        for i in 0..n {
            for j in i + 1..n {
                g.insert(i, j, EdgeProcessModel::static_on(TimeModel::Dt))
                    .unwrap();
            }
        }
        g
    }

    #[test]
    fn full_recovery_goes_extinct_at_step_one() {
        let g = complete_static(4);
        let p = EpidemicParams::nonnegative(vec![0.0; 4], vec![1.0; 4]).unwrap();
        let t = simulate_dt_exact(&g, &p, 5, &InitialInfection::Nodes(vec![2]), false, 1).unwrap();
        assert_eq!(t.infected_counts, vec![1, 0, 0, 0, 0, 0]);
        assert_eq!(t.times, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn reinfection_keeps_one_node() {
        let g = complete_static(5);
        let p = EpidemicParams::nonnegative(vec![0.0; 5], vec![1.0; 5]).unwrap();
        let t = simulate_dt_exact(&g, &p, 20, &InitialInfection::All, true, 7).unwrap();
        assert!(t.infected_counts[1..].iter().all(|&c| c == 1));
        assert_eq!(t.reinfections, 20);
    }

    #[test]
    fn certain_spread_without_recovery() {
        let g = complete_static(6);
        let p = EpidemicParams::nonnegative(vec![1.0; 6], vec![0.0; 6]).unwrap();
        let t = simulate_dt_exact(&g, &p, 2, &InitialInfection::Nodes(vec![0]), false, 3).unwrap();
        assert_eq!(t.infected_counts, vec![1, 6, 6]);
    }

    #[test]
    fn rejects_probabilities_above_one() {
        let g = complete_static(3);
        let p = EpidemicParams::nonnegative(vec![1.5; 3], vec![0.5; 3]).unwrap();
        let e = simulate_dt_exact(&g, &p, 2, &InitialInfection::All, false, 0).unwrap_err();
        assert!(matches!(e, Error::ParamRange(_)));
        let p = EpidemicParams::nonnegative(vec![0.5; 3], vec![2.0; 3]).unwrap();
        assert!(simulate_dt_exact(&g, &p, 2, &InitialInfection::All, false, 0).is_err());
    }

    #[test]
    fn replayable_with_states() {
        let mut g = DynamicGraphModel::new(5, GraphKind::Amai);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    g.insert(i, j, build_edge_markovian(0.3, 0.4, TimeModel::Dt).unwrap())
                        .unwrap();
                }
            }
        }
        let p = EpidemicParams::homogeneous(5, 0.3, 0.2).unwrap();
        let sim = DtSimulator::new(&g).unwrap();
        let a = sim
            .run(&p, 50, &InitialInfection::All, true, 11, true)
            .unwrap();
        let b = sim
            .run(&p, 50, &InitialInfection::All, true, 11, true)
            .unwrap();
        assert_eq!(a, b);
        for (s, &c) in a.states.as_ref().unwrap().iter().zip(&a.infected_counts) {
            assert_eq!(s.iter().filter(|&&v| v).count(), c);
        }
    }
}
