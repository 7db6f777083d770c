//! Exact stochastic simulation, the linear upper-bound systems and the
//! empirical-threshold protocol.

pub mod ct;
pub mod dt;
pub mod empirical;
pub mod environment;
pub mod linear;
pub mod trace;

pub use ct::{simulate_ct_exact, simulate_ct_exact_with};
pub use dt::{run_in_environment, simulate_dt_exact, DtSimulator};
pub use empirical::{empirical_threshold, empirical_threshold_with, EmpiricalThresholdReport};
pub use environment::{
    DtEdgeDynamics, EdgeEnvironment, EdgeIndex, FixedEnvironment, LazyEnvironment,
};
pub use linear::{
    decay_rate_estimate, linear_decay_rate, propagate_linear, propagate_linear_with,
    sample_graph_path, DecayEstimate, GraphPath, LinearMode, LinearOptions, LinearTrajectory,
    MIN_TRAJECTORIES,
};
pub use trace::{InitialInfection, NodeState, SimulationTrace};
