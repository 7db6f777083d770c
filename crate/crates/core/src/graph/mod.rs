//! Edge processes, dynamic graph models and the mean matrix.

pub mod chain;
pub mod edge;
pub mod model;
pub mod presets;

pub use chain::{stationary_distribution, MarkovChainSpec, TimeModel};
pub use edge::{
    build_coxian_edge, build_edge_markovian, edge_on_probability, sample_edge_path, EdgePath,
    EdgeProcessModel, ProcessSpec,
};
pub use model::{
    mean_matrix, support_matrix, DynamicGraphModel, EdgeEntry, EdgeModelSpec, GraphKind, GraphSpec,
    MeanMatrix,
};
pub use presets::{
    edge_markovian_complete, experiment_graph, small_world, Dispersion, ExperimentGraph,
};
