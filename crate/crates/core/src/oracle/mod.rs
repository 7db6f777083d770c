//! Exponential-size ground truth for small instances.

pub mod kronecker;
pub mod random;

pub use kronecker::{
    dense_kronecker, enumerate_subgraphs, exponential_abscissa, exponential_condition,
    ExponentialVerdict, KroneckerOperator, SubgraphEnumeration, SwitchEdge,
};
pub use random::{
    chung_tail_check, expected_certificate, mean_se, sample_certificate_matrix, ChungPoint,
    Estimate, ExpectationMode, RandomMatrixSampler, SamplerKind,
};
