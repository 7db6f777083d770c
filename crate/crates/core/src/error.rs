use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "chain is not irreducible: state graph has {components} strongly connected components"
    )]
    ReducibleChain { components: usize },

    #[error("edge ({i}, {j}) is not irreducible")]
    ReducibleEdge { i: usize, j: usize },

    #[error("discrete-time edge ({i}, {j}) is periodic")]
    PeriodicEdge { i: usize, j: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("power iteration did not converge after {iterations} iterations (estimate {estimate}, gap {gap:e})")]
    ConvergenceFailure {
        iterations: usize,
        estimate: f64,
        gap: f64,
    },

    #[error("matrix is neither Metzler nor small enough for the dense fallback ({dim}x{dim})")]
    UnsupportedMatrix { dim: usize },

    #[error("empty interval ({lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("objective diverges near the left endpoint (value {value:e} at s = {s})")]
    DivergenceDetected { s: f64, value: f64 },

    #[error("wrong graph kind: expected {expected}")]
    WrongKind { expected: &'static str },

    #[error("wrong time model: expected {expected}")]
    WrongTime { expected: &'static str },

    #[error("invalid epidemic parameters: {0}")]
    InvalidParams(String),

    #[error("search bracket [{lo}, {hi}] does not straddle the verdict")]
    BracketError { lo: f64, hi: f64 },

    #[error("too many switching edges: {m} (limit {limit})")]
    TooManyEdges { m: usize, limit: usize },

    #[error("edge ({i}, {j}) is not a two-state Markov process")]
    NonMarkovEdge { i: usize, j: usize },

    #[error("too many support configurations: 2^{bits} (limit 2^{limit})")]
    TooManyConfigurations { bits: usize, limit: usize },

    #[error("probability out of range: {0}")]
    ParamRange(String),

    #[error("integration tolerance not met: {0}")]
    ToleranceFailure(String),

    #[error("insufficient data: {got} trajectories, need {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}
