use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("constraint graph has no adjacent pair of colors")]
    EmptyConstraint,
    #[error("{what}: {count} colors exceeds the cap of {cap}")]
    TooManyColors {
        what: &'static str,
        count: usize,
        cap: usize,
    },
    #[error("color {color} out of range for a graph with {num_colors} colors")]
    ColorOutOfRange { color: usize, num_colors: usize },
    #[error("weights must be strictly positive (color {color} has weight {value})")]
    NonPositiveWeight { color: usize, value: String },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("invalid torus: {0}")]
    InvalidTorus(String),
    #[error("vertex {vertex} out of range for a torus with {num_vertices} vertices")]
    VertexOutOfRange { vertex: usize, num_vertices: usize },
    #[error("coloring violates the constraint graph on edge ({u}, {v})")]
    InvalidColoring { u: usize, v: usize },
    #[error("coloring has {got} entries, torus has {expected} vertices")]
    ColoringLength { expected: usize, got: usize },
    #[error("{what} needs {needed} states, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: String,
        budget: u64,
    },
    #[error("{what} would visit more than {cap} items")]
    CapExceeded { what: &'static str, cap: u64 },
    #[error("conditioning event has probability zero")]
    ZeroConditioningEvent,
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("extremal pairs do not form an approximate equipartition (no two-class, singleton or transitive structure)")]
    NotEquipartition,
    #[error("no valid initial coloring found")]
    NoValidInitial,
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
