use thiserror::Error;

use crate::graph::VertexId;

/// Errors produced by graph construction and the analyses built on top of it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(VertexId, VertexId),
    #[error("endpoint {vertex} out of range for graph on {n} vertices")]
    EndpointOutOfRange { vertex: usize, n: usize },
    #[error("graph is disconnected: vertex {0} cannot reach the target")]
    DisconnectedGraph(VertexId),
    #[error("target is unreachable from vertex {0} under the biased dynamics")]
    Unreachable(VertexId),
    #[error("solution overflows the representable range")]
    SolveOverflow,
    #[error("residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("zero pivot while eliminating unknown {0}")]
    Singular(usize),
    #[error("avoid and reach sets overlap at vertex {0}")]
    StatesOverlap(VertexId),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
