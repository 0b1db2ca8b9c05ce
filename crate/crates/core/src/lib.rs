//! Geodesic-biased random walks on finite graphs.
//!
//! From an unexcited vertex the walker moves to a uniformly random neighbour;
//! from an excited vertex it takes one step along a fixed shortest path to the
//! target. This crate builds the graph families on which that bias slows the
//! walker down exponentially, computes exact expected hitting times and
//! absorption probabilities, simulates the walk reproducibly, and evaluates the
//! closed-form bounds that accompany the constructions.

pub mod bounds;
pub mod constructions;
pub mod error;
pub mod geodesic;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod sweep;

pub use constructions::LabeledInstance;
pub use error::{Error, Result};
pub use geodesic::{BiasMap, DistanceField, TieBreak};
pub use graph::{ExcitationSet, Graph, ValidationReport, VertexId};
pub use markov::{AbsorptionSolution, HittingSolution, InducedChain, TransitionMatrix};

pub use simulate::{EstimateReport, Simulator, WalkConfig, WalkOutcome};
