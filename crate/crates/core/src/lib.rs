//! Clique recovery by decomposing an adjacency matrix into a rank-one clique
//! indicator plus a sparse remainder.
//!
//! The solver minimises `‖L‖* + λ‖C∘S‖₁` subject to `L + S = M` with ADMM,
//! refreshing the weights `C = ε/(S + ε)²` as it goes. Around it sit random
//! instance generators, DIMACS ingestion, recovery metrics, a dual certificate
//! checker and batch experiment runners.

pub mod admm;
pub mod certificate;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod projection;
pub mod prox;
pub mod spectral;

pub use admm::{solve, InitMode, Model, SolveResult, SolveStatus, SolverConfig};
pub use error::{Error, Result};
pub use graph::{Graph, GroundTruthPair, PlantedInstance};
pub use matrix::DenseMatrix;
