//! Quantum-inspired classical (QIC) linear-system laboratory: SQ access
//! primitives, the sampling/estimation algorithms built on them, the
//! welded-trees and Simon's-oracle hard instances with oracle-backed SQ
//! simulation and query accounting, and numerical verification of the
//! spectral machinery separating QIC from quantum solvers.

pub mod linalg;
pub mod qic_algorithms;
pub mod simon;
pub mod spectra;
pub mod sq_core;
pub mod welded_trees;

pub use qic_algorithms::{
    ComplexityParams, CoordinateDescentState, NormEstimate, RejectionOutcome, SparsityProfile,
};
pub use simon::{CircuitMatrix, Decision, RecoveryResult, SimonMode, SimonOracle, SolutionVector};
pub use spectra::{CheckReport, EigenReport, Precision};
pub use welded_trees::{
    GameResult, HardMatrixParams, LayeredSolution, Strategy, TreeOracle, WeldedTreesInstance,
};
pub use sq_core::{
    LedgerHandle, MaterializedSqMatrix, MaterializedSqVector, QueryLedger, SqError, SqMatrix,
    SqVector, WeightedIndexTree,
};
