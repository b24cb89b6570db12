//! Fault-tolerant distance oracles for directed graphs with small positive
//! integer weights.
//!
//! * [`ring`] and [`polymatrix`]: arithmetic over `Z_p[x] / <x^r>` and dense
//!   matrices of such polynomials (inversion, determinants, degree-aware
//!   products).
//! * [`graph`]: the graph model, its text format and exact oracles.
//! * [`algebraic_dso`]: the `r`-truncated oracle built from the inverse of the
//!   symbolic adjacency matrix, answering each failure query with a rank-one
//!   adjoint update.
//! * [`consistent_spt`]: permutation-based tie breaking that yields
//!   consistent incoming and outgoing shortest-path trees.
//! * [`full_dso`]: the truncated core plus an exact fallback for long answers.

pub mod algebraic_dso;
pub mod consistent_spt;
pub mod full_dso;
pub mod graph;
pub mod polymatrix;
pub mod ring;

pub use algebraic_dso::{DsoError, SymbolicAdjacency, TruncatedDso};
pub use consistent_spt::{Permutation, ShortestPathForests, SptConfig, WitnessMatrix};
pub use full_dso::{FullDso, FullDsoConfig};
pub use graph::{Distance, DistanceMatrix, Failure, GraphError, WeightedDigraph, INF};
pub use polymatrix::{MatrixError, PolyMatrix, ShiftVector};
pub use ring::{Field, FieldElement, RingError, TruncatedPoly, GOLDILOCKS};
