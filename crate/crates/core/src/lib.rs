//! Consensus dynamics on self-similar graphs.
//!
//! Builds the hierarchical graphs `H(n,k)` and the Sierpiński graphs
//! `S(n,k)`, computes their full Laplacian spectra by spectral decimation,
//! and evaluates the consensus quantities that depend on the spectrum:
//! convergence rate (algebraic connectivity), the uniform-delay stability
//! margin, first- and second-order network coherence, the Kirchhoff index
//! and the mean hitting time. Dense linear algebra and direct simulation of
//! the consensus dynamics provide independent ground truth.

pub mod error;
pub mod export;
pub mod graph;
pub mod metrics;
pub mod oracle;
pub mod sim;
pub mod spectrum;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
pub use graph::{Budget, Family, Graph, GraphSpec};
pub use metrics::{full_report, Method, MetricsReport};
pub use spectrum::{SpectrumMultiset, SpectrumSummary};
