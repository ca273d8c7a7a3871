//! Post-processing of hierarchical community structures.
//!
//! Given a graph and a dendrogram of nested communities (from any
//! agglomerative or divisive method), this crate
//!
//! * finds the best partition among *all* cuts of the dendrogram for an
//!   additive quality (modularity, performance, or a distance-based
//!   similarity quality) in linear time ([`optimize`]);
//! * computes, for a scale parameter `α ∈ [0, 1]`, the optimal partition at
//!   every scale at once as a convex piecewise-affine envelope
//!   ([`multiscale`]);
//! * ranks scales by how long their communities persist ([`relevance`]);
//! * ships a greedy modularity dendrogram builder ([`detect`]) and synthetic
//!   benchmarks with the adjusted Rand index ([`bench`]).

pub mod bench;
pub mod dendrogram;
pub mod detect;
pub mod envelope;
pub mod error;
pub mod graph;
pub mod multiscale;
pub mod optimize;
pub mod partition;
pub mod quality;
pub mod relevance;
pub mod similarity;

pub use dendrogram::{Cut, Dendrogram, NodeId};
pub use error::{Error, Result};
pub use graph::{Graph, Vertex};
pub use partition::Partition;
pub use quality::{NodeScorer, NodeTerms, QualityFamily, QualityModel, ScaleTerms};
pub use similarity::SimilarityData;
