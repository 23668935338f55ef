//! Graph summarization with approximate regular partitions.
//!
//! A graph is split into equal-size classes that are refined until most class
//! pairs look random (epsilon-regular). The resulting reduced graph can be
//! blown back up into a density matrix, compared with the original, and
//! indexed by its Laplacian spectrum for similarity search.

pub mod bench;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod reconstruction;
pub mod refinement;
pub mod regularity;
pub mod spectral;
pub mod store;
pub mod summarizer;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Graph, VertexSet};
pub use regularity::EquitablePartition;
pub use summarizer::{summarize, ReducedGraph, Summary, SummaryConfig};
