//! Clustering-based shape features for point clouds.
//!
//! Point clouds are resampled around a grid of landmarks at several
//! resolutions, each sample is clustered hierarchically under four linkages,
//! and the spread of the resulting clustering diagrams (measured with the
//! bottleneck distance) is summarized into dimension-0 features. Vietoris–Rips
//! persistence in dimension 1 provides the cycle features the dimension-0
//! features are compared against. Random forests and cross-validation close
//! the loop.
//!
//! Heavy loops run on rayon when the `parallel` feature is enabled (the
//! default); see [`par::Execution`].

pub mod bottleneck;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod forest;
pub mod hclust;
pub mod ingest;
pub mod matching;
pub mod par;
pub mod persistence;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod union_find;

pub use error::{Error, Result};
