//! Semi-supervised classification of discretely observed functional data
//! with an estimated Fermat distance.
//!
//! Raw curves are smoothed onto a shared grid, pooled (labeled and
//! unlabeled) into a kNN ∪ MST graph under the L2 metric, and compared by
//! scaled power-alpha shortest paths. Weighted kNN and MDS-induced SVMs then
//! classify the unlabeled curves.

pub mod classify;
pub mod data;
pub mod dimension;
pub mod error;
pub mod fermat;
pub mod geometry;
pub mod graph;
pub mod simgen;
pub mod smoothing;

pub use classify::{classify_pipeline, Method, PipelineConfig, PipelineOutput};
pub use data::{Dataset, DiscreteCurve, DistanceMatrix, Grid, SmoothCurve};
pub use error::{Error, Result};
pub use fermat::{fermat_out_of_sample, fit_fermat, FermatConfig, FermatModel};
pub use graph::SparseGraph;
pub use smoothing::SmootherConfig;
