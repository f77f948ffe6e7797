//! Classifiers on estimated Fermat distances.

pub mod mds;
pub mod pipeline;
pub mod svm;
pub mod wknn;

pub use mds::{mds_embed, MdsEmbedding, TargetDim};
pub use pipeline::{classify_from_l2, classify_pipeline, Diagnostics, Method, PipelineConfig, PipelineOutput};
pub use svm::{balanced_class_weights, svm_predict, svm_train_ovr, Kernel, SvmConfig, SvmModel};
pub use wknn::{default_sigma_grid, loocv_sigma, wknn_predict, wknn_vote, SigmaSelection, WknnConfig, WknnVote};
