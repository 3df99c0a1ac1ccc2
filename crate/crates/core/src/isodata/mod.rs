//! Keyframe selection by adaptive clustering of candidate-frame embeddings.

mod cluster;
mod keyframes;
mod matrix;

pub use cluster::{initial_center_rows, isodata_cluster, isodata_cluster_with, Clustering, IsodataParams};
pub use keyframes::{select_keyframes, select_keyframes_with, SelectedFrame};
pub use matrix::{EmbeddingMatrix, TVSE_MAGIC, TVSE_VERSION};
