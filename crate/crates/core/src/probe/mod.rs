//! Text-embedding analysis: PCA projections and silhouette scores over
//! illuminant vocabulary groupings.

mod embeddings;
mod pca;
mod silhouette;
mod suite;

pub use embeddings::{
    load_embeddings, sha256_hex, write_embeddings, Category, EmbeddingItem, EmbeddingManifest, EmbeddingSet, ItemEntry,
    Level,
};
pub use pca::{orient, pca, symmetric_eigen, Pca};
pub use silhouette::{silhouette_from_groups, silhouette_score, ClusterConfig, ClusterConfigFile, GroupSpec, Metric};
pub use suite::{run_probe_suite, PcaBlock, ProbeOptions, ProbeReport, ProjectedItem, SetReport, SilhouetteCell};

use crate::error::Result;

/// PCA of an embedding set's vectors.
pub fn pca_project(set: &EmbeddingSet, out_dims: usize) -> Result<Pca> {
    pca(&set.rows(), out_dims)
}
