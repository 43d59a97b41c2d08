use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embeddings::{Category, EmbeddingSet, Level};
use super::pca::pca;
use super::silhouette::{silhouette_score, ClusterConfig, Metric};
use crate::error::{Error, Result};
use crate::parallel::with_threads;
use crate::plot::scatter;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub metric: Metric,
    pub pca_dims: usize,
    pub threads: Option<usize>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { metric: Metric::Cosine, pca_dims: 2, threads: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedItem {
    pub label: String,
    pub category: Category,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBlock {
    pub explained_variance: Vec<f64>,
    pub items: Vec<ProjectedItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteCell {
    pub config: String,
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetReport {
    pub encoder_id: String,
    pub level: Level,
    pub dim: usize,
    pub item_count: usize,
    pub pca: Option<PcaBlock>,
    pub pca_error: Option<String>,
    pub silhouettes: Vec<SilhouetteCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub tool_version: String,
    pub metric: Metric,
    pub pca_dims: usize,
    pub sets: Vec<SetReport>,
}

fn probe_set(set: &EmbeddingSet, configs: &[ClusterConfig], options: &ProbeOptions) -> SetReport {
    let (pca_block, pca_error) = match pca(&set.rows(), options.pca_dims) {
        Ok(p) => (
            Some(PcaBlock {
                explained_variance: p.explained_variance,
                items: set
                    .items()
                    .iter()
                    .zip(p.projections)
                    .map(|(i, coords)| ProjectedItem { label: i.label.clone(), category: i.category, coords })
                    .collect(),
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    let silhouettes = configs
        .par_iter()
        .map(|c| match silhouette_score(set, c, options.metric) {
            Ok(s) => SilhouetteCell { config: c.name.clone(), score: Some(s), error: None },
            Err(e) => SilhouetteCell { config: c.name.clone(), score: None, error: Some(e.to_string()) },
        })
        .collect();
    SetReport {
        encoder_id: set.encoder_id().to_string(),
        level: set.level(),
        dim: set.dim(),
        item_count: set.len(),
        pca: pca_block,
        pca_error,
        silhouettes,
    }
}

/// PCA for every set and a silhouette score for every (set, config) pair.
/// Failing cells carry their error; the rest of the suite still runs.
pub fn run_probe_suite(
    sets: &[EmbeddingSet],
    configs: &[ClusterConfig],
    options: &ProbeOptions,
) -> Result<ProbeReport> {
    if sets.is_empty() || configs.is_empty() {
        return Err(Error::Invalid("the probe needs at least one embedding set and one config".into()));
    }
    let reports = with_threads(options.threads, || sets.par_iter().map(|s| probe_set(s, configs, options)).collect())?;
    Ok(ProbeReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        metric: options.metric,
        pca_dims: options.pca_dims,
        sets: reports,
    })
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

impl ProbeReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// One PCA scatter per set, one marker series per category, as SVG.
    pub fn write_plots(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (k, set) in self.sets.iter().enumerate() {
            let Some(block) = &set.pca else { continue };
            if block.explained_variance.len() < 2 {
                continue;
            }
            let series: Vec<(&str, Vec<[f64; 2]>)> = Category::ALL
                .iter()
                .map(|c| {
                    let pts =
                        block.items.iter().filter(|i| i.category == *c).map(|i| [i.coords[0], i.coords[1]]).collect();
                    (c.as_str(), pts)
                })
                .filter(|(_, p): &(&str, Vec<[f64; 2]>)| !p.is_empty())
                .collect();
            let path = dir.join(format!("{k:02}_{}_{}_pca.svg", file_safe(&set.encoder_id), set.level));
            scatter(&path, &format!("{} ({}) PCA", set.encoder_id, set.level), &series)?;
            written.push(path);
        }
        Ok(written)
    }
}
