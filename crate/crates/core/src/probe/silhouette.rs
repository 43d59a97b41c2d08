//! Silhouette scores for labelled groupings of an embedding set.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::embeddings::{Category, EmbeddingSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `1 − cos(a, b)`.
    #[default]
    Cosine,
    Euclidean,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::Domain(format!("unknown metric '{other}'; expected cosine or euclidean"))),
        }
    }
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                1.0 - dot / (na * nb)
            }
        }
    }
}

/// One group of a clustering: explicit item labels, whole categories, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<Category>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub name: String,
    pub groups: Vec<GroupSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfigFile {
    pub configs: Vec<ClusterConfig>,
}

const DEFAULT_CONFIGS: &str = include_str!("../../data/probe_configs.json");

impl ClusterConfig {
    pub fn by_categories(name: &str, groups: &[(&str, &[Category])]) -> Self {
        Self {
            name: name.into(),
            groups: groups
                .iter()
                .map(|(label, cats)| GroupSpec { label: (*label).into(), categories: cats.to_vec(), items: vec![] })
                .collect(),
        }
    }

    /// The four groupings shipped in `data/probe_configs.json`.
    pub fn defaults() -> Vec<ClusterConfig> {
        serde_json::from_str::<ClusterConfigFile>(DEFAULT_CONFIGS).expect("bundled config parses").configs
    }

    pub fn load(path: &Path) -> Result<Vec<ClusterConfig>> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ClusterConfigFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        if file.configs.is_empty() {
            return Err(Error::parse(path, "no cluster configurations"));
        }
        Ok(file.configs)
    }

    /// Item indices of each group within `set`.
    pub fn resolve(&self, set: &EmbeddingSet) -> Result<Vec<Vec<usize>>> {
        if self.groups.len() < 2 {
            return Err(Error::Invalid(format!("config '{}' needs at least two groups", self.name)));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let mut members: Vec<usize> = set
                .items()
                .iter()
                .enumerate()
                .filter(|(_, i)| g.categories.contains(&i.category))
                .map(|(k, _)| k)
                .collect();
            for label in &g.items {
                let k = set.index_of(label).ok_or_else(|| {
                    Error::Invalid(format!(
                        "config '{}' group '{}' names '{label}', which is not in {} ({})",
                        self.name,
                        g.label,
                        set.encoder_id(),
                        set.level()
                    ))
                })?;
                if !members.contains(&k) {
                    members.push(k);
                }
            }
            if members.is_empty() {
                return Err(Error::Invalid(format!("config '{}' group '{}' has no members", self.name, g.label)));
            }
            for k in &members {
                if !seen.insert(*k) {
                    return Err(Error::Invalid(format!(
                        "config '{}': item '{}' belongs to more than one group",
                        self.name,
                        set.items()[*k].label
                    )));
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        Ok(out)
    }
}

/// Mean silhouette over every grouped item, computed by brute force.
///
/// For item `i` in group `A`: `a` is its mean distance to the rest of `A`,
/// `b` the smallest mean distance to another group, and
/// `s = (b − a) / max(a, b)`. Items in singleton groups score 0.
pub fn silhouette_score(set: &EmbeddingSet, config: &ClusterConfig, metric: Metric) -> Result<f64> {
    let groups = config.resolve(set)?;
    let rows = set.rows();
    if metric == Metric::Cosine {
        if let Some(i) = groups.iter().flatten().find(|i| rows[**i].iter().all(|v| *v == 0.0)) {
            return Err(Error::Degenerate(format!("item '{}' is a zero vector", set.items()[*i].label)));
        }
    }
    silhouette_from_groups(&rows, &groups, metric)
}

/// [`silhouette_score`] on raw rows and index groups.
pub fn silhouette_from_groups(rows: &[Vec<f64>], groups: &[Vec<usize>], metric: Metric) -> Result<f64> {
    if groups.len() < 2 || groups.iter().any(Vec::is_empty) {
        return Err(Error::Invalid("silhouette needs at least two non-empty groups".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (gi, group) in groups.iter().enumerate() {
        for &i in group {
            count += 1;
            if group.len() == 1 {
                continue;
            }
            let mean_to = |members: &[usize]| {
                let (sum, n) = members
                    .iter()
                    .filter(|&&j| j != i)
                    .fold((0.0, 0usize), |(s, n), &j| (s + metric.distance(&rows[i], &rows[j]), n + 1));
                sum / n as f64
            };
            let a = mean_to(group);
            let b = groups
                .iter()
                .enumerate()
                .filter(|(gj, _)| *gj != gi)
                .map(|(_, other)| mean_to(other))
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            total += if denom > 0.0 { (b - a) / denom } else { 0.0 };
        }
    }
    Ok(total / count as f64)
}
