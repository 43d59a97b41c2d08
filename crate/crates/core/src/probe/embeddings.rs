//! Embedding interchange format.
//!
//! A JSON manifest (`encoder_id`, `level`, `dim`, `count`, `dtype`,
//! `data_file`, `checksum`, `items`) next to a raw file of `count × dim`
//! little-endian `f32` values, row-major. `checksum` is the SHA-256 of the raw
//! file in lowercase hex; `data_file` is relative to the manifest.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Token,
    Sentence,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Token => "token",
            Level::Sentence => "sentence",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    NamedIlluminant,
    KelvinValue,
    GeneralLighting,
    GenericNumeral,
}

impl Category {
    pub const ALL: [Category; 4] =
        [Category::NamedIlluminant, Category::KelvinValue, Category::GeneralLighting, Category::GenericNumeral];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::NamedIlluminant => "named_illuminant",
            Category::KelvinValue => "kelvin_value",
            Category::GeneralLighting => "general_lighting",
            Category::GenericNumeral => "generic_numeral",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingItem {
    pub label: String,
    pub category: Category,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    encoder_id: String,
    level: Level,
    dim: usize,
    items: Vec<EmbeddingItem>,
}

impl EmbeddingSet {
    pub fn new(encoder_id: impl Into<String>, level: Level, items: Vec<EmbeddingItem>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::Invalid(format!("an embedding set needs at least 2 items, got {}", items.len())));
        }
        let dim = items[0].vector.len();
        if dim == 0 {
            return Err(Error::Invalid("embedding dimension must be positive".into()));
        }
        let mut labels = HashSet::new();
        for item in &items {
            if item.vector.len() != dim {
                return Err(Error::Shape(format!(
                    "item '{}' has {} values, expected {dim}",
                    item.label,
                    item.vector.len()
                )));
            }
            if item.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("item '{}' holds non-finite values", item.label)));
            }
            if !labels.insert(item.label.as_str()) {
                return Err(Error::Invalid(format!("label '{}' appears more than once", item.label)));
            }
        }
        Ok(Self { encoder_id: encoder_id.into(), level, dim, items })
    }

    pub fn encoder_id(&self) -> &str {
        &self.encoder_id
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn items(&self) -> &[EmbeddingItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.items.iter().position(|i| i.label == label)
    }

    /// Vectors widened to `f64`, in item order.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.items.iter().map(|i| i.vector.iter().map(|v| *v as f64).collect()).collect()
    }

    /// Raw `f32le` payload in item order.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.items.iter().flat_map(|i| i.vector.iter().flat_map(|v| v.to_le_bytes())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemEntry {
    pub label: String,
    pub category: Category,
    pub row_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub encoder_id: String,
    pub level: Level,
    pub dim: usize,
    pub count: usize,
    pub dtype: String,
    pub data_file: String,
    pub checksum: String,
    pub items: Vec<ItemEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn parse_manifests(path: &Path, text: &str) -> Result<Vec<EmbeddingManifest>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::parse(path, format!("not valid JSON: {e}")))?;
    let entries = match value {
        serde_json::Value::Array(v) => v,
        other => vec![other],
    };
    entries
        .into_iter()
        .enumerate()
        .map(|(k, v)| serde_json::from_value(v).map_err(|e| Error::parse(path, format!("manifest entry {k}: {e}"))))
        .collect()
}

fn load_one(path: &Path, m: EmbeddingManifest) -> Result<EmbeddingSet> {
    if m.dtype != "f32le" {
        return Err(Error::parse(path, format!("unsupported dtype '{}'; expected f32le", m.dtype)));
    }
    if m.items.is_empty() {
        return Err(Error::parse(path, "manifest lists no items"));
    }
    if m.items.len() != m.count {
        return Err(Error::parse(path, format!("count is {} but {} items are listed", m.count, m.items.len())));
    }
    if m.dim == 0 {
        return Err(Error::parse(path, "dim must be positive"));
    }
    let mut rows_seen = vec![false; m.count];
    for item in &m.items {
        if item.row_index >= m.count || std::mem::replace(&mut rows_seen[item.row_index], true) {
            return Err(Error::parse(
                path,
                format!("item '{}' has row_index {} which is out of range or reused", item.label, item.row_index),
            ));
        }
    }
    let data_path = path.parent().unwrap_or(Path::new(".")).join(&m.data_file);
    let bytes = std::fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let row_bytes = m.dim * 4;
    if bytes.len() != m.count * row_bytes {
        // Rows have a fixed width, so the first row that cannot be complete is
        // the one a short (or long) row pushes out of alignment.
        let full_rows = bytes.len() / row_bytes;
        let offender =
            m.items.iter().find(|i| i.row_index == full_rows.min(m.count - 1)).expect("row indices cover 0..count");
        return Err(Error::parse(
            &data_path,
            format!(
                "row '{}' (row {}, byte offset {}) does not hold {} floats: file is {} bytes, expected {} for {}x{}",
                offender.label,
                offender.row_index,
                offender.row_index * row_bytes,
                m.dim,
                bytes.len(),
                m.count * row_bytes,
                m.count,
                m.dim
            ),
        ));
    }
    let digest = sha256_hex(&bytes);
    if !digest.eq_ignore_ascii_case(&m.checksum) {
        return Err(Error::parse(
            &data_path,
            format!("checksum mismatch: file is {digest}, manifest says {}", m.checksum),
        ));
    }
    let row = |r: usize| -> Vec<f32> {
        bytes[r * row_bytes..(r + 1) * row_bytes]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect()
    };
    let mut items: Vec<(usize, EmbeddingItem)> = m
        .items
        .into_iter()
        .map(|i| (i.row_index, EmbeddingItem { vector: row(i.row_index), label: i.label, category: i.category }))
        .collect();
    items.sort_by_key(|(r, _)| *r);
    if let Some((r, bad)) = items.iter().find(|(_, i)| i.vector.iter().any(|v| !v.is_finite())) {
        return Err(Error::parse(
            &data_path,
            format!("row '{}' (byte offset {}) holds non-finite values", bad.label, r * row_bytes),
        ));
    }
    EmbeddingSet::new(m.encoder_id, m.level, items.into_iter().map(|(_, i)| i).collect())
        .map_err(|e| Error::parse(path, e.to_string()))
}

/// Loads every set described by a manifest file (a single manifest object or
/// an array of them).
pub fn load_embeddings(manifest_path: &Path) -> Result<Vec<EmbeddingSet>> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    parse_manifests(manifest_path, &text)?.into_iter().map(|m| load_one(manifest_path, m)).collect()
}

/// Writes `set` as `<dir>/<stem>.json` plus `<dir>/<stem>.bin`, rows in item
/// order. Returns the manifest path.
pub fn write_embeddings(set: &EmbeddingSet, dir: &Path, stem: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bytes = set.to_bytes();
    let data_file = format!("{stem}.bin");
    let data_path = dir.join(&data_file);
    std::fs::write(&data_path, &bytes).map_err(|e| Error::io(&data_path, e))?;
    let manifest = EmbeddingManifest {
        encoder_id: set.encoder_id.clone(),
        level: set.level,
        dim: set.dim,
        count: set.items.len(),
        dtype: "f32le".into(),
        data_file,
        checksum: sha256_hex(&bytes),
        items: set
            .items
            .iter()
            .enumerate()
            .map(|(row_index, i)| ItemEntry { label: i.label.clone(), category: i.category, row_index })
            .collect(),
    };
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(label: &str, category: Category, vector: Vec<f32>) -> EmbeddingItem {
        EmbeddingItem { label: label.into(), category, vector }
    }

    fn small_set() -> EmbeddingSet {
        EmbeddingSet::new(
            "enc",
            Level::Token,
            vec![
                item("tungsten", Category::NamedIlluminant, vec![1.0, 0.5, -0.25]),
                item("2850K", Category::KelvinValue, vec![0.1, 0.2, 0.3]),
                item("warm", Category::GeneralLighting, vec![-1.5, 2.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let set = small_set();
        let m = write_embeddings(&set, dir.path(), "a").unwrap();
        let loaded = load_embeddings(&m).unwrap();
        assert_eq!(loaded, vec![set]);
        let m2 = write_embeddings(&loaded[0], dir.path(), "b").unwrap();
        assert_eq!(std::fs::read(dir.path().join("a.bin")).unwrap(), std::fs::read(dir.path().join("b.bin")).unwrap());
        let (ja, jb) = (std::fs::read_to_string(&m).unwrap(), std::fs::read_to_string(&m2).unwrap());
        assert_eq!(ja.replace("a.bin", "b.bin"), jb);
    }

    #[test]
    fn set_invariants() {
        assert!(EmbeddingSet::new("e", Level::Token, vec![]).is_err());
        let one = vec![item("a", Category::KelvinValue, vec![1.0])];
        assert!(EmbeddingSet::new("e", Level::Token, one).is_err());
        let dup = vec![item("a", Category::KelvinValue, vec![1.0]), item("a", Category::GenericNumeral, vec![2.0])];
        assert!(EmbeddingSet::new("e", Level::Token, dup).is_err());
        let ragged =
            vec![item("a", Category::KelvinValue, vec![1.0]), item("b", Category::GenericNumeral, vec![2.0, 1.0])];
        assert!(matches!(EmbeddingSet::new("e", Level::Token, ragged), Err(Error::Shape(_))));
        let nan =
            vec![item("a", Category::KelvinValue, vec![f32::NAN]), item("b", Category::GenericNumeral, vec![2.0])];
        assert!(EmbeddingSet::new("e", Level::Token, nan).is_err());
    }

    fn rewrite(path: &Path, f: impl Fn(&mut serde_json::Value)) {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        f(&mut v);
        std::fs::write(path, serde_json::to_string(&v).unwrap()).unwrap();
    }

    #[test]
    fn short_row_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_embeddings(&small_set(), dir.path(), "s").unwrap();
        let bin = dir.path().join("s.bin");
        let mut bytes = std::fs::read(&bin).unwrap();
        bytes.truncate(bytes.len() - 4);
        std::fs::write(&bin, bytes).unwrap();
        let err = load_embeddings(&m).unwrap_err().to_string();
        assert!(err.contains("'warm'") && err.contains("byte offset 24"), "{err}");
    }

    #[test]
    fn checksum_and_category_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_embeddings(&small_set(), dir.path(), "c").unwrap();
        rewrite(&m, |v| v["checksum"] = "00".repeat(32).into());
        assert!(load_embeddings(&m).unwrap_err().to_string().contains("checksum"));

        let m = write_embeddings(&small_set(), dir.path(), "d").unwrap();
        rewrite(&m, |v| v["items"][1]["category"] = "colour_word".into());
        assert!(load_embeddings(&m).unwrap_err().to_string().contains("colour_word"));

        let m = write_embeddings(&small_set(), dir.path(), "e").unwrap();
        rewrite(&m, |v| {
            v["items"] = serde_json::json!([]);
            v["count"] = 0.into();
        });
        assert!(load_embeddings(&m).is_err());
    }

    #[test]
    fn manifests_may_be_grouped_in_an_array() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_embeddings(&small_set(), dir.path(), "x").unwrap();
        let one: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
        let both = dir.path().join("both.json");
        std::fs::write(&both, serde_json::to_string(&vec![one.clone(), one]).unwrap()).unwrap();
        assert_eq!(load_embeddings(&both).unwrap().len(), 2);
    }
}
