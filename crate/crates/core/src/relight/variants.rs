//! Fine-tuning set construction: one relit variant per preset, a shared edge
//! map and mask, a rendered prompt per variant, and a JSON Lines manifest.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canny::{canny_edges, CannyParams};
use super::flat_light::apply_flat_light;
use super::png::{read_linear_image, read_mask, write_edge_png, write_mask_png, write_srgb_png, BitDepth};
use super::raster::{ForegroundMask, LinearImage};
use crate::color::PresetId;
use crate::error::{Error, Result};
use crate::parallel::with_threads;

pub const DEFAULT_MANIFEST_NAME: &str = "manifest.jsonl";
const PRESET_PLACEHOLDER: &str = "{preset}";

/// Training prompt: `a photo of <concept> <class> in <illuminant token> illuminant`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub concept_token: String,
    pub class_noun: String,
    /// Illuminant token with one `{preset}` placeholder, e.g. `[{preset}*]`.
    pub illuminant_token_pattern: String,
}

impl PromptTemplate {
    pub fn new(concept_token: impl Into<String>, class_noun: impl Into<String>) -> Self {
        Self {
            concept_token: concept_token.into(),
            class_noun: class_noun.into(),
            illuminant_token_pattern: format!("[{PRESET_PLACEHOLDER}*]"),
        }
    }

    pub fn illuminant_token(&self, preset: PresetId) -> String {
        self.illuminant_token_pattern.replace(PRESET_PLACEHOLDER, preset.as_str())
    }

    pub fn render(&self, preset: PresetId) -> Result<String> {
        if self.illuminant_token_pattern.matches(PRESET_PLACEHOLDER).count() != 1 {
            return Err(Error::Domain(format!(
                "illuminant token pattern '{}' must contain exactly one {PRESET_PLACEHOLDER}",
                self.illuminant_token_pattern
            )));
        }
        if self.concept_token.trim().is_empty() || self.class_noun.trim().is_empty() {
            return Err(Error::Domain("concept token and class noun must be non-empty".into()));
        }
        let illuminant = self.illuminant_token(preset);
        let prompt = format!("a photo of {} {} in {} illuminant", self.concept_token, self.class_noun, illuminant);
        for token in [&self.concept_token, &illuminant] {
            let n = prompt.matches(token.as_str()).count();
            if n != 1 {
                return Err(Error::Domain(format!("token '{token}' appears {n} times in rendered prompt '{prompt}'")));
            }
        }
        Ok(prompt)
    }
}

/// One manifest line. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub source_image_path: String,
    pub preset_id: PresetId,
    pub variant_image_path: String,
    pub mask_path: String,
    pub edge_map_path: String,
    pub prompt_text: String,
    pub illuminant_gains: [f64; 3],
    pub clipped_pixel_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AugmentationManifest {
    pub records: Vec<AugmentationRecord>,
}

impl AugmentationManifest {
    /// Checks that no (source, preset) pair repeats.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for r in &self.records {
            if !seen.insert((r.source_image_path.as_str(), r.preset_id)) {
                return Err(Error::Invalid(format!(
                    "duplicate record for source '{}' and preset {}",
                    r.source_image_path, r.preset_id
                )));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))?;
            records.push(rec);
        }
        let manifest = Self { records };
        manifest.validate().map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(manifest)
    }

    /// Resolves a manifest-relative path.
    pub fn resolve(manifest_path: &Path, relative: &str) -> PathBuf {
        manifest_path.parent().unwrap_or(Path::new(".")).join(relative)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentOptions {
    pub presets: Vec<PresetId>,
    pub canny: CannyParams,
    pub bit_depth: BitDepth,
    pub manifest_name: String,
    pub threads: Option<usize>,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        Self {
            presets: PresetId::CANONICAL.to_vec(),
            canny: CannyParams::default(),
            bit_depth: BitDepth::Eight,
            manifest_name: DEFAULT_MANIFEST_NAME.into(),
            threads: None,
        }
    }
}

/// In-memory inputs for [`generate_variants`].
#[derive(Debug, Clone)]
pub struct VariantSource<'a> {
    /// Where the source image lives; recorded in the manifest and used for file names.
    pub path: &'a Path,
    pub image: &'a LinearImage,
    pub mask: &'a ForegroundMask,
    pub template: &'a PromptTemplate,
}

fn relative_to(path: &Path, base: &Path) -> Result<String> {
    let abs = |p: &Path| std::path::absolute(p).map_err(|e| Error::io(p, e));
    let (path, base) = (abs(path)?, abs(base)?);
    let rel = pathdiff::diff_paths(&path, &base).unwrap_or(path);
    Ok(rel.to_string_lossy().replace('\\', "/"))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into())
}

/// Writes the relit variants, mask, edge map and manifest into `out_dir`.
pub fn generate_variants(
    source: &VariantSource<'_>,
    out_dir: &Path,
    options: &AugmentOptions,
) -> Result<AugmentationManifest> {
    let VariantSource { path, image, mask, template } = *source;
    if !image.same_size(mask) {
        return Err(Error::Shape(format!(
            "mask is {}x{} but image is {}x{}",
            mask.width(),
            mask.height(),
            image.width(),
            image.height()
        )));
    }
    if options.presets.is_empty() {
        return Err(Error::Domain("no presets requested".into()));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = options.presets.iter().find(|p| !seen.insert(**p)) {
        return Err(Error::Domain(format!("preset {dup} requested twice")));
    }
    // Render every prompt before touching the filesystem.
    let prompts: Vec<String> = options.presets.iter().map(|p| template.render(*p)).collect::<Result<_>>()?;

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stem = file_stem(path);
    let mask_name = format!("{stem}_mask.png");
    let edge_name = format!("{stem}_edges.png");

    write_mask_png(&out_dir.join(&mask_name), mask)?;
    let edges = canny_edges(image, &options.canny)?;
    write_edge_png(&out_dir.join(&edge_name), &edges)?;

    let source_rel = relative_to(path, out_dir)?;
    let jobs: Vec<(PresetId, String)> = options.presets.iter().copied().zip(prompts).collect();
    let records = with_threads(options.threads, || {
        jobs.into_par_iter()
            .map(|(preset, prompt_text)| {
                let gains = preset.gains();
                let relit = apply_flat_light(image, &gains);
                let variant_name = format!("{stem}_{preset}.png");
                let clipped = write_srgb_png(&out_dir.join(&variant_name), &relit.image, options.bit_depth)?;
                Ok(AugmentationRecord {
                    source_image_path: source_rel.clone(),
                    preset_id: preset,
                    variant_image_path: variant_name,
                    mask_path: mask_name.clone(),
                    edge_map_path: edge_name.clone(),
                    prompt_text,
                    illuminant_gains: gains.gains(),
                    clipped_pixel_count: clipped,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let manifest_path = out_dir.join(&options.manifest_name);
    for r in &records {
        for rel in [&r.variant_image_path, &r.mask_path, &r.edge_map_path] {
            let p = out_dir.join(rel);
            if !p.is_file() {
                return Err(Error::Invalid(format!("{} was not written", p.display())));
            }
        }
    }
    let manifest = AugmentationManifest { records };
    manifest.write(&manifest_path)?;
    Ok(manifest)
}

/// File-level entry point: reads the image and mask PNGs, preserves a soft
/// mask next to its binarized version, then calls [`generate_variants`].
pub fn augment_from_files(
    image_path: &Path,
    mask_path: &Path,
    template: &PromptTemplate,
    out_dir: &Path,
    options: &AugmentOptions,
) -> Result<AugmentationManifest> {
    let image = read_linear_image(image_path)?;
    let ingest = read_mask(mask_path)?;
    let source = VariantSource { path: image_path, image: &image, mask: &ingest.mask, template };
    let manifest = generate_variants(&source, out_dir, options)?;
    if ingest.was_soft {
        let keep = out_dir.join(format!("{}_mask_soft.png", file_stem(image_path)));
        fs::copy(mask_path, &keep).map_err(|e| Error::io(&keep, e))?;
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_follows_the_training_pattern() {
        let t = PromptTemplate::new("[v]", "dog");
        assert_eq!(t.render(PresetId::C1).unwrap(), "a photo of [v] dog in [c1*] illuminant");
        assert_eq!(t.render(PresetId::C7).unwrap(), "a photo of [v] dog in [c7*] illuminant");
    }

    #[test]
    fn prompt_rejects_ambiguous_tokens() {
        // The concept token also occurs inside the class noun.
        let t = PromptTemplate::new("do", "dog");
        assert!(t.render(PresetId::C1).is_err());
        let mut t = PromptTemplate::new("[v]", "dog");
        t.illuminant_token_pattern = "[c*]".into();
        assert!(t.render(PresetId::C1).is_err());
        assert!(PromptTemplate::new("", "dog").render(PresetId::C1).is_err());
    }

    #[test]
    fn manifest_rejects_duplicate_pairs() {
        let rec = AugmentationRecord {
            source_image_path: "a.png".into(),
            preset_id: PresetId::C1,
            variant_image_path: "a_c1.png".into(),
            mask_path: "m.png".into(),
            edge_map_path: "e.png".into(),
            prompt_text: "p".into(),
            illuminant_gains: [1.0; 3],
            clipped_pixel_count: 0,
        };
        let m = AugmentationManifest { records: vec![rec.clone(), rec] };
        assert!(m.validate().is_err());
    }

    #[test]
    fn mismatched_mask_is_rejected_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let img = LinearImage::filled(32, 32, [0.2; 3]).unwrap();
        let mask = ForegroundMask::full(16, 32).unwrap();
        let t = PromptTemplate::new("[v]", "dog");
        let src = VariantSource { path: Path::new("x.png"), image: &img, mask: &mask, template: &t };
        let out = dir.path().join("out");
        assert!(matches!(generate_variants(&src, &out, &AugmentOptions::default()), Err(Error::Shape(_))));
        assert!(!out.exists());
    }
}
