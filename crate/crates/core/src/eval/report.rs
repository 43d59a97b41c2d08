//! Batch evaluation of a manifest into a metrics report.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ssim::{ssim, SsimMode};
use super::wb::{estimate_illuminant, white_balance, Aggregation, WbMethod, RATIO_EPSILON};
use crate::color::{angular_error, lab_mse, IlluminantRgb, PresetId};
use crate::error::{Error, Result};
use crate::parallel::with_threads;
use crate::plot::{bar_chart, Bar};
use crate::relight::{read_linear_image, read_mask, ForegroundMask, LinearImage};

/// One image to evaluate.
///
/// Parsed leniently from a manifest line: augmentation records supply
/// `variant_image_path`, other generators may use `image_path`. `mask_path`
/// and `source_image_path` are optional; without a mask the whole frame counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    #[serde(default)]
    pub image_id: Option<String>,
    #[serde(alias = "variant_image_path")]
    pub image_path: String,
    pub preset_id: PresetId,
    #[serde(default)]
    pub mask_path: Option<String>,
    #[serde(default)]
    pub source_image_path: Option<String>,
}

impl EvalEntry {
    pub fn id(&self) -> &str {
        self.image_id.as_deref().unwrap_or(&self.image_path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub method: WbMethod,
    pub aggregation: Aggregation,
    pub ssim_mode: SsimMode,
    /// Restrict SSIM to foreground windows (the default) or use the full frame.
    pub ssim_masked: bool,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            method: WbMethod::GrayWorld,
            aggregation: Aggregation::Median,
            ssim_mode: SsimMode::Luminance,
            ssim_masked: true,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub image_id: String,
    pub preset_id: PresetId,
    pub estimated_illuminant: IlluminantRgb,
    pub angular_error_deg: f64,
    pub lab_mse: f64,
    /// SSIM between the evaluated image and its white-balanced version.
    pub ssim: f64,
    /// Fraction of pixels with at least one saturated channel.
    pub clipped_ratio: f64,
    /// SSIM between the untouched source and the white-balanced image, when
    /// the entry names a source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssim_to_source: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFailure {
    /// 1-based manifest line.
    pub line: usize,
    pub image_id: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub angular_error_deg: f64,
    pub lab_mse: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: MetricValues,
    /// Population standard deviation.
    pub std: MetricValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetSummary {
    pub preset_id: PresetId,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub per_preset: Vec<PresetSummary>,
    pub overall: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub manifest: String,
    pub ratio_epsilon: f64,
    pub options: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub provenance: Provenance,
    pub records: Vec<MetricsRecord>,
    pub failures: Vec<RecordFailure>,
    pub excluded_count: usize,
    pub aggregates: Option<Aggregates>,
}

/// Mean and population std of `values`, summed in sorted order so the result
/// does not depend on record order.
fn stats(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / n).sqrt())
}

fn summarize(records: &[&MetricsRecord]) -> Summary {
    let pick = |f: fn(&MetricsRecord) -> f64| {
        let mut v: Vec<f64> = records.iter().map(|r| f(r)).collect();
        stats(&mut v)
    };
    let ae = pick(|r| r.angular_error_deg);
    let lab = pick(|r| r.lab_mse);
    let ss = pick(|r| r.ssim);
    Summary {
        count: records.len(),
        mean: MetricValues { angular_error_deg: ae.0, lab_mse: lab.0, ssim: ss.0 },
        std: MetricValues { angular_error_deg: ae.1, lab_mse: lab.1, ssim: ss.1 },
    }
}

impl Aggregates {
    /// Recomputes aggregates from records; `None` when there are none.
    pub fn from_records(records: &[MetricsRecord]) -> Option<Self> {
        if records.is_empty() {
            return None;
        }
        let mut by_preset: BTreeMap<PresetId, Vec<&MetricsRecord>> = BTreeMap::new();
        for r in records {
            by_preset.entry(r.preset_id).or_default().push(r);
        }
        let per_preset =
            by_preset.into_iter().map(|(preset_id, rs)| PresetSummary { preset_id, summary: summarize(&rs) }).collect();
        let all: Vec<&MetricsRecord> = records.iter().collect();
        Some(Self { per_preset, overall: summarize(&all) })
    }
}

fn saturated_ratio(img: &LinearImage) -> f64 {
    let n = img.pixels().filter(|p| p.iter().any(|v| *v >= 1.0)).count();
    n as f64 / img.pixel_count() as f64
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    base.join(rel)
}

/// Evaluates one entry; paths resolve against `base`.
pub fn evaluate_entry(base: &Path, entry: &EvalEntry, options: &EvalOptions) -> Result<MetricsRecord> {
    let image_path = resolve(base, &entry.image_path);
    let img = read_linear_image(&image_path)?;
    let mask = match &entry.mask_path {
        Some(p) => read_mask(&resolve(base, p))?.mask,
        None => ForegroundMask::full(img.width(), img.height())?,
    };
    let method = match &options.method {
        WbMethod::External(dir) => {
            let name = image_path
                .file_name()
                .ok_or_else(|| Error::Invalid(format!("{} has no file name", image_path.display())))?;
            WbMethod::External(dir.join(name))
        }
        m => m.clone(),
    };
    let (balanced, _) = white_balance(&img, &method)?;
    let estimated = estimate_illuminant(&img, &balanced, &mask, options.aggregation)?;
    let truth = entry.preset_id.gains();
    let ssim_mask = options.ssim_masked.then_some(&mask);
    let ssim_to_source = match &entry.source_image_path {
        Some(p) => {
            let source = read_linear_image(&resolve(base, p))?;
            Some(ssim(&source, &balanced, ssim_mask, options.ssim_mode)?)
        }
        None => None,
    };
    Ok(MetricsRecord {
        image_id: entry.id().to_string(),
        preset_id: entry.preset_id,
        estimated_illuminant: estimated,
        angular_error_deg: angular_error(estimated.gains(), truth.gains())?,
        lab_mse: lab_mse(estimated.gains(), truth.gains()),
        ssim: ssim(&img, &balanced, ssim_mask, options.ssim_mode)?,
        clipped_ratio: saturated_ratio(&img),
        ssim_to_source,
    })
}

/// Parses a manifest into entries, keeping unparseable lines as failures.
pub fn read_eval_manifest(path: &Path) -> Result<Vec<(usize, std::result::Result<EvalEntry, String>)>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((n + 1, serde_json::from_str::<EvalEntry>(&line).map_err(|e| e.to_string())));
    }
    Ok(out)
}

/// Evaluates every manifest entry. Per-entry failures are listed in the report
/// and left out of the aggregates; only an unreadable manifest is an error.
pub fn evaluate_manifest(manifest: &Path, options: &EvalOptions) -> Result<MetricsReport> {
    let entries = read_eval_manifest(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let results: Vec<(usize, Option<String>, Result<MetricsRecord>)> = with_threads(options.threads, || {
        entries
            .par_iter()
            .map(|(line, entry)| match entry {
                Ok(e) => (*line, Some(e.id().to_string()), evaluate_entry(&base, e, options)),
                Err(msg) => (*line, None, Err(Error::parse(manifest, format!("line {line}: {msg}")))),
            })
            .collect()
    })?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (line, image_id, result) in results {
        match result {
            Ok(r) => records.push(r),
            Err(e) => failures.push(RecordFailure { line, image_id, error: e.to_string() }),
        }
    }
    Ok(MetricsReport {
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            manifest: manifest.display().to_string(),
            ratio_epsilon: RATIO_EPSILON,
            options: options.clone(),
        },
        aggregates: Aggregates::from_records(&records),
        excluded_count: failures.len(),
        records,
        failures,
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Per-preset bar charts (mean ± std) of the three metrics, as SVG files.
    pub fn write_plots(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let Some(agg) = &self.aggregates else {
            return Ok(Vec::new());
        };
        let metrics: [(&str, &str, fn(&MetricValues) -> f64); 3] = [
            ("angular_error_deg", "Angular error (deg)", |m| m.angular_error_deg),
            ("lab_mse", "CIELAB MSE", |m| m.lab_mse),
            ("ssim", "SSIM", |m| m.ssim),
        ];
        let mut written = Vec::new();
        for (file, title, get) in metrics {
            let bars: Vec<Bar> = agg
                .per_preset
                .iter()
                .map(|p| Bar { label: p.preset_id.as_str(), value: get(&p.summary.mean), spread: get(&p.summary.std) })
                .collect();
            let path = dir.join(format!("{file}.svg"));
            bar_chart(&path, title, &bars)?;
            written.push(path);
        }
        Ok(written)
    }
}
