//! One adapter per subcommand: merge flags over the config, call the library,
//! describe the result.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, ValueEnum};
use lumikit_core::color::{chromaticity_to_illuminant_rgb, kelvin_to_chromaticity, ColorTemperature, PresetId};
use lumikit_core::eval::{
    analyze_study, evaluate_manifest, Aggregation, EvalOptions, PreferenceMatrix, SsimMode, WbMethod,
};
use lumikit_core::loss::{
    gradient_check, lambda_sweep, mrl, mrl_gradient, random_case, read_mask_tensor, read_tensor_file, residual_map,
    write_tensor_file, MrlParams, RegionFixture, ABLATION_LAMBDAS,
};
use lumikit_core::probe::{load_embeddings, run_probe_suite, ClusterConfig, Metric, ProbeOptions};
use lumikit_core::relight::{
    augment_from_files, canny_edges, read_linear_image, write_edge_png, AugmentOptions, BitDepth, CannyParams,
    PromptTemplate, ThresholdMode, DEFAULT_MANIFEST_NAME,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ToolConfig;
use crate::{CliError, Outcome};

pub struct Context<'a> {
    pub config: &'a ToolConfig,
    pub threads: Option<usize>,
}

impl Context<'_> {
    /// `explicit`, or `name` inside the configured output directory.
    fn out_path(&self, explicit: Option<PathBuf>, name: &str) -> PathBuf {
        explicit.unwrap_or_else(|| self.config.output_dir.join(name))
    }

    fn plot_dir(&self, explicit: Option<PathBuf>) -> Option<PathBuf> {
        explicit.or_else(|| self.config.plots.then(|| self.config.plot_dir()))
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir)
            .map_err(|source| lumikit_core::Error::Io { path: dir.to_path_buf(), source }.into()),
        _ => Ok(()),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

// ---- planck ----

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["kelvin", "preset"])))]
pub struct PlanckArgs {
    /// Blackbody temperature in kelvin.
    #[arg(long)]
    kelvin: Option<f64>,
    /// Preset id, c1 to c7 (c0 is the identity illuminant).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Serialize)]
struct PlanckResult {
    preset_id: Option<PresetId>,
    name: Option<&'static str>,
    kelvin: Option<f64>,
    chromaticity: Option<[f64; 2]>,
    gains: [f64; 3],
}

pub fn planck(_ctx: &Context<'_>, args: PlanckArgs) -> Result<Outcome, CliError> {
    let (preset_id, name, kelvin) = match (&args.preset, args.kelvin) {
        (Some(p), _) => {
            let id: PresetId = p.parse()?;
            let preset = id.preset();
            (Some(id), preset.and_then(|p| p.name), preset.map(|p| p.temperature.kelvin()))
        }
        (None, Some(k)) => (None, None, Some(k)),
        (None, None) => unreachable!("clap requires one of --kelvin/--preset"),
    };
    let (chromaticity, gains) = match kelvin {
        Some(k) => {
            let c = kelvin_to_chromaticity(ColorTemperature::new(k)?);
            (Some([c.x(), c.y()]), chromaticity_to_illuminant_rgb(c)?.gains())
        }
        None => (None, PresetId::C0.gains().gains()),
    };
    let result = PlanckResult { preset_id, name, kelvin, chromaticity, gains };
    let mut text = String::new();
    if let Some(id) = preset_id {
        let _ = writeln!(text, "preset       {id}{}", name.map(|n| format!(" ({n})")).unwrap_or_default());
    }
    if let Some(k) = kelvin {
        let _ = writeln!(text, "kelvin       {k}");
    }
    if let Some([x, y]) = chromaticity {
        let _ = writeln!(text, "chromaticity x={x:.5} y={y:.5}");
    }
    let _ = writeln!(text, "gains        r={:.6} g={:.6} b={:.6}", gains[0], gains[1], gains[2]);
    Ok(Outcome::new("planck", &result, text))
}

// ---- shared canny flags ----

#[derive(Debug, Args)]
pub struct CannyArgs {
    /// Low hysteresis threshold (fraction of the peak gradient unless --canny-absolute).
    #[arg(long)]
    canny_low: Option<f64>,
    #[arg(long)]
    canny_high: Option<f64>,
    /// Gaussian blur sigma in pixels.
    #[arg(long)]
    canny_sigma: Option<f64>,
    /// Treat the thresholds as raw gradient magnitudes.
    #[arg(long)]
    canny_absolute: bool,
}

impl CannyArgs {
    fn params(&self, config: &ToolConfig) -> Result<CannyParams, CliError> {
        let base = config.canny();
        let p = CannyParams {
            low: self.canny_low.unwrap_or(base.low),
            high: self.canny_high.unwrap_or(base.high),
            sigma: self.canny_sigma.unwrap_or(base.sigma),
            mode: if self.canny_absolute { ThresholdMode::Absolute } else { base.mode },
        };
        p.validate()?;
        Ok(p)
    }
}

// ---- augment ----

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    image: PathBuf,
    /// Foreground mask PNG; soft masks are binarized at 0.5 and kept alongside.
    #[arg(long)]
    mask: PathBuf,
    /// Concept token, e.g. "[v]".
    #[arg(long)]
    concept: String,
    /// Class noun, e.g. "dog".
    #[arg(long = "class")]
    class_noun: String,
    /// Output directory (default: the configured output directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated preset ids, e.g. c1,c3,c5,c7.
    #[arg(long)]
    presets: Option<String>,
    /// Bits per channel of the variant PNGs: 8 or 16.
    #[arg(long, default_value_t = 8)]
    bit_depth: u32,
    #[arg(long, default_value = DEFAULT_MANIFEST_NAME)]
    manifest_name: String,
    #[command(flatten)]
    canny: CannyArgs,
}

#[derive(Serialize)]
struct AugmentResult {
    manifest: String,
    records: Vec<lumikit_core::relight::AugmentationRecord>,
}

pub fn augment(ctx: &Context<'_>, args: AugmentArgs) -> Result<Outcome, CliError> {
    let presets = match &args.presets {
        Some(list) => PresetId::parse_list(list)?,
        None => ctx.config.presets.clone(),
    };
    let options = AugmentOptions {
        presets,
        canny: args.canny.params(ctx.config)?,
        bit_depth: BitDepth::from_bits(args.bit_depth)?,
        manifest_name: args.manifest_name.clone(),
        threads: ctx.threads,
    };
    let out = args.out.unwrap_or_else(|| ctx.config.output_dir.clone());
    let template = PromptTemplate::new(args.concept, args.class_noun);
    let manifest = augment_from_files(&args.image, &args.mask, &template, &out, &options)?;
    let manifest_path = out.join(&options.manifest_name);
    let mut text = format!("wrote {} variants to {}\n", manifest.records.len(), display(&out));
    for r in &manifest.records {
        let _ = writeln!(text, "  {}  {}  clipped={}", r.preset_id, r.variant_image_path, r.clipped_pixel_count);
    }
    let _ = writeln!(text, "manifest {}", display(&manifest_path));
    let result = AugmentResult { manifest: display(&manifest_path), records: manifest.records };
    Ok(Outcome::new("augment", &result, text))
}

// ---- edges ----

#[derive(Debug, Args)]
pub struct EdgesArgs {
    #[arg(long)]
    image: PathBuf,
    /// Output PNG (0 / 255).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    canny: CannyArgs,
}

#[derive(Serialize)]
struct EdgesResult {
    edge_map: String,
    width: usize,
    height: usize,
    edge_pixels: usize,
    edge_fraction: f64,
    params: CannyParams,
}

pub fn edges(ctx: &Context<'_>, args: EdgesArgs) -> Result<Outcome, CliError> {
    let params = args.canny.params(ctx.config)?;
    let img = read_linear_image(&args.image)?;
    let map = canny_edges(&img, &params)?;
    ensure_parent(&args.out)?;
    write_edge_png(&args.out, &map)?;
    let result = EdgesResult {
        edge_map: display(&args.out),
        width: map.width(),
        height: map.height(),
        edge_pixels: map.count(),
        edge_fraction: map.count() as f64 / (map.width() * map.height()) as f64,
        params,
    };
    let text = format!(
        "{} edge pixels ({:.2}%) in {}x{}, written to {}\n",
        result.edge_pixels,
        100.0 * result.edge_fraction,
        result.width,
        result.height,
        result.edge_map
    );
    Ok(Outcome::new("edges", &result, text))
}

// ---- loss-check ----

#[derive(Debug, Args)]
pub struct LossCheckArgs {
    /// Random 8x8x4 cases in the gradient check.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Seed for the random cases (default: the configured seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Largest relative error accepted.
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    /// Foreground weight for a single evaluation on tensor files (default: the configured lambda).
    #[arg(long, requires = "pred")]
    lambda: Option<f64>,
    /// Prediction tensor file (JSON header line, then f32 little-endian values).
    #[arg(long, requires_all = ["target", "mask"])]
    pred: Option<PathBuf>,
    #[arg(long, requires = "pred")]
    target: Option<PathBuf>,
    /// Soft mask tensor file with one channel.
    #[arg(long, requires = "pred")]
    mask: Option<PathBuf>,
    /// Also write the gradient with respect to the prediction.
    #[arg(long, requires = "pred")]
    grad_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SweepCheck {
    fixture: RegionFixture,
    rows: Vec<lumikit_core::loss::SweepRow>,
    /// Largest gap between a sweep row and the loss computed on the full tensors.
    max_direct_gap: f64,
    /// Largest departure from the straight line through λ = 0 and λ = 1.
    max_affine_gap: f64,
    passed: bool,
}

#[derive(Serialize)]
struct LossSuiteResult {
    seed: u64,
    gradient: lumikit_core::loss::GradientCheck,
    sweep: SweepCheck,
}

#[derive(Serialize)]
struct LossEvalResult {
    lambda: f64,
    shape: [usize; 3],
    loss: f64,
    foreground_loss: f64,
    background_loss: f64,
    gradient: Option<String>,
}

const SWEEP_TOLERANCE: f64 = 1e-10;

fn sweep_check(seed: u64, lambda: f64) -> Result<SweepCheck, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pred, target, mask, _) = random_case(&mut rng, 8, 8, 4);
    let residual = residual_map(&pred, &target)?;
    let fixture = RegionFixture::from_maps(&residual, &mask)?;
    let mut lambdas = ABLATION_LAMBDAS.to_vec();
    if !lambdas.contains(&lambda) {
        lambdas.push(lambda);
    }
    let rows = lambda_sweep(&fixture, &lambdas)?;
    let (l0, l1) = (fixture.loss(0.0), fixture.loss(1.0));
    let mut max_direct_gap: f64 = 0.0;
    let mut max_affine_gap: f64 = 0.0;
    for r in &rows {
        let direct = mrl(&residual, &mask, &MrlParams::new(r.lambda)?)?;
        max_direct_gap = max_direct_gap.max((direct - r.loss).abs());
        max_affine_gap = max_affine_gap.max((l0 + r.lambda * (l1 - l0) - r.loss).abs());
    }
    let passed = max_direct_gap < SWEEP_TOLERANCE && max_affine_gap < SWEEP_TOLERANCE;
    Ok(SweepCheck { fixture, rows, max_direct_gap, max_affine_gap, passed })
}

pub fn loss_check(ctx: &Context<'_>, args: LossCheckArgs) -> Result<Outcome, CliError> {
    let lambda = args.lambda.unwrap_or(ctx.config.lambda);
    let params = MrlParams::new(lambda)?;
    if let Some(pred_path) = &args.pred {
        let (target_path, mask_path) = (args.target.as_ref().expect("clap"), args.mask.as_ref().expect("clap"));
        let pred = read_tensor_file(pred_path)?;
        let target = read_tensor_file(target_path)?;
        let mask = read_mask_tensor(mask_path)?;
        let residual = residual_map(&pred, &target)?;
        let loss = mrl(&residual, &mask, &params)?;
        let fixture = RegionFixture::from_maps(&residual, &mask)?;
        let gradient = match &args.grad_out {
            Some(p) => {
                ensure_parent(p)?;
                write_tensor_file(p, &mrl_gradient(&pred, &target, &mask, &params)?)?;
                Some(display(p))
            }
            None => None,
        };
        let (h, w, c) = pred.shape();
        let result = LossEvalResult {
            lambda,
            shape: [h, w, c],
            loss,
            foreground_loss: fixture.foreground_loss(),
            background_loss: fixture.background_loss(),
            gradient,
        };
        let text = format!(
            "loss {loss:.10} at lambda {lambda} ({h}x{w}x{c}; foreground term {:.10}, background term {:.10})\n",
            result.foreground_loss, result.background_loss
        );
        return Ok(Outcome::new("loss-check", &result, text));
    }

    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let seed = args.seed.unwrap_or(ctx.config.seed);
    let gradient = gradient_check(args.trials, seed, args.step, args.tolerance)?;
    let sweep = sweep_check(seed, lambda)?;
    let mut text = format!(
        "gradient check: {} trials, {} elements, max relative error {:.3e} (tolerance {:.0e}) {}\n",
        gradient.trials,
        gradient.elements_checked,
        gradient.max_relative_error,
        gradient.tolerance,
        if gradient.passed { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(
        text,
        "lambda sweep (foreground {:.4}, background {:.4}):",
        sweep.fixture.foreground_loss(),
        sweep.fixture.background_loss()
    );
    for r in &sweep.rows {
        let _ = writeln!(text, "  lambda {:.2}  loss {:.10}", r.lambda, r.loss);
    }
    let _ = writeln!(
        text,
        "sweep vs direct {:.1e}, affine gap {:.1e} {}",
        sweep.max_direct_gap,
        sweep.max_affine_gap,
        if sweep.passed { "PASS" } else { "FAIL" }
    );
    let failure = match (gradient.passed, sweep.passed) {
        (true, true) => None,
        (false, _) => Some(format!("gradient check failed: max relative error {:.3e}", gradient.max_relative_error)),
        (true, false) => Some("lambda sweep is not affine in lambda".to_string()),
    };
    let mut outcome = Outcome::new("loss-check", &LossSuiteResult { seed, gradient, sweep }, text);
    outcome.failure = failure;
    Ok(outcome)
}

// ---- evaluate ----

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregationArg {
    Median,
    Mean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SsimModeArg {
    Luminance,
    PerChannel,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSON Lines manifest; `lumikit augment` output works as is.
    #[arg(long)]
    manifest: PathBuf,
    /// gray_world, sog:<p>, white_patch or external:<dir> (default: the configured method).
    #[arg(long)]
    wb: Option<String>,
    /// How per-pixel ratios become one illuminant estimate.
    #[arg(long, value_enum, default_value = "median")]
    aggregation: AggregationArg,
    #[arg(long, value_enum, default_value = "luminance")]
    ssim_mode: SsimModeArg,
    /// Average SSIM over the whole frame instead of foreground windows.
    #[arg(long)]
    full_frame_ssim: bool,
    /// Report path (default: metrics.json in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-preset SVG bar charts.
    #[arg(long)]
    plots: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvaluateResult {
    report: String,
    records: usize,
    failures: usize,
    aggregates: Option<lumikit_core::eval::Aggregates>,
    plots: Vec<String>,
}

pub fn evaluate(ctx: &Context<'_>, args: EvaluateArgs) -> Result<Outcome, CliError> {
    let method: WbMethod = match &args.wb {
        Some(s) => s.parse()?,
        None => ctx.config.wb_method.clone(),
    };
    let options = EvalOptions {
        method,
        aggregation: match args.aggregation {
            AggregationArg::Median => Aggregation::Median,
            AggregationArg::Mean => Aggregation::Mean,
        },
        ssim_mode: match args.ssim_mode {
            SsimModeArg::Luminance => SsimMode::Luminance,
            SsimModeArg::PerChannel => SsimMode::PerChannel,
        },
        ssim_masked: !args.full_frame_ssim,
        threads: ctx.threads,
    };
    let report = evaluate_manifest(&args.manifest, &options)?;
    let out = ctx.out_path(args.out, "metrics.json");
    ensure_parent(&out)?;
    report.write(&out)?;
    let plots = match ctx.plot_dir(args.plots) {
        Some(dir) => report.write_plots(&dir)?.iter().map(|p| display(p)).collect(),
        None => Vec::new(),
    };
    let mut text = format!(
        "{} records evaluated, {} excluded; report {}\n",
        report.records.len(),
        report.excluded_count,
        display(&out)
    );
    if let Some(agg) = &report.aggregates {
        let _ = writeln!(text, "preset  n    angular_deg     lab_mse         ssim");
        let rows = agg.per_preset.iter().map(|p| (p.preset_id.to_string(), &p.summary));
        for (label, s) in rows.chain(std::iter::once(("all".to_string(), &agg.overall))) {
            let _ = writeln!(
                text,
                "{label:<6}  {:<3}  {:>6.3} ± {:<5.3}  {:>6.3} ± {:<5.3}  {:.4} ± {:.4}",
                s.count,
                s.mean.angular_error_deg,
                s.std.angular_error_deg,
                s.mean.lab_mse,
                s.std.lab_mse,
                s.mean.ssim,
                s.std.ssim
            );
        }
    }
    for f in &report.failures {
        let _ = writeln!(text, "excluded line {}: {}", f.line, f.error);
    }
    let result = EvaluateResult {
        report: display(&out),
        records: report.records.len(),
        failures: report.excluded_count,
        aggregates: report.aggregates,
        plots,
    };
    Ok(Outcome::new("evaluate", &result, text))
}

// ---- study ----

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// CSV with header winner,loser,count.
    #[arg(long)]
    prefs: PathBuf,
    /// Report path (default: scales.json in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bootstrap seed (default: the configured seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap resamples; 0 skips the intervals.
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// SVG bar chart of the scales.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Serialize)]
struct StudyResult {
    report: String,
    plot: Option<String>,
    study: lumikit_core::eval::StudyReport,
}

pub fn study(ctx: &Context<'_>, args: StudyArgs) -> Result<Outcome, CliError> {
    let prefs = PreferenceMatrix::from_csv(&args.prefs)?;
    let seed = args.seed.unwrap_or(ctx.config.seed);
    let report = analyze_study(&prefs, args.resamples, seed, args.confidence)?;
    let out = ctx.out_path(args.out, "scales.json");
    ensure_parent(&out)?;
    report.write(&out)?;
    let plot = args.plot.or_else(|| ctx.plot_dir(None).map(|d| d.join("study_scales.svg")));
    if let Some(p) = &plot {
        ensure_parent(p)?;
        report.write_plot(p)?;
    }
    let mut text = format!(
        "{} methods, {} trials per pair; report {}\n",
        report.methods.len(),
        report.trials_per_pair,
        display(&out)
    );
    for m in &report.methods {
        let ci = m.bootstrap_interval.map(|[lo, hi]| format!("  [{lo:.3}, {hi:.3}]")).unwrap_or_default();
        let _ = writeln!(text, "  {:<16} {:.4}{ci}", m.method, m.scale);
    }
    let result = StudyResult { report: display(&out), plot: plot.as_deref().map(display), study: report };
    Ok(Outcome::new("study", &result, text))
}

// ---- probe ----

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// One or more embedding manifests.
    #[arg(long, num_args = 1.., required = true)]
    embeddings: Vec<PathBuf>,
    /// Cluster configurations (default: the four bundled groupings).
    #[arg(long)]
    configs: Option<PathBuf>,
    /// Report path (default: probe.json in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-set PCA scatter plots.
    #[arg(long)]
    plots: Option<PathBuf>,
    /// cosine or euclidean.
    #[arg(long, default_value = "cosine")]
    metric: String,
    #[arg(long, default_value_t = 2)]
    pca_dims: usize,
}

#[derive(Serialize)]
struct ProbeResult {
    report: String,
    sets: usize,
    plots: Vec<String>,
    scores: Vec<ProbeScore>,
}

#[derive(Serialize)]
struct ProbeScore {
    encoder_id: String,
    level: String,
    config: String,
    score: Option<f64>,
    error: Option<String>,
}

pub fn probe(ctx: &Context<'_>, args: ProbeArgs) -> Result<Outcome, CliError> {
    let metric: Metric = args.metric.parse()?;
    let mut sets = Vec::new();
    for m in &args.embeddings {
        sets.extend(load_embeddings(m)?);
    }
    let configs = match &args.configs {
        Some(p) => ClusterConfig::load(p)?,
        None => ClusterConfig::defaults(),
    };
    let options = ProbeOptions { metric, pca_dims: args.pca_dims, threads: ctx.threads };
    let report = run_probe_suite(&sets, &configs, &options)?;
    let out = ctx.out_path(args.out, "probe.json");
    ensure_parent(&out)?;
    report.write(&out)?;
    let plots = match ctx.plot_dir(args.plots) {
        Some(dir) => report.write_plots(&dir)?.iter().map(|p| display(p)).collect(),
        None => Vec::new(),
    };
    let mut scores = Vec::new();
    let mut text = format!("{} embedding sets, metric {metric}; report {}\n", report.sets.len(), display(&out));
    for s in &report.sets {
        let ev = s
            .pca
            .as_ref()
            .map(|p| p.explained_variance.iter().map(|v| format!("{:.1}%", 100.0 * v)).collect::<Vec<_>>().join(" "))
            .unwrap_or_else(|| s.pca_error.clone().unwrap_or_default());
        let _ = writeln!(text, "{} ({}), {} items, PCA {ev}", s.encoder_id, s.level, s.item_count);
        for c in &s.silhouettes {
            match (c.score, &c.error) {
                (Some(v), _) => {
                    let _ = writeln!(text, "  {:<32} {v:+.4}", c.config);
                }
                (None, e) => {
                    let _ = writeln!(text, "  {:<32} error: {}", c.config, e.as_deref().unwrap_or("?"));
                }
            }
            scores.push(ProbeScore {
                encoder_id: s.encoder_id.clone(),
                level: s.level.to_string(),
                config: c.config.clone(),
                score: c.score,
                error: c.error.clone(),
            });
        }
    }
    let result = ProbeResult { report: display(&out), sets: report.sets.len(), plots, scores };
    Ok(Outcome::new("probe", &result, text))
}
