//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Runs without the libtest harness so the
//! lines always reach the output.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use lumikit_core::color::{
    chromaticity_to_illuminant_rgb, kelvin_to_chromaticity, ColorTemperature, IlluminantPreset, IlluminantRgb, PresetId,
};
use lumikit_core::eval::{
    evaluate_manifest, inverse_normal_cdf, ssim, thurstone_case_v, EvalOptions, MetricsReport, PreferenceMatrix,
    SsimMode,
};
use lumikit_core::loss::{
    gradient_check, lambda_sweep, mrl, residual_map, MrlParams, RegionFixture, Tensor3, ABLATION_LAMBDAS,
    DEFAULT_LAMBDA,
};
use lumikit_core::probe::{pca, run_probe_suite, silhouette_from_groups, silhouette_score, Metric, ProbeOptions};
use lumikit_core::relight::{
    apply_flat_light, edge_disagreement_under_flat_light, generate_variants, read_linear_image, write_srgb_png,
    AugmentOptions, BitDepth, CannyParams, ForegroundMask, LinearImage, PromptTemplate, SoftMask, VariantSource,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRESET_KELVINS: [f64; 7] = [2850.0, 3300.0, 3800.0, 4500.0, 6500.0, 7000.0, 7500.0];
const ILLUMINANT_A_XY: (f64, f64) = (0.4476, 0.4074);
const ILLUMINANT_A_TOL: f64 = 0.002;
const PRESET_RUNTIME: Duration = Duration::from_secs(1);
const ROUND_TRIP_TOL: f64 = 1e-6;
const EDGE_TOL: f64 = 0.02;
const CLOSED_FORM_TOL: f64 = 1e-12;
const GRADIENT_TRIALS: usize = 100;
const GRADIENT_STEP: f64 = 1e-4;
const GRADIENT_TOL: f64 = 1e-5;
const AFFINE_TOL: f64 = 1e-10;
const ANGULAR_TOL_DEG: f64 = 2.0;
const LAB_MSE_TOL: f64 = 5.0;
const SSIM_MIN: f64 = 0.98;
const PIPELINE_RUNTIME: Duration = Duration::from_secs(30);
const SSIM_ORACLE_TOL: f64 = 1e-4;
const PHI_INV_TOL: f64 = 1e-8;
const THURSTONE_TOL: f64 = 1e-3;
const RANK_ONE_TOL: f64 = 1e-9;
const ORTHONORMAL_TOL: f64 = 1e-10;
const PCA_ORACLE_TOL: f64 = 1e-8;
const THREAD_COUNTS: [usize; 3] = [1, 4, 8];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let kelvins: Vec<f64> = IlluminantPreset::all().iter().map(|p| p.temperature.kelvin()).collect();
    // Fresh evaluations, bypassing the preset cache.
    for k in &kelvins {
        chromaticity_to_illuminant_rgb(kelvin_to_chromaticity(ColorTemperature::new(*k).unwrap())).unwrap();
    }
    let a = kelvin_to_chromaticity(ColorTemperature::new(2856.0).unwrap());
    let elapsed = start.elapsed();
    let (dx, dy) = ((a.x() - ILLUMINANT_A_XY.0).abs(), (a.y() - ILLUMINANT_A_XY.1).abs());
    let pass =
        kelvins == PRESET_KELVINS && dx <= ILLUMINANT_A_TOL && dy <= ILLUMINANT_A_TOL && elapsed < PRESET_RUNTIME;
    Verdict::new(
        pass,
        format!(
            "presets {kelvins:?} K; 2856K -> ({:.5}, {:.5}), |d| = ({dx:.1e}, {dy:.1e}) <= {ILLUMINANT_A_TOL}; {:.0} ms",
            a.x(),
            a.y(),
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn criterion_2() -> Verdict {
    let gains: Vec<[f64; 3]> = (20..=100)
        .map(|h| {
            let t = ColorTemperature::new(h as f64 * 100.0).unwrap();
            chromaticity_to_illuminant_rgb(kelvin_to_chromaticity(t)).unwrap().gains()
        })
        .collect();
    let violations = gains.windows(2).filter(|w| w[1][0] > w[0][0] || w[1][2] < w[0][2]).count();
    Verdict::new(violations == 0, format!("{} temperatures 2000..10000 K, {violations} violations", gains.len()))
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (w, h) = (rng.gen_range(4..40), rng.gen_range(4..40));
        let data: Vec<f64> = (0..w * h * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let img = LinearImage::new(w, h, data).unwrap();
        let mut illuminants: Vec<IlluminantRgb> = PresetId::CANONICAL.iter().map(|p| p.gains()).collect();
        illuminants.push(IlluminantRgb::new([rng.gen_range(0.1..5.0), 1.0, rng.gen_range(0.1..5.0)]).unwrap());
        for g in illuminants {
            let back = apply_flat_light(&apply_flat_light(&img, &g).image, &g.reciprocal()).image;
            for (a, b) in img.data().iter().zip(back.data()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Verdict::new(worst <= ROUND_TRIP_TOL, format!("10 random images x 8 illuminants, max error {worst:.1e}"))
}

fn step_images() -> Vec<LinearImage> {
    vec![
        LinearImage::from_fn(40, 30, |x, _| if x < 17 { [0.1; 3] } else { [0.6; 3] }).unwrap(),
        LinearImage::from_fn(40, 30, |_, y| if y < 12 { [0.5, 0.3, 0.2] } else { [0.05, 0.1, 0.08] }).unwrap(),
        LinearImage::from_fn(64, 64, |x, _| if x < 32 { [0.1; 3] } else { [0.9; 3] }).unwrap(),
    ]
}

fn criterion_4() -> Verdict {
    let params = CannyParams::default();
    let mut step_worst: f64 = 0.0;
    for img in step_images() {
        for p in PresetId::CANONICAL {
            step_worst = step_worst.max(edge_disagreement_under_flat_light(&img, &p.gains(), &params).unwrap());
        }
    }
    let mut over = Vec::new();
    let mut natural_worst: (f64, String) = (0.0, String::new());
    for name in common::NATURAL {
        let img = common::load(name);
        for p in PresetId::CANONICAL {
            let d = edge_disagreement_under_flat_light(&img, &p.gains(), &params).unwrap();
            if d >= EDGE_TOL {
                over.push(format!("{name} {p} {:.2}%", 100.0 * d));
            }
            if d > natural_worst.0 {
                natural_worst = (d, format!("{name} {p}"));
            }
        }
    }
    let pass = step_worst == 0.0 && over.is_empty();
    let mut detail = format!(
        "steps max {:.2}%; natural max {:.2}% ({}) vs < {:.0}%",
        100.0 * step_worst,
        100.0 * natural_worst.0,
        natural_worst.1,
        100.0 * EDGE_TOL
    );
    if !over.is_empty() {
        detail.push_str(&format!("; over the bound: {}", over.join(", ")));
    }
    Verdict::new(pass, detail)
}

fn criterion_5() -> Verdict {
    // Constant residuals: pred − target = d everywhere, a hard half mask.
    let (h, w, c) = (6, 8, 3);
    let mut closed_worst: f64 = 0.0;
    for d in [0.5, -1.25, 2.0] {
        let pred = Tensor3::new(h, w, c, vec![d; h * w * c]).unwrap();
        let target = Tensor3::new(h, w, c, vec![0.0; h * w * c]).unwrap();
        let mask = SoftMask::new(w, h, (0..h * w).map(|i| if i % w < 3 { 1.0 } else { 0.0 }).collect()).unwrap();
        let frac = 3.0 / w as f64;
        let r = residual_map(&pred, &target).unwrap();
        for lambda in [0.0, 0.5, 1.0] {
            let got = mrl(&r, &mask, &MrlParams::new(lambda).unwrap()).unwrap();
            let want = d * d * ((1.0 - lambda) * (1.0 - frac) + lambda * frac);
            closed_worst = closed_worst.max((got - want).abs());
        }
    }
    let grad = gradient_check(GRADIENT_TRIALS, 42, GRADIENT_STEP, GRADIENT_TOL).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut affine_worst: f64 = 0.0;
    for _ in 0..20 {
        let (pred, target, mask, _) = lumikit_core::loss::random_case(&mut rng, 8, 8, 4);
        let r = residual_map(&pred, &target).unwrap();
        let fixture = RegionFixture::from_maps(&r, &mask).unwrap();
        let (l0, l1) = (
            mrl(&r, &mask, &MrlParams::new(0.0).unwrap()).unwrap(),
            mrl(&r, &mask, &MrlParams::new(1.0).unwrap()).unwrap(),
        );
        let lambdas: Vec<f64> =
            ABLATION_LAMBDAS.iter().copied().chain((0..10).map(|_| rng.gen_range(0.0..=1.0))).collect();
        for row in lambda_sweep(&fixture, &lambdas).unwrap() {
            let direct = mrl(&r, &mask, &MrlParams::new(row.lambda).unwrap()).unwrap();
            affine_worst =
                affine_worst.max((row.loss - (l0 + row.lambda * (l1 - l0))).abs()).max((direct - row.loss).abs());
        }
    }
    let default_ok = DEFAULT_LAMBDA == 0.2 && MrlParams::default().lambda() == 0.2;
    let pass = closed_worst <= CLOSED_FORM_TOL
        && grad.passed
        && grad.trials == GRADIENT_TRIALS
        && affine_worst <= AFFINE_TOL
        && default_ok;
    Verdict::new(
        pass,
        format!(
            "closed form max err {closed_worst:.1e}; gradient {} trials max rel err {:.2e} < {GRADIENT_TOL:.0e}; sweep affine gap {affine_worst:.1e}; default lambda {DEFAULT_LAMBDA}",
            grad.trials, grad.max_relative_error
        ),
    )
}

/// A dark, neutral, textured source (every pixel gray, linear value <= 0.4 so
/// the warmest preset's red gain cannot clip) and a central foreground mask.
fn neutral_source() -> (LinearImage, ForegroundMask) {
    let (w, h) = (96, 80);
    let img = LinearImage::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let wave = 0.5 + 0.25 * (xf * 0.31).sin() * (yf * 0.17).cos() + 0.15 * ((xf + 2.0 * yf) * 0.09).sin();
        let block = if (x / 12 + y / 10) % 2 == 0 { 0.1 } else { 0.0 };
        let v = 0.04 + 0.3 * (wave * 0.8 + block).clamp(0.0, 1.0);
        [v; 3]
    })
    .unwrap();
    let mask = ForegroundMask::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - 48.0, y as f64 - 40.0);
        dx * dx / (30.0 * 30.0) + dy * dy / (24.0 * 24.0) <= 1.0
    })
    .unwrap();
    (img, mask)
}

/// Source PNG -> seven variants -> gray-world evaluation.
fn pipeline(dir: &Path, threads: usize) -> MetricsReport {
    let (img, mask) = neutral_source();
    std::fs::create_dir_all(dir).unwrap();
    let src_path = dir.join("neutral.png");
    write_srgb_png(&src_path, &img, BitDepth::Sixteen).unwrap();
    let img = read_linear_image(&src_path).unwrap();
    let template = PromptTemplate::new("[v]", "object");
    let src = VariantSource { path: &src_path, image: &img, mask: &mask, template: &template };
    let out = dir.join("variants");
    let options = AugmentOptions { threads: Some(threads), ..Default::default() };
    generate_variants(&src, &out, &options).unwrap();
    let eval = EvalOptions { threads: Some(threads), ..Default::default() };
    evaluate_manifest(&out.join("manifest.jsonl"), &eval).unwrap()
}

fn criterion_6() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let report = pipeline(dir.path(), 4);
    let elapsed = start.elapsed();
    let worst =
        |f: fn(&lumikit_core::eval::MetricsRecord) -> f64| report.records.iter().map(f).fold(f64::NAN, f64::max);
    let ang = worst(|r| r.angular_error_deg);
    let lab = worst(|r| r.lab_mse);
    let ssim_src = report.records.iter().map(|r| r.ssim_to_source.unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min);
    let ssim_variant = report.records.iter().map(|r| r.ssim).fold(f64::INFINITY, f64::min);
    let complete = report.records.len() == 7 && report.failures.is_empty();
    let pass =
        complete && ang < ANGULAR_TOL_DEG && lab < LAB_MSE_TOL && ssim_src > SSIM_MIN && elapsed < PIPELINE_RUNTIME;
    Verdict::new(
        pass,
        format!(
            "{} records; max angular {ang:.3} deg < {ANGULAR_TOL_DEG}; max lab_mse {lab:.3} < {LAB_MSE_TOL}; min SSIM(source, balanced) {ssim_src:.4} > {SSIM_MIN} (variant vs balanced min {ssim_variant:.4}); {:.1} s",
            report.records.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Verdict {
    let golden = common::ssim_golden();
    let mut ssim_worst: f64 = 0.0;
    let cases = common::ssim_cases();
    for (name, a, b, masked) in &cases {
        let mask = masked.then(|| ForegroundMask::from_fn(a.width(), a.height(), |x, _| x < a.width() / 2).unwrap());
        let got = ssim(a, b, mask.as_ref(), SsimMode::Luminance).unwrap();
        ssim_worst = ssim_worst.max((got - golden[*name].as_f64().unwrap()).abs());
    }

    let four = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
    let groups = vec![vec![0, 1], vec![2, 3]];
    let four_score = silhouette_from_groups(&four, &groups, Metric::Euclidean).unwrap();
    let mut silhouette_exact =
        four_score == common::silhouette_oracle(&four, &groups, false) && (four_score - 0.9900).abs() < 1e-4;
    let set = common::synthetic_embeddings();
    let rows = set.rows();
    for metric in [Metric::Cosine, Metric::Euclidean] {
        for config in common::fixture_configs() {
            let g = config.resolve(&set).unwrap();
            silhouette_exact &= silhouette_score(&set, &config, metric).unwrap()
                == common::silhouette_oracle(&rows, &g, metric == Metric::Cosine);
        }
    }

    // 40-digit references.
    let phi_points = [
        (1e-10, -6.361_340_902_404_057),
        (0.025, -1.959_963_984_540_054_3),
        (0.5, 0.0),
        (0.8413, 0.999_815_093_614_744_4),
        (0.975, 1.959_963_984_540_054_3),
    ];
    let phi_worst = phi_points.iter().map(|(p, z)| (inverse_normal_cdf(*p).unwrap() - z).abs()).fold(0.0, f64::max);

    let pair = |wins: u64, t: u64| {
        PreferenceMatrix::new(vec!["a".into(), "b".into()], vec![vec![0, wins], vec![t - wins, 0]]).unwrap()
    };
    let even = thurstone_case_v(&pair(50, 100)).unwrap();
    let sigma = thurstone_case_v(&pair(8413, 10000)).unwrap();
    let thurstone_err = (even[0] - even[1]).abs().max((sigma[0] - sigma[1] - 1.0).abs());

    let pass = cases.len() >= 5
        && ssim_worst <= SSIM_ORACLE_TOL
        && silhouette_exact
        && phi_worst <= PHI_INV_TOL
        && thurstone_err <= THURSTONE_TOL;
    Verdict::new(
        pass,
        format!(
            "SSIM {} fixtures max |d| {ssim_worst:.1e}; silhouette exact={silhouette_exact} (four points {four_score:.4}); inverse normal max err {phi_worst:.1e}; Thurstone max err {thurstone_err:.1e}",
            cases.len()
        ),
    )
}

fn criterion_8() -> Verdict {
    let line: Vec<Vec<f64>> = (0..7)
        .map(|i| {
            let t = i as f64 * 0.7 - 2.0;
            vec![1.0 + 2.0 * t, -0.5 + t, 3.0 - 2.0 * t, 0.25 * t]
        })
        .collect();
    let p = pca(&line, 2).unwrap();
    let rank_err = (p.explained_variance[0] - 1.0).abs().max(p.explained_variance[1].abs());

    let set = common::synthetic_embeddings();
    let q = pca(&set.rows(), 5).unwrap();
    let mut gram_err: f64 = 0.0;
    for a in 0..5 {
        for b in 0..5 {
            let d: f64 = q.directions[a].iter().zip(&q.directions[b]).map(|(x, y)| x * y).sum();
            gram_err = gram_err.max((d - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }

    let rows = common::pca_matrix();
    let (n, d) = (rows.len(), rows[0].len());
    let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let x = DMatrix::from_fn(n, d, |i, k| rows[i][k] - mean[k]);
    let eig = (x.transpose() * &x / (n - 1) as f64).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().sum();
    let ours = pca(&rows, 3).unwrap();
    let mut oracle_err: f64 = 0.0;
    for (c, &k) in order.iter().take(3).enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        lumikit_core::probe::orient(&mut v);
        for (a, b) in ours.directions[c].iter().zip(&v) {
            oracle_err = oracle_err.max((a - b).abs());
        }
        oracle_err = oracle_err.max((ours.explained_variance[c] - eig.eigenvalues[k] / total).abs());
    }
    let pass = rank_err <= RANK_ONE_TOL && gram_err <= ORTHONORMAL_TOL && oracle_err <= PCA_ORACLE_TOL;
    Verdict::new(
        pass,
        format!(
            "rank-1 explained variance err {rank_err:.1e}; Gram err {gram_err:.1e}; 5x4 oracle err {oracle_err:.1e}"
        ),
    )
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let set = common::synthetic_embeddings();
    let configs = common::fixture_configs();
    let mut runs = Vec::new();
    for t in THREAD_COUNTS {
        // Same relative layout each time, so manifests and reports can match byte for byte.
        let dir = root.path().join("run");
        if dir.exists() {
            std::fs::remove_dir_all(&dir).unwrap();
        }
        let report = pipeline(&dir, t);
        report.write(&dir.join("metrics.json")).unwrap();
        report.write_plots(&dir.join("plots")).unwrap();
        let probe = run_probe_suite(
            std::slice::from_ref(&set),
            &configs,
            &ProbeOptions { threads: Some(t), ..Default::default() },
        )
        .unwrap();
        probe.write(&dir.join("probe.json")).unwrap();
        probe.write_plots(&dir.join("plots")).unwrap();
        runs.push(tree_bytes(&dir));
    }
    let files = runs[0].len();
    let identical = runs.iter().all(|r| *r == runs[0]);
    Verdict::new(
        identical && files > 10,
        format!("{files} output files compared across threads {THREAD_COUNTS:?}, identical={identical}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("preset fidelity", criterion_1),
        ("locus monotonicity", criterion_2),
        ("relight round trip", criterion_3),
        ("edge invariance", criterion_4),
        ("masked loss correctness", criterion_5),
        ("synthetic pipeline closure", criterion_6),
        ("metric oracles", criterion_7),
        ("PCA", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!("criterion {} {:<27} {}  {}", i + 1, name, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
