#![allow(dead_code)]

use std::path::PathBuf;

use lumikit_core::relight::{read_linear_image, LinearImage};

pub fn fixture(name: &str) -> PathBuf {
    // Resolves from both this crate and the acceptance crate next to it.
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn load(name: &str) -> LinearImage {
    read_linear_image(&fixture(name)).unwrap()
}

pub const NATURAL: [&str; 3] = ["astronaut.png", "coffee.png", "chelsea.png"];

/// Each channel multiplied by its gain, without clipping.
pub fn scale(img: &LinearImage, g: [f64; 3]) -> LinearImage {
    img.map_pixels(|p| [p[0] * g[0], p[1] * g[1], p[2] * g[2]]).unwrap()
}

/// Shift right by `n` pixels, replicating the left column.
pub fn shift_right(img: &LinearImage, n: usize) -> LinearImage {
    LinearImage::from_fn(img.width(), img.height(), |x, y| img.pixel(x.saturating_sub(n), y)).unwrap()
}

/// The scikit-image reference pairs, keyed like `fixtures/ssim_golden.json`.
pub fn ssim_cases() -> Vec<(&'static str, LinearImage, LinearImage, bool)> {
    use lumikit_core::color::PresetId;
    let astro = load("astronaut.png");
    let coffee = load("coffee.png");
    let chelsea = load("chelsea.png");
    let half = astro.map_pixels(|p| p.map(|v| 0.5 * v + 0.25)).unwrap();
    vec![
        ("astronaut_half_contrast", astro.clone(), half.clone(), false),
        ("coffee_gamma_1_25", coffee.clone(), coffee.map_pixels(|p| p.map(|v| v.powf(1.25))).unwrap(), false),
        ("chelsea_shift_2", chelsea.clone(), shift_right(&chelsea, 2), false),
        ("astronaut_tungsten", astro.clone(), scale(&astro, PresetId::C1.gains().gains()), false),
        ("chelsea_swap_red_blue", chelsea.clone(), chelsea.map_pixels(|p| [p[2], p[1], p[0]]).unwrap(), false),
        ("astronaut_half_contrast_left_mask", astro, half, true),
    ]
}

pub fn ssim_golden() -> serde_json::Map<String, serde_json::Value> {
    let text = std::fs::read_to_string(fixture("ssim_golden.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn synthetic_embeddings() -> lumikit_core::probe::EmbeddingSet {
    let path = fixture("embeddings/synthetic_token.json");
    lumikit_core::probe::load_embeddings(&path).unwrap().remove(0)
}

pub fn fixture_configs() -> Vec<lumikit_core::probe::ClusterConfig> {
    lumikit_core::probe::ClusterConfig::load(&fixture("probe_fixture_configs.json")).unwrap()
}

pub fn pca_matrix() -> Vec<Vec<f64>> {
    serde_json::from_str(&std::fs::read_to_string(fixture("pca_5x4.json")).unwrap()).unwrap()
}

/// Silhouette computed from a full distance matrix, written independently of
/// the library's per-item loop.
pub fn silhouette_oracle(rows: &[Vec<f64>], groups: &[Vec<usize>], cosine: bool) -> f64 {
    let n = rows.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = if cosine {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(x, y)| x * y).sum();
                let ni = rows[i].iter().map(|x| x * x).sum::<f64>().sqrt();
                let nj = rows[j].iter().map(|x| x * x).sum::<f64>().sqrt();
                1.0 - dot / (ni * nj)
            } else {
                rows[i].iter().zip(&rows[j]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            };
        }
    }
    let mut scores = Vec::new();
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            if members.len() < 2 {
                scores.push(0.0);
                continue;
            }
            let mut own = 0.0;
            for &j in members {
                if j != i {
                    own += d[i][j];
                }
            }
            let a = own / (members.len() - 1) as f64;
            let mut b = f64::INFINITY;
            for (h, other) in groups.iter().enumerate() {
                if h == g {
                    continue;
                }
                let mut s = 0.0;
                for &j in other {
                    s += d[i][j];
                }
                b = b.min(s / other.len() as f64);
            }
            scores.push(if a.max(b) > 0.0 { (b - a) / a.max(b) } else { 0.0 });
        }
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}
