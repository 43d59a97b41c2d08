//! Gaussian-window SSIM (11×11, σ = 1.5, K1 = 0.01, K2 = 0.03, range 1).
//!
//! Only windows that lie entirely inside the image contribute, so the SSIM map
//! is `(H − 10) × (W − 10)`. With a mask, the map is averaged over windows
//! whose centre pixel is foreground.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relight::{ForegroundMask, LinearImage};

pub const SSIM_WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsimMode {
    /// Rec. 709 luminance of the linear image.
    #[default]
    Luminance,
    /// Mean of the three per-channel scores.
    PerChannel,
}

fn window() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.map(|v| v / sum)
}

/// Separable valid-region filtering: output is `(w − 10) × (h − 10)`.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Local SSIM values for every full window, row-major `(w − 10) × (h − 10)`.
pub fn ssim_map(a: &[f64], b: &[f64], width: usize, height: usize) -> Result<Vec<f64>> {
    if a.len() != width * height || b.len() != width * height {
        return Err(Error::Shape(format!("SSIM planes must both hold {width}x{height} values")));
    }
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::Shape(format!(
            "{width}x{height} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let k = window();
    let prod = |f: &dyn Fn(usize) -> f64| (0..a.len()).map(f).collect::<Vec<f64>>();
    let mu_a = filter_valid(a, width, height, &k);
    let mu_b = filter_valid(b, width, height, &k);
    let aa = filter_valid(&prod(&|i| a[i] * a[i]), width, height, &k);
    let bb = filter_valid(&prod(&|i| b[i] * b[i]), width, height, &k);
    let ab = filter_valid(&prod(&|i| a[i] * b[i]), width, height, &k);
    Ok((0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2))
        })
        .collect())
}

fn mean_over(map: &[f64], width: usize, mask: Option<&ForegroundMask>) -> Result<f64> {
    let r = SSIM_WINDOW / 2;
    let ow = width - 2 * r;
    let Some(mask) = mask else {
        return Ok(map.iter().sum::<f64>() / map.len() as f64);
    };
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, v) in map.iter().enumerate() {
        if mask.get(i % ow + r, i / ow + r) {
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Degenerate("no SSIM window is centred on a foreground pixel".into()));
    }
    Ok(sum / n as f64)
}

/// SSIM between two linear images, optionally restricted to foreground windows.
pub fn ssim(a: &LinearImage, b: &LinearImage, mask: Option<&ForegroundMask>, mode: SsimMode) -> Result<f64> {
    if !a.same_size(b) {
        return Err(Error::Shape(format!(
            "SSIM inputs are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if let Some(m) = mask {
        if !a.same_size(m) {
            return Err(Error::Shape("SSIM mask does not match the images".into()));
        }
    }
    let (w, h) = (a.width(), a.height());
    match mode {
        SsimMode::Luminance => {
            let map = ssim_map(&a.luminance(), &b.luminance(), w, h)?;
            mean_over(&map, w, mask)
        }
        SsimMode::PerChannel => {
            let mut total = 0.0;
            for c in 0..3 {
                let pa: Vec<f64> = a.data().iter().skip(c).step_by(3).copied().collect();
                let pb: Vec<f64> = b.data().iter().skip(c).step_by(3).copied().collect();
                total += mean_over(&ssim_map(&pa, &pb, w, h)?, w, mask)?;
            }
            Ok(total / 3.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize) -> LinearImage {
        LinearImage::from_fn(w, h, |x, y| {
            let v = 0.5 + 0.4 * ((x as f64 * 0.7).sin() * (y as f64 * 0.45).cos());
            [v, 0.8 * v, 0.6 * v]
        })
        .unwrap()
    }

    #[test]
    fn identical_images_score_one() {
        let img = textured(24, 20);
        for mode in [SsimMode::Luminance, SsimMode::PerChannel] {
            assert!((ssim(&img, &img, None, mode).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_images_use_the_luminance_term_only() {
        let a = LinearImage::filled(16, 16, [0.5; 3]).unwrap();
        let b = LinearImage::filled(16, 16, [0.25; 3]).unwrap();
        let expected = (2.0 * 0.5 * 0.25 + 1e-4) / (0.25 + 0.0625 + 1e-4);
        let got = ssim(&a, &b, None, SsimMode::Luminance).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got}");
        assert!((got - 0.8001).abs() < 1e-4);
    }

    #[test]
    fn small_images_are_rejected() {
        let img = LinearImage::filled(10, 30, [0.5; 3]).unwrap();
        assert!(matches!(ssim(&img, &img, None, SsimMode::Luminance), Err(Error::Shape(_))));
    }

    #[test]
    fn mask_selects_window_centres() {
        let a = textured(30, 30);
        let b = LinearImage::from_fn(30, 30, |x, y| {
            let p = a.pixel(x, y);
            if x >= 15 {
                [p[0] * 0.3, p[1] * 0.3, p[2] * 0.3]
            } else {
                p
            }
        })
        .unwrap();
        // Windows centred at x <= 9 never reach the altered half.
        let left = ForegroundMask::from_fn(30, 30, |x, _| x <= 9).unwrap();
        assert!((ssim(&a, &b, Some(&left), SsimMode::Luminance).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&a, &b, None, SsimMode::Luminance).unwrap() < 0.99);
        let border = ForegroundMask::from_fn(30, 30, |x, _| x < 3).unwrap();
        assert!(matches!(ssim(&a, &b, Some(&border), SsimMode::Luminance), Err(Error::Degenerate(_))));
    }

    #[test]
    fn scores_stay_in_range() {
        let a = textured(20, 20);
        let b = LinearImage::from_fn(20, 20, |x, y| a.pixel(19 - x, y)).unwrap();
        let s = ssim(&a, &b, None, SsimMode::Luminance).unwrap();
        assert!((-1.0..1.0).contains(&s));
    }
}
