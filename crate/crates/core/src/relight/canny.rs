//! Canny edge detection on the luminance of a linear image.
//!
//! Steps: Rec. 709 luminance, separable Gaussian blur (radius `ceil(3σ)`,
//! replicated borders), 3×3 Sobel gradients, non-maximum suppression along the
//! gradient direction quantized to 45° steps, then double-threshold hysteresis
//! over 8-connected neighbours. The outermost pixel ring never holds an edge.

use serde::{Deserialize, Serialize};

use super::raster::{EdgeMap, LinearImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Thresholds are fractions of the largest gradient magnitude in the image.
    #[default]
    Relative,
    /// Thresholds are raw gradient magnitudes.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub low: f64,
    pub high: f64,
    pub sigma: f64,
    pub mode: ThresholdMode,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self { low: 0.1, high: 0.2, sigma: 1.4, mode: ThresholdMode::Relative }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.low > 0.0 && self.low < self.high && self.high.is_finite()) {
            return Err(Error::Domain(format!(
                "canny thresholds need 0 < low < high, got low={} high={}",
                self.low, self.high
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("canny sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Replicated-border separable convolution, horizontal pass first.
fn blur(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                acc += weight * plane[y * w + clamp(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                acc += weight * tmp[clamp(y as isize + k as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

const TIE_TOLERANCE: f64 = 1e-9;

struct Gradients {
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
}

fn sobel(plane: &[f64], w: usize, h: usize) -> Gradients {
    let at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        plane[yc * w + xc]
    };
    let n = w * h;
    let (mut gx, mut gy, mut magnitude) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let dx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let dy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            magnitude[i] = dx.hypot(dy);
        }
    }
    Gradients { gx, gy, magnitude }
}

/// Keeps pixels that are maxima along their gradient direction.
///
/// A pixel survives when it is strictly greater than its neighbour in the
/// backward direction and at least equal to the forward one, so a plateau two
/// pixels wide (the symmetric response to a step) thins to one pixel.
/// Magnitudes within a relative [`TIE_TOLERANCE`] count as equal; otherwise
/// last-bit rounding would decide which flank of a step survives, and that
/// choice would change when the image is rescaled.
fn non_maximum_suppression(g: &Gradients, w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            let m = g.magnitude[i];
            if m == 0.0 {
                continue;
            }
            let mut angle = g.gy[i].atan2(g.gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            // (dx, dy) of the forward neighbour along the quantized direction.
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let fwd = g.magnitude[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            let back = g.magnitude[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            let tol = TIE_TOLERANCE * m;
            if m - back > tol && fwd - m <= tol {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(thin: &[f64], w: usize, h: usize, low: f64, high: f64) -> Vec<bool> {
    let mut edge = vec![false; w * h];
    let mut stack = Vec::new();
    for start in 0..w * h {
        if edge[start] || thin[start] < high || thin[start] == 0.0 {
            continue;
        }
        edge[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !edge[j] && thin[j] >= low && thin[j] > 0.0 {
                        edge[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    edge
}

/// Canny edges of a single-channel plane.
pub fn canny_plane(plane: &[f64], width: usize, height: usize, params: &CannyParams) -> Result<EdgeMap> {
    params.validate()?;
    if plane.len() != width * height {
        return Err(Error::Shape(format!("plane has {} values for {width}x{height}", plane.len())));
    }
    let kernel = gaussian_kernel(params.sigma);
    if width < kernel.len() || height < kernel.len() {
        return Err(Error::Shape(format!(
            "{width}x{height} image is smaller than the {0}x{0} blur kernel",
            kernel.len()
        )));
    }
    let blurred = blur(plane, width, height, &kernel);
    let grads = sobel(&blurred, width, height);
    let thin = non_maximum_suppression(&grads, width, height);
    let (low, high) = match params.mode {
        ThresholdMode::Absolute => (params.low, params.high),
        ThresholdMode::Relative => {
            let max = grads.magnitude.iter().cloned().fold(0.0, f64::max);
            (params.low * max, params.high * max)
        }
    };
    EdgeMap::new(width, height, hysteresis(&thin, width, height, low, high))
}

/// Canny edges of the image's Rec. 709 luminance.
pub fn canny_edges(img: &LinearImage, params: &CannyParams) -> Result<EdgeMap> {
    canny_plane(&img.luminance(), img.width(), img.height(), params)
}
