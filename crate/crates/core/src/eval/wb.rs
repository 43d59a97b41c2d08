//! Classical white balancing and mask-aggregated illuminant estimation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::IlluminantRgb;
use crate::error::{Error, Result};
use crate::relight::{read_linear_image, ForegroundMask, LinearImage};

/// Balanced pixels at or below this value are left out of ratio estimates.
pub const RATIO_EPSILON: f64 = 1e-4;

const CHANNELS: [&str; 3] = ["red", "green", "blue"];

#[derive(Debug, Clone, PartialEq, Default)]
pub enum WbMethod {
    #[default]
    GrayWorld,
    /// Minkowski p-norm mean per channel, `p >= 1`.
    ShadesOfGray(f64),
    WhitePatch,
    /// Balanced images produced by an outside tool. In [`white_balance`] this
    /// is the balanced image itself; in manifest evaluation it is a directory
    /// holding one balanced file per variant, under the variant's file name.
    External(PathBuf),
}

impl WbMethod {
    pub fn shades_of_gray(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::Domain(format!("shades-of-gray norm must be finite and >= 1, got {p}")));
        }
        Ok(WbMethod::ShadesOfGray(p))
    }
}

impl fmt::Display for WbMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WbMethod::GrayWorld => f.write_str("gray_world"),
            WbMethod::ShadesOfGray(p) => write!(f, "sog:{p}"),
            WbMethod::WhitePatch => f.write_str("white_patch"),
            WbMethod::External(dir) => write!(f, "external:{}", dir.display()),
        }
    }
}

impl FromStr for WbMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gray_world" => return Ok(WbMethod::GrayWorld),
            "white_patch" => return Ok(WbMethod::WhitePatch),
            _ => {}
        }
        if let Some(p) = s.strip_prefix("sog:") {
            let p: f64 = p.parse().map_err(|_| Error::Domain(format!("shades-of-gray norm '{p}' is not a number")))?;
            return WbMethod::shades_of_gray(p);
        }
        if let Some(dir) = s.strip_prefix("external:") {
            if dir.is_empty() {
                return Err(Error::Domain("external white balance needs a directory".into()));
            }
            return Ok(WbMethod::External(PathBuf::from(dir)));
        }
        Err(Error::Domain(format!(
            "unknown white balance method '{s}'; expected gray_world, sog:<p>, white_patch or external:<dir>"
        )))
    }
}

impl Serialize for WbMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WbMethod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How per-pixel ratios are reduced to one value per channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Median,
    Mean,
}

fn channel_statistic(img: &LinearImage, method: &WbMethod) -> [f64; 3] {
    let n = img.pixel_count() as f64;
    let mut out = [0.0; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let values = img.data().iter().skip(c).step_by(3);
        *slot = match method {
            WbMethod::GrayWorld => values.sum::<f64>() / n,
            WbMethod::WhitePatch => values.fold(0.0, |m, v| f64::max(m, *v)),
            WbMethod::ShadesOfGray(p) => {
                // Scaling by the maximum keeps v^p representable for large p.
                let max = img.data().iter().skip(c).step_by(3).fold(0.0, |m, v| f64::max(m, *v));
                if max == 0.0 {
                    0.0
                } else {
                    max * (values.map(|v| (v / max).powf(*p)).sum::<f64>() / n).powf(1.0 / p)
                }
            }
            WbMethod::External(_) => unreachable!("external balancing has no channel statistic"),
        };
    }
    out
}

/// Divides each channel of `img` by the matching gain.
pub fn divide_by(img: &LinearImage, gains: &IlluminantRgb) -> LinearImage {
    let g = gains.gains();
    img.map_pixels(|p| [p[0] / g[0], p[1] / g[1], p[2] / g[2]])
        .expect("dividing by positive gains keeps pixels finite and nonnegative")
}

/// White-balances `img`, returning the balanced image and the global gains.
///
/// For [`WbMethod::External`] the path names the balanced image; its gains are
/// the median ratio over the whole frame.
pub fn white_balance(img: &LinearImage, method: &WbMethod) -> Result<(LinearImage, IlluminantRgb)> {
    if let WbMethod::External(path) = method {
        let balanced = read_external(img, path)?;
        let full = ForegroundMask::full(img.width(), img.height())?;
        let gains = estimate_illuminant(img, &balanced, &full, Aggregation::Median)?;
        return Ok((balanced, gains));
    }
    let stat = channel_statistic(img, method);
    if let Some(c) = stat.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Degenerate(format!("{} channel statistic is zero", CHANNELS[c])));
    }
    let gains = IlluminantRgb::new(stat)?;
    Ok((divide_by(img, &gains), gains))
}

fn read_external(img: &LinearImage, path: &Path) -> Result<LinearImage> {
    let balanced = read_linear_image(path)?;
    if !img.same_size(&balanced) {
        return Err(Error::Shape(format!(
            "{}: balanced image is {}x{}, original is {}x{}",
            path.display(),
            balanced.width(),
            balanced.height(),
            img.width(),
            img.height()
        )));
    }
    Ok(balanced)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Illuminant from the per-pixel ratio `original / balanced` over the foreground.
///
/// Pixels whose balanced value is at most [`RATIO_EPSILON`] are excluded per
/// channel rather than clamped, so dark regions do not bias the estimate.
pub fn estimate_illuminant(
    original: &LinearImage,
    balanced: &LinearImage,
    mask: &ForegroundMask,
    aggregation: Aggregation,
) -> Result<IlluminantRgb> {
    if !original.same_size(balanced) || !original.same_size(mask) {
        return Err(Error::Shape(format!(
            "original {}x{}, balanced {}x{} and mask {}x{} must match",
            original.width(),
            original.height(),
            balanced.width(),
            balanced.height(),
            mask.width(),
            mask.height()
        )));
    }
    if mask.count() == 0 {
        return Err(Error::Degenerate("foreground mask is empty".into()));
    }
    let mut out = [0.0; 3];
    let mut ratios = Vec::with_capacity(mask.count());
    for (c, slot) in out.iter_mut().enumerate() {
        ratios.clear();
        for (i, fg) in mask.data().iter().enumerate() {
            let b = balanced.data()[3 * i + c];
            if *fg && b > RATIO_EPSILON {
                ratios.push(original.data()[3 * i + c] / b);
            }
        }
        if ratios.is_empty() {
            return Err(Error::Degenerate(format!(
                "every foreground pixel is too dark to estimate the {} channel",
                CHANNELS[c]
            )));
        }
        *slot = match aggregation {
            Aggregation::Median => median(&mut ratios),
            Aggregation::Mean => ratios.iter().sum::<f64>() / ratios.len() as f64,
        };
    }
    if let Some(c) = out.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Degenerate(format!("{} channel ratio aggregates to zero", CHANNELS[c])));
    }
    IlluminantRgb::new(out)
}
