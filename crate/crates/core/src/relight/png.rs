//! PNG ingest and export. Color images on disk are sRGB-encoded (8 or 16 bit);
//! masks and edge maps are single-channel `{0, 255}`.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};

use super::raster::{EdgeMap, ForegroundMask, LinearImage};
use crate::color::{srgb_decode, srgb_encode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BitDepth {
    #[default]
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl BitDepth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::Domain(format!("unsupported PNG bit depth {other}; use 8 or 16"))),
        }
    }
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image { path: path.into(), source },
    })
}

fn is_sixteen_bit(img: &DynamicImage) -> bool {
    matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    )
}

/// Reads an sRGB-encoded PNG into linear RGB. Alpha is discarded.
pub fn read_linear_image(path: &Path) -> Result<LinearImage> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = if is_sixteen_bit(&img) {
        img.to_rgb16().into_raw().into_iter().map(|v| srgb_decode(v as f64 / 65535.0)).collect()
    } else {
        let lut: Vec<f64> = (0..256).map(|v| srgb_decode(v as f64 / 255.0)).collect();
        img.to_rgb8().into_raw().into_iter().map(|v| lut[v as usize]).collect()
    };
    LinearImage::new(w, h, data)
}

/// Number of pixels with at least one channel above 1 (these clip at encode time).
pub fn clipped_pixel_count(img: &LinearImage) -> u64 {
    img.pixels().filter(|p| p.iter().any(|v| *v > 1.0)).count() as u64
}

fn quantize(v: f64, max: f64) -> f64 {
    (srgb_encode(v) * max).round()
}

/// sRGB-encodes and writes `img`; returns the clipped-pixel count.
pub fn write_srgb_png(path: &Path, img: &LinearImage, depth: BitDepth) -> Result<u64> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let result = match depth {
        BitDepth::Eight => {
            let raw: Vec<u8> = img.data().iter().map(|v| quantize(*v, 255.0) as u8).collect();
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, raw).expect("buffer sized from image").save(path)
        }
        BitDepth::Sixteen => {
            let raw: Vec<u16> = img.data().iter().map(|v| quantize(*v, 65535.0) as u16).collect();
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, raw).expect("buffer sized from image").save(path)
        }
    };
    result.map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image { path: path.into(), source },
    })?;
    Ok(clipped_pixel_count(img))
}

/// A mask as read from disk.
#[derive(Debug, Clone)]
pub struct MaskIngest {
    pub mask: ForegroundMask,
    /// True when the file held values other than fully off / fully on.
    pub was_soft: bool,
}

/// Reads a single-channel (or RGB, first channel) mask, binarizing at 0.5.
pub fn read_mask(path: &Path) -> Result<MaskIngest> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = if is_sixteen_bit(&img) {
        img.to_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()
    } else {
        img.to_luma8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()
    };
    let was_soft = values.iter().any(|v| *v != 0.0 && *v != 1.0);
    Ok(MaskIngest { mask: ForegroundMask::from_soft(w, h, &values)?, was_soft })
}

fn write_binary(path: &Path, width: usize, height: usize, data: &[bool]) -> Result<()> {
    let raw: Vec<u8> = data.iter().map(|v| if *v { 255 } else { 0 }).collect();
    let img: GrayImage =
        ImageBuffer::<Luma<u8>, _>::from_raw(width as u32, height as u32, raw).expect("buffer sized from map");
    img.save(path).map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image { path: path.into(), source },
    })
}

pub fn write_mask_png(path: &Path, mask: &ForegroundMask) -> Result<()> {
    write_binary(path, mask.width(), mask.height(), mask.data())
}

pub fn write_edge_png(path: &Path, edges: &EdgeMap) -> Result<()> {
    write_binary(path, edges.width(), edges.height(), edges.data())
}

pub fn read_edge_map(path: &Path) -> Result<EdgeMap> {
    let m = read_mask(path)?.mask;
    EdgeMap::new(m.width(), m.height(), m.data().to_vec())
}
