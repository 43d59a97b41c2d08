use crate::color::luminance;
use crate::error::{Error, Result};

/// Row-major linear-sRGB image, three interleaved channels per pixel.
///
/// Values are nonnegative and finite. They may exceed 1 after relighting;
/// clamping happens only at encode time.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LinearImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("image must be non-empty, got {width}x{height}")));
        }
        if data.len() != width * height * 3 {
            return Err(Error::Shape(format!(
                "{width}x{height} RGB image needs {} values, got {}",
                width * height * 3,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Invalid(format!("pixel value {v} is not finite and nonnegative")));
        }
        Ok(Self { width, height, data })
    }

    /// An image with every pixel set to `rgb`.
    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Self::new(width, height, data)
    }

    /// Builds an image from a per-pixel function of `(x, y)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Applies `f` to every pixel. The result is re-validated.
    pub fn map_pixels(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self> {
        let data = self.pixels().flat_map(f).collect();
        Self::new(self.width, self.height, data)
    }

    /// Rec. 709 luminance plane, row-major.
    pub fn luminance(&self) -> Vec<f64> {
        self.pixels().map(luminance).collect()
    }

    pub fn same_size<T: Sized2d>(&self, other: &T) -> bool {
        self.width == other.width() && self.height == other.height()
    }
}

/// Anything with a pixel grid.
pub trait Sized2d {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
}

impl Sized2d for LinearImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
}

macro_rules! binary_map {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct $name {
            width: usize,
            height: usize,
            data: Vec<bool>,
        }

        impl $name {
            pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
                if width == 0 || height == 0 || data.len() != width * height {
                    return Err(Error::Shape(format!(
                        "{width}x{height} map needs {} values, got {}",
                        width * height,
                        data.len()
                    )));
                }
                Ok(Self { width, height, data })
            }

            pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
                let data = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
                Self::new(width, height, data)
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn data(&self) -> &[bool] {
                &self.data
            }

            pub fn get(&self, x: usize, y: usize) -> bool {
                self.data[y * self.width + x]
            }

            /// Number of set pixels.
            pub fn count(&self) -> usize {
                self.data.iter().filter(|v| **v).count()
            }
        }

        impl Sized2d for $name {
            fn width(&self) -> usize {
                self.width
            }
            fn height(&self) -> usize {
                self.height
            }
        }
    };
}

binary_map!(
    /// Binary foreground mask of the concept.
    ForegroundMask
);

binary_map!(
    /// Binary Canny edge map.
    EdgeMap
);

impl ForegroundMask {
    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    /// Binarizes soft values in [0, 1] at 0.5.
    pub fn from_soft(width: usize, height: usize, soft: &[f64]) -> Result<Self> {
        Self::new(width, height, soft.iter().map(|v| *v >= 0.5).collect())
    }
}

impl EdgeMap {
    /// Fraction of pixels on which two maps of equal size disagree.
    pub fn disagreement(&self, other: &EdgeMap) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape(format!(
                "edge maps differ in size: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let differ = self.data.iter().zip(&other.data).filter(|(a, b)| a != b).count();
        Ok(differ as f64 / self.data.len() as f64)
    }
}

/// Mask with fractional coverage in [0, 1], e.g. after area downsampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl SoftMask {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} mask needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invalid(format!("mask value {v} is outside [0, 1]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

impl From<&ForegroundMask> for SoftMask {
    fn from(mask: &ForegroundMask) -> Self {
        let data = mask.data().iter().map(|v| if *v { 1.0 } else { 0.0 }).collect();
        SoftMask { width: mask.width(), height: mask.height(), data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_validation() {
        assert!(LinearImage::new(2, 2, vec![0.0; 11]).is_err());
        assert!(LinearImage::new(0, 2, vec![]).is_err());
        assert!(LinearImage::new(1, 1, vec![0.1, -0.1, 0.0]).is_err());
        assert!(LinearImage::new(1, 1, vec![0.1, f64::NAN, 0.0]).is_err());
        let img = LinearImage::new(1, 1, vec![0.1, 2.0, 0.0]).unwrap();
        assert_eq!(img.pixel(0, 0), [0.1, 2.0, 0.0]);
    }

    #[test]
    fn soft_masks_binarize_at_one_half() {
        let m = ForegroundMask::from_soft(4, 1, &[0.0, 0.49, 0.5, 1.0]).unwrap();
        assert_eq!(m.data(), &[false, false, true, true]);
        assert!(SoftMask::new(1, 1, vec![1.5]).is_err());
    }
}
