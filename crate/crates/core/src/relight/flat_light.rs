use super::png::clipped_pixel_count;
use super::raster::LinearImage;
use crate::color::IlluminantRgb;

/// Output of [`apply_flat_light`].
#[derive(Debug, Clone, PartialEq)]
pub struct Relit {
    pub image: LinearImage,
    /// Pixels with any channel above 1, which will clip when encoded.
    pub clipped_pixel_count: u64,
}

/// Von Kries flat light adaptation: every pixel is multiplied by the same
/// diagonal matrix `diag(gains)`.
pub fn apply_flat_light(img: &LinearImage, illuminant: &IlluminantRgb) -> Relit {
    let g = illuminant.gains();
    let image = img
        .map_pixels(|p| [p[0] * g[0], p[1] * g[1], p[2] * g[2]])
        .expect("positive gains keep pixels finite and nonnegative");
    let clipped_pixel_count = clipped_pixel_count(&image);
    Relit { image, clipped_pixel_count }
}
