//! Flat light adaptation and fine-tuning set construction.

mod canny;
mod downsample;
mod flat_light;
mod png;
mod raster;
mod variants;

pub use canny::{canny_edges, canny_plane, CannyParams, ThresholdMode};
pub use downsample::downsample_mask;
pub use flat_light::{apply_flat_light, Relit};
pub use png::{
    clipped_pixel_count, read_edge_map, read_linear_image, read_mask, write_edge_png, write_mask_png, write_srgb_png,
    BitDepth, MaskIngest,
};
pub use raster::{EdgeMap, ForegroundMask, LinearImage, Sized2d, SoftMask};
pub use variants::{
    augment_from_files, generate_variants, AugmentOptions, AugmentationManifest, AugmentationRecord, PromptTemplate,
    VariantSource, DEFAULT_MANIFEST_NAME,
};

use crate::color::IlluminantRgb;
use crate::error::Result;

/// Fraction of pixels whose edge label changes when `img` is relit by `illuminant`.
pub fn edge_disagreement_under_flat_light(
    img: &LinearImage,
    illuminant: &IlluminantRgb,
    params: &CannyParams,
) -> Result<f64> {
    let before = canny_edges(img, params)?;
    let after = canny_edges(&apply_flat_light(img, illuminant).image, params)?;
    before.disagreement(&after)
}
