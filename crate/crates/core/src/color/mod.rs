//! Colorimetric foundation: blackbody illuminants, the seven illuminant
//! presets, sRGB/CIELAB conversions and the scalar color metrics.
//!
//! Everything here is a pure function of its inputs. The only shared state is
//! the parsed color-matching table and the preset gain cache, both built once
//! on first use and immutable afterwards.

mod convert;
mod locus;
mod metrics;
mod preset;

pub use convert::{
    linear_srgb_to_lab, linear_srgb_to_xyz, luminance, srgb_decode, srgb_encode, xyz_to_lab, LabColor, D65_WHITE_XYZ,
    SRGB_TO_XYZ, XYZ_TO_SRGB,
};
pub use locus::{
    chromaticity_to_illuminant_rgb, cmf_table, cmf_table_checksum, kelvin_to_chromaticity, planck_spectral_radiance,
    spectrum_to_chromaticity, Chromaticity, ColorTemperature, CMF_TABLE_SHA256, CMF_WAVELENGTH_MAX, CMF_WAVELENGTH_MIN,
    CMF_WAVELENGTH_STEPS,
};
pub use metrics::{angular_error, lab_mse};
pub use preset::{preset_to_illuminant_rgb, IlluminantPreset, IlluminantRgb, PresetId};
