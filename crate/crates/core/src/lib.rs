//! Illuminant tooling for prompt-space illumination control.
//!
//! - [`color`]: Planckian presets, sRGB/CIELAB conversions, color metrics.
//! - [`relight`]: flat light adaptation, Canny edge maps, augmentation manifests.
//! - [`loss`]: the masked reconstruction loss and its analytic gradient.
//! - [`eval`]: white balancing, illuminant estimation, SSIM, reports, Thurstone scaling.
//! - [`probe`]: text-embedding PCA and silhouette analysis.

pub mod color;
pub mod error;
pub mod eval;
pub mod loss;
pub mod parallel;
pub mod plot;
pub mod probe;
pub mod relight;

pub use error::{Error, Result};
