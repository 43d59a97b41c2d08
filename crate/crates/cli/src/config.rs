//! Tool-wide defaults. A JSON file passed with `--config` overrides any subset
//! of them; command-line flags override the file.

use std::path::{Path, PathBuf};

use lumikit_core::color::PresetId;
use lumikit_core::eval::WbMethod;
use lumikit_core::loss::{MrlParams, DEFAULT_LAMBDA};
use lumikit_core::relight::{CannyParams, ThresholdMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub canny_low: f64,
    pub canny_high: f64,
    pub canny_sigma: f64,
    pub canny_threshold_mode: ThresholdMode,
    pub wb_method: WbMethod,
    pub lambda: f64,
    pub presets: Vec<PresetId>,
    /// Where commands put their outputs when `--out` is not given.
    pub output_dir: PathBuf,
    /// Write plots into `<output_dir>/plots` even without `--plots`.
    pub plots: bool,
    pub seed: u64,
}

impl Default for ToolConfig {
    fn default() -> Self {
        let canny = CannyParams::default();
        Self {
            canny_low: canny.low,
            canny_high: canny.high,
            canny_sigma: canny.sigma,
            canny_threshold_mode: canny.mode,
            wb_method: WbMethod::default(),
            lambda: DEFAULT_LAMBDA,
            presets: PresetId::CANONICAL.to_vec(),
            output_dir: PathBuf::from("lumikit-out"),
            plots: false,
            seed: 42,
        }
    }
}

impl ToolConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| lumikit_core::Error::Io { path: path.to_path_buf(), source })?;
        let config: ToolConfig = serde_json::from_str(&text)
            .map_err(|e| lumikit_core::Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        MrlParams::new(self.lambda)?;
        self.canny().validate()?;
        if self.presets.is_empty() {
            return Err(CliError::Usage("config lists no presets".into()));
        }
        Ok(())
    }

    pub fn canny(&self) -> CannyParams {
        CannyParams {
            low: self.canny_low,
            high: self.canny_high,
            sigma: self.canny_sigma,
            mode: self.canny_threshold_mode,
        }
    }

    pub fn plot_dir(&self) -> PathBuf {
        self.output_dir.join("plots")
    }
}
