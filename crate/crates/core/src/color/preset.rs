use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::locus::{chromaticity_to_illuminant_rgb, kelvin_to_chromaticity, ColorTemperature};
use crate::error::{Error, Result};

/// Von Kries diagonal in linear sRGB primaries, normalized so green is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct IlluminantRgb([f64; 3]);

impl IlluminantRgb {
    pub const IDENTITY: IlluminantRgb = IlluminantRgb([1.0, 1.0, 1.0]);

    /// Builds a gain vector from any positive triple, rescaling it to green = 1.
    pub fn new(rgb: [f64; 3]) -> Result<Self> {
        if rgb.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!("illuminant {rgb:?} must be positive and finite")));
        }
        let g = rgb[1];
        let out = [rgb[0] / g, 1.0, rgb[2] / g];
        if out.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!("illuminant {rgb:?} cannot be normalized")));
        }
        Ok(Self(out))
    }

    pub fn gains(&self) -> [f64; 3] {
        self.0
    }

    pub fn red(&self) -> f64 {
        self.0[0]
    }

    pub fn blue(&self) -> f64 {
        self.0[2]
    }

    /// The inverse diagonal, again with green = 1.
    pub fn reciprocal(&self) -> Self {
        Self([1.0 / self.0[0], 1.0, 1.0 / self.0[2]])
    }

    /// Componentwise product (sequential application of two diagonals).
    pub fn compose(&self, other: &IlluminantRgb) -> Self {
        Self([self.0[0] * other.0[0], 1.0, self.0[2] * other.0[2]])
    }
}

impl<'de> Deserialize<'de> for IlluminantRgb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = <[f64; 3]>::deserialize(d)?;
        IlluminantRgb::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Preset identifier. `c1`..`c7` are the Planckian presets; `c0` is the
/// unmodified (white) illuminant, used only for optional identity records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresetId {
    C0,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
}

impl PresetId {
    /// The seven Planckian presets in index order.
    pub const CANONICAL: [PresetId; 7] =
        [PresetId::C1, PresetId::C2, PresetId::C3, PresetId::C4, PresetId::C5, PresetId::C6, PresetId::C7];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetId::C0 => "c0",
            PresetId::C1 => "c1",
            PresetId::C2 => "c2",
            PresetId::C3 => "c3",
            PresetId::C4 => "c4",
            PresetId::C5 => "c5",
            PresetId::C6 => "c6",
            PresetId::C7 => "c7",
        }
    }

    /// The Planckian preset behind this id; `None` for `c0`.
    pub fn preset(self) -> Option<IlluminantPreset> {
        let (name, kelvin) = match self {
            PresetId::C0 => return None,
            PresetId::C1 => (Some("Tungsten"), 2850.0),
            PresetId::C2 => (None, 3300.0),
            PresetId::C3 => (Some("Fluorescent"), 3800.0),
            PresetId::C4 => (None, 4500.0),
            PresetId::C5 => (Some("Cloudy"), 6500.0),
            PresetId::C6 => (None, 7000.0),
            PresetId::C7 => (Some("Shade"), 7500.0),
        };
        Some(IlluminantPreset {
            id: self,
            name,
            temperature: ColorTemperature::new(kelvin).expect("preset temperatures are in range"),
        })
    }

    /// Ground-truth gains: the preset's Planckian diagonal, or identity for `c0`.
    pub fn gains(self) -> IlluminantRgb {
        match self.preset() {
            Some(p) => preset_to_illuminant_rgb(&p),
            None => IlluminantRgb::IDENTITY,
        }
    }

    /// Parses a comma-separated list such as `c1,c3,c5,c7`.
    pub fn parse_list(s: &str) -> Result<Vec<PresetId>> {
        s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::parse).collect()
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = match s {
            "c0" => PresetId::C0,
            "c1" => PresetId::C1,
            "c2" => PresetId::C2,
            "c3" => PresetId::C3,
            "c4" => PresetId::C4,
            "c5" => PresetId::C5,
            "c6" => PresetId::C6,
            "c7" => PresetId::C7,
            other => {
                return Err(Error::Domain(format!(
                    "unknown preset '{other}'; valid ids are c1, c2, c3, c4, c5, c6, c7 (and c0 for the identity illuminant)"
                )))
            }
        };
        Ok(id)
    }
}

impl Serialize for PresetId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PresetId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One of the seven camera-style illuminant presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlluminantPreset {
    pub id: PresetId,
    pub name: Option<&'static str>,
    pub temperature: ColorTemperature,
}

impl IlluminantPreset {
    pub fn all() -> [IlluminantPreset; 7] {
        PresetId::CANONICAL.map(|id| id.preset().expect("canonical ids carry a temperature"))
    }
}

/// Green-normalized linear-sRGB gains of a preset. Computed once per process.
pub fn preset_to_illuminant_rgb(preset: &IlluminantPreset) -> IlluminantRgb {
    static CACHE: OnceLock<[IlluminantRgb; 7]> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        IlluminantPreset::all().map(|p| {
            chromaticity_to_illuminant_rgb(kelvin_to_chromaticity(p.temperature))
                .expect("every preset lies inside the sRGB gamut")
        })
    });
    match preset.id {
        PresetId::C0 => IlluminantRgb::IDENTITY,
        id => cache[id as usize - 1],
    }
}
