//! Planckian locus by direct spectral integration.
//!
//! Blackbody spectra are integrated against the CIE 1931 2° standard observer
//! color-matching functions, tabulated at 1nm from 360nm to 830nm. The table
//! ships with the crate (`data/cie1931_2deg_cmf.txt`, three whitespace
//! separated columns x̄ ȳ z̄, one row per nanometre) and its SHA-256 is pinned
//! in [`CMF_TABLE_SHA256`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::convert::XYZ_TO_SRGB;
use super::preset::IlluminantRgb;
use crate::error::{Error, Result};

pub const CMF_WAVELENGTH_MIN: f64 = 360.0;
pub const CMF_WAVELENGTH_MAX: f64 = 830.0;
pub const CMF_WAVELENGTH_STEPS: usize = 471;

/// SHA-256 of the bundled color-matching table.
pub const CMF_TABLE_SHA256: &str = "984a85696202900b4c2ba7babf61cbf790a7cacb888ff85a310da68a5176f247";

const CMF_TABLE_TEXT: &str = include_str!("../../data/cie1931_2deg_cmf.txt");

// First and second radiation constants (CODATA c1, ITS-90 c2), SI units.
const PLANCK_C1: f64 = 3.741_771_852e-16;
const PLANCK_C2: f64 = 1.4388e-2;

const KELVIN_MIN: f64 = 1000.0;
const KELVIN_MAX: f64 = 20000.0;

/// Correlated color temperature in kelvin, restricted to [1000, 20000].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ColorTemperature(f64);

impl ColorTemperature {
    pub fn new(kelvin: f64) -> Result<Self> {
        if !(KELVIN_MIN..=KELVIN_MAX).contains(&kelvin) {
            return Err(Error::Domain(format!("color temperature {kelvin}K is outside [{KELVIN_MIN}, {KELVIN_MAX}]K")));
        }
        Ok(Self(kelvin))
    }

    pub fn kelvin(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for ColorTemperature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let k = f64::deserialize(d)?;
        ColorTemperature::new(k).map_err(serde::de::Error::custom)
    }
}

/// CIE 1931 xy chromaticity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chromaticity {
    x: f64,
    y: f64,
}

impl Chromaticity {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let valid = x > 0.0 && y > 0.0 && x + y < 1.0 && x.is_finite() && y.is_finite();
        if !valid {
            return Err(Error::Domain(format!("({x}, {y}) is not a valid xy chromaticity")));
        }
        Ok(Self { x, y })
    }

    pub fn x(self) -> f64 {
        self.x
    }

    pub fn y(self) -> f64 {
        self.y
    }

    /// Tristimulus values with luminance Y = 1.
    pub fn to_xyz(self) -> [f64; 3] {
        [self.x / self.y, 1.0, (1.0 - self.x - self.y) / self.y]
    }
}

/// The parsed color-matching table, one `[x̄, ȳ, z̄]` row per nanometre.
pub fn cmf_table() -> &'static [[f64; 3]] {
    static TABLE: OnceLock<Vec<[f64; 3]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rows: Vec<[f64; 3]> = CMF_TABLE_TEXT
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let mut cols =
                    line.split_whitespace().map(|v| v.parse::<f64>().expect("bundled CMF table holds only numbers"));
                let mut next = || cols.next().expect("bundled CMF table has three columns");
                [next(), next(), next()]
            })
            .collect();
        assert_eq!(rows.len(), CMF_WAVELENGTH_STEPS, "bundled CMF table is truncated");
        rows
    })
}

/// Hex SHA-256 of the bundled color-matching table as compiled in.
pub fn cmf_table_checksum() -> String {
    hex::encode(Sha256::digest(CMF_TABLE_TEXT.as_bytes()))
}

/// Relative spectral radiance of a blackbody at `wavelength_nm`.
///
/// Planck's law `c1 λ⁻⁵ / (exp(c2 / λT) − 1)`. Only the spectral shape
/// matters downstream, every consumer normalizes the result.
pub fn planck_spectral_radiance(temperature: ColorTemperature, wavelength_nm: f64) -> Result<f64> {
    if !(CMF_WAVELENGTH_MIN..=CMF_WAVELENGTH_MAX).contains(&wavelength_nm) {
        return Err(Error::Domain(format!(
            "wavelength {wavelength_nm}nm is outside [{CMF_WAVELENGTH_MIN}, {CMF_WAVELENGTH_MAX}]nm"
        )));
    }
    Ok(planck(temperature.kelvin(), wavelength_nm))
}

fn planck(kelvin: f64, wavelength_nm: f64) -> f64 {
    let lambda = wavelength_nm * 1e-9;
    PLANCK_C1 / (lambda.powi(5) * (PLANCK_C2 / (lambda * kelvin)).exp_m1())
}

/// Chromaticity of an arbitrary spectrum sampled at the table wavelengths.
///
/// `spd` must hold exactly [`CMF_WAVELENGTH_STEPS`] nonnegative samples.
pub fn spectrum_to_chromaticity(spd: &[f64]) -> Result<Chromaticity> {
    if spd.len() != CMF_WAVELENGTH_STEPS {
        return Err(Error::Shape(format!("spectrum has {} samples, expected {CMF_WAVELENGTH_STEPS}", spd.len())));
    }
    let mut xyz = [0.0f64; 3];
    for (power, cmf) in spd.iter().zip(cmf_table()) {
        for (acc, weight) in xyz.iter_mut().zip(cmf) {
            *acc += power * weight;
        }
    }
    let sum = xyz[0] + xyz[1] + xyz[2];
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::Degenerate("spectrum integrates to zero".into()));
    }
    Chromaticity::new(xyz[0] / sum, xyz[1] / sum)
}

/// Chromaticity of the Planckian radiator at `temperature`.
pub fn kelvin_to_chromaticity(temperature: ColorTemperature) -> Chromaticity {
    let spd: Vec<f64> =
        (0..CMF_WAVELENGTH_STEPS).map(|i| planck(temperature.kelvin(), CMF_WAVELENGTH_MIN + i as f64)).collect();
    spectrum_to_chromaticity(&spd).expect("blackbody spectra are positive across the visible band")
}

/// Linear-sRGB diagonal for a chromaticity, normalized to green = 1.
pub fn chromaticity_to_illuminant_rgb(c: Chromaticity) -> Result<IlluminantRgb> {
    let xyz = c.to_xyz();
    let mut rgb = [0.0; 3];
    for (out, row) in rgb.iter_mut().zip(XYZ_TO_SRGB.iter()) {
        *out = row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2];
    }
    for (channel, value) in ["red", "green", "blue"].into_iter().zip(rgb) {
        if !(value > 0.0) {
            return Err(Error::OutOfGamut { channel, value });
        }
    }
    IlluminantRgb::new(rgb)
}
