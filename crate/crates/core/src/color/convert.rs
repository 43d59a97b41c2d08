use serde::{Deserialize, Serialize};

/// Linear sRGB (D65, IEC 61966-2-1 primaries) to CIE XYZ.
pub const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

/// CIE XYZ to linear sRGB.
pub const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

/// Reference white for CIELAB: the image of linear (1, 1, 1) under [`SRGB_TO_XYZ`].
pub const D65_WHITE_XYZ: [f64; 3] = [
    0.412_456_4 + 0.357_576_1 + 0.180_437_5,
    0.212_672_9 + 0.715_152_2 + 0.072_175_0,
    0.019_333_9 + 0.119_192_0 + 0.950_304_1,
];

// Rec. 709 luma weights, applied to linear RGB.
const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub fn to_array(self) -> [f64; 3] {
        [self.l, self.a, self.b]
    }
}

/// sRGB transfer function, linear to encoded. Inputs are clamped into [0, 1].
pub fn srgb_encode(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Inverse of [`srgb_encode`]. Inputs are clamped into [0, 1].
pub fn srgb_decode(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.040_45 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn luminance(rgb: [f64; 3]) -> f64 {
    LUMA[0] * rgb[0] + LUMA[1] * rgb[1] + LUMA[2] * rgb[2]
}

pub fn linear_srgb_to_xyz(rgb: [f64; 3]) -> [f64; 3] {
    let m = &SRGB_TO_XYZ;
    [
        m[0][0] * rgb[0] + m[0][1] * rgb[1] + m[0][2] * rgb[2],
        m[1][0] * rgb[0] + m[1][1] * rgb[1] + m[1][2] * rgb[2],
        m[2][0] * rgb[0] + m[2][1] * rgb[1] + m[2][2] * rgb[2],
    ]
}

pub fn xyz_to_lab(xyz: [f64; 3]) -> LabColor {
    const DELTA: f64 = 6.0 / 29.0;
    fn f(t: f64) -> f64 {
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    }
    let fx = f(xyz[0] / D65_WHITE_XYZ[0]);
    let fy = f(xyz[1] / D65_WHITE_XYZ[1]);
    let fz = f(xyz[2] / D65_WHITE_XYZ[2]);
    LabColor { l: 116.0 * fy - 16.0, a: 500.0 * (fx - fy), b: 200.0 * (fy - fz) }
}

/// CIELAB (D65 white) of a linear sRGB triple.
pub fn linear_srgb_to_lab(rgb: [f64; 3]) -> LabColor {
    xyz_to_lab(linear_srgb_to_xyz(rgb))
}
