"""Golden SSIM values from scikit-image for the SSIM fixture pairs.

Each pair is (fixture image, deterministic transform of it). Images are
decoded from 8-bit sRGB to linear RGB, reduced to Rec. 709 luminance and
compared with Gaussian-weighted SSIM (sigma 1.5, 11x11, K1 0.01, K2 0.03,
data range 1, population covariances). scikit-image averages the SSIM map
over the border-cropped region, i.e. over every window that fits inside the
image. The masked case averages the same map over foreground window centres.

Run once; writes fixtures/ssim_golden.json.
"""
import json
import pathlib

import numpy as np
from PIL import Image
from skimage.metrics import structural_similarity

FIX = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
CMF = pathlib.Path(__file__).resolve().parents[2] / "data" / "cie1931_2deg_cmf.txt"
W = np.array([0.2126, 0.7152, 0.0722])


def load(name):
    v = np.asarray(Image.open(FIX / name).convert("RGB"), dtype=float) / 255.0
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def lum(rgb):
    return rgb @ W


def tungsten_gains():
    cmf = np.loadtxt(CMF)
    lam = np.arange(360, 831) * 1e-9
    s = 1 / (lam**5 * np.expm1(1.4388e-2 / (lam * 2850.0)))
    X, Y, Z = (s[:, None] * cmf).sum(0)
    x, y = X / (X + Y + Z), Y / (X + Y + Z)
    m = np.array([[3.2404542, -1.5371385, -0.4985314],
                  [-0.9692660, 1.8760108, 0.0415560],
                  [0.0556434, -0.2040259, 1.0572252]])
    rgb = m @ np.array([x / y, 1.0, (1 - x - y) / y])
    return rgb / rgb[1]


def shift_right(rgb, n):
    out = np.empty_like(rgb)
    out[:, n:] = rgb[:, :-n]
    out[:, :n] = rgb[:, :1]
    return out


def ssim(a, b):
    return structural_similarity(a, b, gaussian_weights=True, sigma=1.5,
                                 use_sample_covariance=False, data_range=1.0)


def masked_ssim(a, b, mask):
    _, smap = structural_similarity(a, b, gaussian_weights=True, sigma=1.5,
                                    use_sample_covariance=False, data_range=1.0, full=True)
    pad = 5
    valid = np.zeros_like(mask)
    valid[pad:-pad, pad:-pad] = True
    return float(smap[valid & mask].mean())


astro, coffee, chelsea = load("astronaut.png"), load("coffee.png"), load("chelsea.png")
cases = {
    "astronaut_half_contrast": ssim(lum(astro), lum(0.5 * astro + 0.25)),
    "coffee_gamma_1_25": ssim(lum(coffee), lum(coffee ** 1.25)),
    "chelsea_shift_2": ssim(lum(chelsea), lum(shift_right(chelsea, 2))),
    "astronaut_tungsten": ssim(lum(astro), lum(astro * tungsten_gains())),
    "chelsea_swap_red_blue": ssim(lum(chelsea), lum(chelsea[:, :, ::-1])),
}
h, w = astro.shape[:2]
mask = np.zeros((h, w), dtype=bool)
mask[:, : w // 2] = True
cases["astronaut_half_contrast_left_mask"] = masked_ssim(lum(astro), lum(0.5 * astro + 0.25), mask)

with open(FIX / "ssim_golden.json", "w") as f:
    json.dump(cases, f, indent=2)
    f.write("\n")
print(json.dumps(cases, indent=2))
