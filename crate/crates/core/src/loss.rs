//! Masked reconstruction loss over latent-resolution tensors.
//!
//! For a per-element squared residual `r`, a soft mask `M` broadcast across
//! channels and a foreground weight `λ`:
//!
//! ```text
//! w = (1 − λ)(1 − M) + λM
//! L = (1/N) Σ w·r            N = H·W·C
//! ∂L/∂pred = 2·w·(pred − target) / N
//! ```
//!
//! The kernel works on plain row-major `H×W×C` buffers so any trainer can wrap
//! it. All reductions are sequential in index order.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relight::SoftMask;

/// Foreground weight that performed best in the λ ablation.
pub const DEFAULT_LAMBDA: f64 = 0.2;

/// Row-major `height × width × channels` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Shape(format!("tensor {height}x{width}x{channels} is empty")));
        }
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "tensor {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("tensor holds non-finite values".into()));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

fn same_shape(a: &Tensor3, b: &Tensor3) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("tensor shapes differ: {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// Per-element squared error, kept unreduced.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMap(Tensor3);

impl ResidualMap {
    /// Wraps precomputed residuals; every entry must be nonnegative.
    pub fn from_tensor(t: Tensor3) -> Result<Self> {
        if t.data.iter().any(|v| *v < 0.0) {
            return Err(Error::Invalid("residuals must be nonnegative".into()));
        }
        Ok(Self(t))
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.0
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.0.shape()
    }

    pub fn data(&self) -> &[f64] {
        &self.0.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrlParams {
    lambda: f64,
}

impl MrlParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda {lambda} is outside [0, 1]")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Weight of one element with mask coverage `m`.
    pub fn weight(&self, m: f64) -> f64 {
        (1.0 - self.lambda) * (1.0 - m) + self.lambda * m
    }
}

impl Default for MrlParams {
    fn default() -> Self {
        Self { lambda: DEFAULT_LAMBDA }
    }
}

pub fn residual_map(pred: &Tensor3, target: &Tensor3) -> Result<ResidualMap> {
    same_shape(pred, target)?;
    let data = pred.data.iter().zip(&target.data).map(|(p, t)| (p - t) * (p - t)).collect();
    Ok(ResidualMap(Tensor3 { data, ..*pred }))
}

fn check_mask(shape: (usize, usize, usize), mask: &SoftMask) -> Result<()> {
    if (mask.height(), mask.width()) != (shape.0, shape.1) {
        return Err(Error::Shape(format!(
            "mask is {}x{} but tensor is {}x{}",
            mask.height(),
            mask.width(),
            shape.0,
            shape.1
        )));
    }
    Ok(())
}

/// Iterates `(element index, mask value)` with the mask broadcast across channels.
fn broadcast<'a>(shape: (usize, usize, usize), mask: &'a SoftMask) -> impl Iterator<Item = f64> + 'a {
    let c = shape.2;
    mask.data().iter().flat_map(move |m| std::iter::repeat_n(*m, c))
}

/// Masked reconstruction loss, averaged over all `H·W·C` elements.
pub fn mrl(residual: &ResidualMap, mask: &SoftMask, params: &MrlParams) -> Result<f64> {
    check_mask(residual.shape(), mask)?;
    let n = residual.data().len() as f64;
    let sum: f64 =
        residual.data().iter().zip(broadcast(residual.shape(), mask)).map(|(r, m)| params.weight(m) * r).sum();
    Ok(sum / n)
}

/// Analytic gradient of [`mrl`]`(residual_map(pred, target))` with respect to `pred`.
pub fn mrl_gradient(pred: &Tensor3, target: &Tensor3, mask: &SoftMask, params: &MrlParams) -> Result<Tensor3> {
    same_shape(pred, target)?;
    check_mask(pred.shape(), mask)?;
    let n = pred.len() as f64;
    let data = pred
        .data
        .iter()
        .zip(&target.data)
        .zip(broadcast(pred.shape(), mask))
        .map(|((p, t), m)| 2.0 * params.weight(m) * (p - t) / n)
        .collect();
    Ok(Tensor3 { data, ..*pred })
}

/// Region summary that determines the loss for every λ.
///
/// `fg_residual`/`bg_residual` are mask-weighted mean residuals of each
/// region and `fg_fraction` is the foreground share of the element mass, so
/// `L(λ) = (1 − λ)·bg_residual·(1 − fg_fraction) + λ·fg_residual·fg_fraction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionFixture {
    pub fg_residual: f64,
    pub bg_residual: f64,
    pub fg_fraction: f64,
}

impl RegionFixture {
    pub fn new(fg_residual: f64, bg_residual: f64, fg_fraction: f64) -> Result<Self> {
        if !(fg_residual >= 0.0 && bg_residual >= 0.0 && fg_residual.is_finite() && bg_residual.is_finite()) {
            return Err(Error::Domain("region residuals must be finite and nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&fg_fraction) {
            return Err(Error::Domain(format!("foreground fraction {fg_fraction} is outside [0, 1]")));
        }
        Ok(Self { fg_residual, bg_residual, fg_fraction })
    }

    /// Summarizes an actual residual map and mask.
    pub fn from_maps(residual: &ResidualMap, mask: &SoftMask) -> Result<Self> {
        check_mask(residual.shape(), mask)?;
        let (mut fg_mass, mut bg_mass, mut fg_sum, mut bg_sum) = (0.0, 0.0, 0.0, 0.0);
        for (r, m) in residual.data().iter().zip(broadcast(residual.shape(), mask)) {
            fg_mass += m;
            bg_mass += 1.0 - m;
            fg_sum += m * r;
            bg_sum += (1.0 - m) * r;
        }
        let mean = |s: f64, mass: f64| if mass > 0.0 { s / mass } else { 0.0 };
        let n = residual.data().len() as f64;
        Self::new(mean(fg_sum, fg_mass), mean(bg_sum, bg_mass), (fg_mass / n).clamp(0.0, 1.0))
    }

    /// Foreground term `Σ M·r / N`.
    pub fn foreground_loss(&self) -> f64 {
        self.fg_residual * self.fg_fraction
    }

    /// Background term `Σ (1 − M)·r / N`.
    pub fn background_loss(&self) -> f64 {
        self.bg_residual * (1.0 - self.fg_fraction)
    }

    pub fn loss(&self, lambda: f64) -> f64 {
        (1.0 - lambda) * self.background_loss() + lambda * self.foreground_loss()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub loss: f64,
}

/// Loss at each λ, in the order given.
pub fn lambda_sweep(fixture: &RegionFixture, lambdas: &[f64]) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(Error::Domain("lambda sweep needs at least one value".into()));
    }
    lambdas
        .iter()
        .map(|&l| {
            let p = MrlParams::new(l)?;
            Ok(SweepRow { lambda: p.lambda(), loss: fixture.loss(p.lambda()) })
        })
        .collect()
}

/// λ values of the published ablation table, top to bottom.
pub const ABLATION_LAMBDAS: [f64; 6] = [1.0, 0.8, 0.6, 0.4, 0.2, 0.0];

/// Outcome of comparing the analytic gradient with central differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub trials: usize,
    pub elements_checked: usize,
    pub max_relative_error: f64,
    pub step: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Relative error used by the gradient check: `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central finite difference of the loss for element `i` of `pred`.
pub fn finite_difference(
    pred: &Tensor3,
    target: &Tensor3,
    mask: &SoftMask,
    params: &MrlParams,
    i: usize,
    step: f64,
) -> Result<f64> {
    let mut probe = pred.clone();
    probe.data[i] = pred.data[i] + step;
    let up = mrl(&residual_map(&probe, target)?, mask, params)?;
    probe.data[i] = pred.data[i] - step;
    let down = mrl(&residual_map(&probe, target)?, mask, params)?;
    Ok((up - down) / (2.0 * step))
}

/// Random `h×w×c` prediction, target and soft mask, plus a λ, from one seed.
pub fn random_case(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> (Tensor3, Tensor3, SoftMask, MrlParams) {
    let n = h * w * c;
    let pred = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let target = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mask = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let lambda = rng.gen_range(0.0..=1.0);
    (
        Tensor3::new(h, w, c, pred).expect("sized by construction"),
        Tensor3::new(h, w, c, target).expect("sized by construction"),
        SoftMask::new(w, h, mask).expect("values drawn from [0, 1]"),
        MrlParams::new(lambda).expect("lambda drawn from [0, 1]"),
    )
}

/// Analytic vs central-difference gradients on `trials` random `8×8×4` cases.
pub fn gradient_check(trials: usize, seed: u64, step: f64, tolerance: f64) -> Result<GradientCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..trials {
        let (pred, target, mask, params) = random_case(&mut rng, 8, 8, 4);
        let grad = mrl_gradient(&pred, &target, &mask, &params)?;
        for i in 0..pred.len() {
            let numeric = finite_difference(&pred, &target, &mask, &params, i, step)?;
            worst = worst.max(relative_error(grad.data[i], numeric));
            checked += 1;
        }
    }
    Ok(GradientCheck {
        trials,
        elements_checked: checked,
        max_relative_error: worst,
        step,
        tolerance,
        passed: worst < tolerance,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorHeader {
    height: usize,
    width: usize,
    channels: usize,
    dtype: String,
}

/// Reads a tensor file: one JSON header line
/// (`{"height":H,"width":W,"channels":C,"dtype":"f32le"}`) followed by
/// `H·W·C` little-endian `f32` values.
pub fn read_tensor_file(path: &Path) -> Result<Tensor3> {
    let mut bytes = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    let newline = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| Error::parse(path, "missing header line"))?;
    let header: TensorHeader =
        serde_json::from_slice(&bytes[..newline]).map_err(|e| Error::parse(path, format!("bad header: {e}")))?;
    if header.dtype != "f32le" {
        return Err(Error::parse(path, format!("unsupported dtype '{}'", header.dtype)));
    }
    let body = &bytes[newline + 1..];
    let expected = header.height * header.width * header.channels * 4;
    if body.len() != expected {
        return Err(Error::parse(path, format!("payload is {} bytes, header implies {expected}", body.len())));
    }
    let data = body.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    Tensor3::new(header.height, header.width, header.channels, data).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes a tensor in the format read by [`read_tensor_file`] (values narrowed to `f32`).
pub fn write_tensor_file(path: &Path, t: &Tensor3) -> Result<()> {
    let header = TensorHeader { height: t.height, width: t.width, channels: t.channels, dtype: "f32le".into() };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    for v in &t.data {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    std::fs::File::create(path).and_then(|mut f| f.write_all(&bytes)).map_err(|e| Error::io(path, e))
}

/// Reads a soft mask stored as an `H×W×1` tensor file.
pub fn read_mask_tensor(path: &Path) -> Result<SoftMask> {
    let t = read_tensor_file(path)?;
    if t.channels != 1 {
        return Err(Error::parse(path, format!("mask tensor has {} channels, expected 1", t.channels)));
    }
    SoftMask::new(t.width, t.height, t.data).map_err(|e| Error::parse(path, e.to_string()))
}
