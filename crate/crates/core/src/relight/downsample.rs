use super::raster::{ForegroundMask, SoftMask};
use crate::error::{Error, Result};

/// Area-average pooling of a binary mask onto a coarser grid.
///
/// Each target cell averages the source pixels it covers, weighting partially
/// covered pixels by their overlap, so arbitrary (non-integer) ratios work.
pub fn downsample_mask(mask: &ForegroundMask, target_w: usize, target_h: usize) -> Result<SoftMask> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::Domain(format!("target size {target_w}x{target_h} has a zero dimension")));
    }
    if target_w > mask.width() || target_h > mask.height() {
        return Err(Error::Shape(format!(
            "target {target_w}x{target_h} is larger than the {}x{} mask",
            mask.width(),
            mask.height()
        )));
    }
    let wx = overlap_weights(mask.width(), target_w);
    let wy = overlap_weights(mask.height(), target_h);

    let mut out = Vec::with_capacity(target_w * target_h);
    for row in &wy {
        for col in &wx {
            let mut acc = 0.0;
            for &(sy, fy) in row {
                for &(sx, fx) in col {
                    if mask.get(sx, sy) {
                        acc += fy * fx;
                    }
                }
            }
            out.push(acc.clamp(0.0, 1.0));
        }
    }
    SoftMask::new(target_w, target_h, out)
}

/// For each target index, the source indices it overlaps and their weights
/// (overlap length divided by the target cell length; weights sum to 1).
fn overlap_weights(source: usize, target: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = source as f64 / target as f64;
    (0..target)
        .map(|t| {
            let (lo, hi) = (t as f64 * scale, (t + 1) as f64 * scale);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(source);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min((s + 1) as f64) - lo.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / scale))
                })
                .collect()
        })
        .collect()
}
