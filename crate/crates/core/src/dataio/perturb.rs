use super::rng::RngSpec;
use crate::completion::{DepthMap, SparseDepth, SparseEntry, ValidMask};
use crate::error::{Error, Result};

/// `count` distinct valid pixels drawn uniformly, in draw order.
pub fn sample_sparse(
    gt: &DepthMap,
    mask: &ValidMask,
    count: usize,
    rng: RngSpec,
) -> Result<SparseDepth> {
    if (mask.height(), mask.width()) != (gt.height(), gt.width()) {
        return Err(Error::DimensionMismatch(
            "mask resolution differs from depth map".into(),
        ));
    }
    let valid: Vec<usize> = mask
        .flags()
        .iter()
        .enumerate()
        .filter(|&(i, &f)| f && gt.values()[i] > 0.0)
        .map(|(i, _)| i)
        .collect();
    if count > valid.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {count} points from {} valid pixels",
            valid.len()
        )));
    }
    let w = gt.width();
    let entries = rng
        .stream()
        .choose_indices(valid.len(), count)
        .into_iter()
        .map(|k| {
            let i = valid[k];
            SparseEntry {
                row: i / w,
                col: i % w,
                depth: gt.values()[i],
            }
        })
        .collect();
    SparseDepth::new(gt.height(), gt.width(), entries)
}

/// Multiplies every depth by `factor`.
pub fn perturb_scale(sparse: &SparseDepth, factor: f64) -> Result<SparseDepth> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scale factor must be positive, got {factor}"
        )));
    }
    sparse.with_depths(sparse.entries().iter().map(|e| e.depth * factor))
}

/// Adds noise uniform in `[low, high]` to `corrupt_count` entries chosen
/// without replacement; the rest are untouched.
pub fn inject_noise(
    sparse: &SparseDepth,
    corrupt_count: usize,
    low: f64,
    high: f64,
    rng: RngSpec,
) -> Result<SparseDepth> {
    if corrupt_count > sparse.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot corrupt {corrupt_count} of {} entries",
            sparse.len()
        )));
    }
    if !(low <= high) || !low.is_finite() || !high.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bad noise interval [{low}, {high}]"
        )));
    }
    let mut stream = rng.stream();
    let chosen = stream.choose_indices(sparse.len(), corrupt_count);
    let mut depths = sparse.depths();
    for i in chosen {
        depths[i] += stream.uniform(low, high);
    }
    sparse.with_depths(depths)
}
