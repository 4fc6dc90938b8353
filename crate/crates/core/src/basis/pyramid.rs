use super::resample::{resample, taps};
use super::FeatureMap;
use crate::error::{Error, Result};
use crate::grid::DenseGrid;

/// Default pooling windows for the four pyramid levels.
pub const DEFAULT_SCALES: [usize; 4] = [2, 4, 8, 16];

/// Multi-scale context features from a guide image.
///
/// Each level average-pools the image with a `s×s` window (partial windows
/// at the border average what they cover) and is resampled back to full
/// resolution bilinearly between pooled cell centers. The output is the raw
/// three channels followed by three channels per level.
pub fn extract_pyramid_features(image: &DenseGrid, scales: &[usize]) -> Result<FeatureMap> {
    let largest = *scales
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("pyramid scale list is empty".into()))?;
    if scales.contains(&0) {
        return Err(Error::InvalidArgument(
            "pyramid scales must be positive".into(),
        ));
    }
    let (h, w) = (image.height(), image.width());
    if h < largest || w < largest {
        return Err(Error::DimensionMismatch(format!(
            "image {h}x{w} is smaller than pooling window {largest}"
        )));
    }
    let rgb = match image.channels() {
        3 => image.clone(),
        1 => DenseGrid::concat_channels(&[image, image, image])?,
        c => {
            return Err(Error::InvalidArgument(format!(
                "guide image must have 1 or 3 channels, got {c}"
            )))
        }
    };

    let mut levels = Vec::with_capacity(scales.len() + 1);
    levels.push(rgb.clone());
    for &s in scales {
        let pooled = average_pool(&rgb, s);
        let row_taps = taps(&cell_centers(h, s), h);
        let col_taps = taps(&cell_centers(w, s), w);
        levels.push(resample(&pooled, &row_taps, &col_taps));
    }
    let refs: Vec<&DenseGrid> = levels.iter().collect();
    FeatureMap::new(DenseGrid::concat_channels(&refs)?)
}

/// Pixel-space centers of the pooled cells along one axis.
fn cell_centers(len: usize, s: usize) -> Vec<f64> {
    (0..len.div_ceil(s))
        .map(|i| {
            let start = i * s;
            let end = ((i + 1) * s).min(len);
            (start + end - 1) as f64 / 2.0
        })
        .collect()
}

fn average_pool(src: &DenseGrid, s: usize) -> DenseGrid {
    let (h, w, ch) = (src.height(), src.width(), src.channels());
    let (ph, pw) = (h.div_ceil(s), w.div_ceil(s));
    let mut out = vec![0.0; ph * pw * ch];
    for pr in 0..ph {
        let rows = pr * s..((pr + 1) * s).min(h);
        for pc in 0..pw {
            let cols = pc * s..((pc + 1) * s).min(w);
            let dst = &mut out[(pr * pw + pc) * ch..(pr * pw + pc + 1) * ch];
            for r in rows.clone() {
                for c in cols.clone() {
                    for (d, v) in dst.iter_mut().zip(src.pixel(r, c)) {
                        *d += v;
                    }
                }
            }
            let count = (rows.len() * cols.len()) as f64;
            dst.iter_mut().for_each(|d| *d /= count);
        }
    }
    DenseGrid::from_raw(ph, pw, ch, out)
}
