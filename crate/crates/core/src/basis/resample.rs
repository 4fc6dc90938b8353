//! Separable linear resampling shared by the pyramid and the feature
//! interpolation.

use crate::grid::DenseGrid;

/// Two source taps and the weight of the second one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tap {
    pub lo: usize,
    pub hi: usize,
    pub frac: f64,
}

/// For each output index `0..n_out`, the bracketing source samples given the
/// output-space position of every source sample (`centers`, increasing).
/// Outside the first/last center the nearest sample is held.
pub(crate) fn taps(centers: &[f64], n_out: usize) -> Vec<Tap> {
    debug_assert!(!centers.is_empty());
    let last = centers.len() - 1;
    let mut i = 0;
    (0..n_out)
        .map(|r| {
            let x = r as f64;
            if x <= centers[0] {
                return Tap {
                    lo: 0,
                    hi: 0,
                    frac: 0.0,
                };
            }
            if x >= centers[last] {
                return Tap {
                    lo: last,
                    hi: last,
                    frac: 0.0,
                };
            }
            while centers[i + 1] <= x {
                i += 1;
            }
            let frac = (x - centers[i]) / (centers[i + 1] - centers[i]);
            if frac == 0.0 {
                Tap { lo: i, hi: i, frac }
            } else {
                Tap {
                    lo: i,
                    hi: i + 1,
                    frac,
                }
            }
        })
        .collect()
}

/// Corner-aligned sample positions: source index `i` lands at
/// `i·(n_out−1)/(n_src−1)` in output coordinates.
pub(crate) fn corner_aligned_centers(n_src: usize, n_out: usize) -> Vec<f64> {
    if n_src == 1 {
        return vec![0.0];
    }
    let scale = (n_out as f64 - 1.0) / (n_src as f64 - 1.0);
    (0..n_src).map(|i| i as f64 * scale).collect()
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // exact when a == b
    a + t * (b - a)
}

/// Bilinear resampling of every channel with precomputed row/column taps.
pub(crate) fn resample(src: &DenseGrid, row_taps: &[Tap], col_taps: &[Tap]) -> DenseGrid {
    let ch = src.channels();
    let (h, w) = (row_taps.len(), col_taps.len());
    // horizontal pass: src.height × w
    let mut tmp = vec![0.0; src.height() * w * ch];
    for r in 0..src.height() {
        for (c, t) in col_taps.iter().enumerate() {
            let a = src.pixel(r, t.lo);
            let b = src.pixel(r, t.hi);
            let dst = &mut tmp[(r * w + c) * ch..(r * w + c + 1) * ch];
            for k in 0..ch {
                dst[k] = lerp(a[k], b[k], t.frac);
            }
        }
    }
    let mut out = vec![0.0; h * w * ch];
    let row_len = w * ch;
    for (r, t) in row_taps.iter().enumerate() {
        let a = &tmp[t.lo * row_len..(t.lo + 1) * row_len];
        let b = &tmp[t.hi * row_len..(t.hi + 1) * row_len];
        for (o, (&x, &y)) in out[r * row_len..(r + 1) * row_len]
            .iter_mut()
            .zip(a.iter().zip(b))
        {
            *o = lerp(x, y, t.frac);
        }
    }
    DenseGrid::from_raw(h, w, ch, out)
}
