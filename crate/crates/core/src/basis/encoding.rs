use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::DenseGrid;

/// Coordinate channels `[x, x, y, y]` followed by `sin/cos(2^l·π·x)` and
/// `sin/cos(2^l·π·y)` for `l = 0 … E−2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMap {
    grid: DenseGrid,
    encode_levels: usize,
}

impl PositionMap {
    pub fn grid(&self) -> &DenseGrid {
        &self.grid
    }

    pub fn encode_levels(&self) -> usize {
        self.encode_levels
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn channels(&self) -> usize {
        self.grid.channels()
    }
}

pub fn encoding_channels(encode_levels: usize) -> usize {
    4 + 4 * encode_levels.saturating_sub(1)
}

/// Normalized coordinate of index `i` on an axis of `len` samples, in [0, 1].
#[inline]
pub(crate) fn normalized(i: usize, len: usize) -> f64 {
    if len <= 1 {
        0.0
    } else {
        i as f64 / (len - 1) as f64
    }
}

/// Positional encoding of every pixel; `x` runs along the width, `y` along
/// the height, both normalized to [0, 1] with corners at 0 and 1.
pub fn positional_encoding(
    height: usize,
    width: usize,
    encode_levels: usize,
) -> Result<PositionMap> {
    if encode_levels == 0 {
        return Err(Error::InvalidArgument(
            "encode levels must be at least 1".into(),
        ));
    }
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument(format!(
            "encoding resolution must be positive, got {height}x{width}"
        )));
    }
    let channels = encoding_channels(encode_levels);
    let freqs: Vec<f64> = (0..encode_levels - 1)
        .map(|l| (1u64 << l) as f64 * PI)
        .collect();

    let mut data = Vec::with_capacity(height * width * channels);
    for r in 0..height {
        let y = normalized(r, height);
        for c in 0..width {
            let x = normalized(c, width);
            data.extend_from_slice(&[x, x, y, y]);
            for &f in &freqs {
                let (sx, cx) = (f * x).sin_cos();
                let (sy, cy) = (f * y).sin_cos();
                data.extend_from_slice(&[sx, cx, sy, cy]);
            }
        }
    }
    Ok(PositionMap {
        grid: DenseGrid::new(height, width, channels, data)?,
        encode_levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_counts() {
        assert_eq!(positional_encoding(3, 4, 5).unwrap().channels(), 20);
        assert_eq!(positional_encoding(3, 4, 1).unwrap().channels(), 4);
        for e in 1..=10 {
            assert_eq!(
                positional_encoding(2, 2, e).unwrap().channels(),
                4 + 4 * (e - 1)
            );
        }
        assert!(positional_encoding(3, 4, 0).is_err());
        assert!(positional_encoding(0, 4, 2).is_err());
    }

    #[test]
    fn origin_pixel() {
        let p = positional_encoding(6, 9, 6).unwrap();
        let px = p.grid().pixel(0, 0);
        assert_eq!(&px[..4], &[0.0; 4]);
        for quad in px[4..].chunks(4) {
            assert_eq!(quad, &[0.0, 1.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn raw_channels_follow_axes() {
        let p = positional_encoding(3, 5, 2).unwrap();
        let px = p.grid().pixel(1, 4);
        assert_eq!(&px[..4], &[1.0, 1.0, 0.5, 0.5]);
        // sin(π·1), cos(π·1), sin(π/2), cos(π/2)
        assert!(px[4].abs() < 1e-15 && (px[5] + 1.0).abs() < 1e-15);
        assert!((px[6] - 1.0).abs() < 1e-15 && px[7].abs() < 1e-15);
    }

    #[test]
    fn single_pixel_axis() {
        let p = positional_encoding(1, 1, 3).unwrap();
        assert_eq!(&p.grid().pixel(0, 0)[..4], &[0.0; 4]);
    }
}
