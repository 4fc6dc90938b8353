use crate::error::{Error, Result};

/// H×W×C array of finite reals, channels interleaved per pixel, pixels in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrid {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl DenseGrid {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::DimensionMismatch(format!(
                "grid {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid contains non-finite values".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
        )
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for k in 0..channels {
                    data.push(f(r, c, k));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub(crate) fn from_raw(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Single channel extracted as a contiguous plane.
    pub fn plane(&self, ch: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(ch)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    /// Copy with a different value for each element computed by `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Channel-wise concatenation of grids sharing a resolution.
    pub fn concat_channels(parts: &[&DenseGrid]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let (h, w) = (first.height, first.width);
        if let Some(bad) = parts.iter().find(|g| g.height != h || g.width != w) {
            return Err(Error::DimensionMismatch(format!(
                "cannot concatenate {}x{} with {h}x{w}",
                bad.height, bad.width
            )));
        }
        let channels: usize = parts.iter().map(|g| g.channels).sum();
        let mut data = Vec::with_capacity(h * w * channels);
        for p in 0..h * w {
            for g in parts {
                data.extend_from_slice(&g.data[p * g.channels..(p + 1) * g.channels]);
            }
        }
        Ok(Self::from_raw(h, w, channels, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(DenseGrid::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(DenseGrid::new(0, 2, 1, vec![]).is_err());
        assert!(DenseGrid::new(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn indexing_and_concat() {
        let a = DenseGrid::from_fn(2, 3, 2, |r, c, k| (r * 100 + c * 10 + k) as f64).unwrap();
        assert_eq!(a.get(1, 2, 1), 121.0);
        assert_eq!(a.pixel(0, 1), &[10.0, 11.0]);
        assert_eq!(a.plane(1), vec![1.0, 11.0, 21.0, 101.0, 111.0, 121.0]);
        let b = DenseGrid::filled(2, 3, 1, -1.0).unwrap();
        let cat = DenseGrid::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(cat.channels(), 3);
        assert_eq!(cat.pixel(1, 0), &[100.0, 101.0, -1.0]);
        let c = DenseGrid::filled(3, 3, 1, 0.0).unwrap();
        assert!(DenseGrid::concat_channels(&[&a, &c]).is_err());
    }
}
