//! Per-pixel basis construction from a guide image.

mod encoding;
mod generator;
mod pyramid;
pub(crate) mod resample;

pub(crate) use encoding::normalized;
pub use encoding::{encoding_channels, positional_encoding, PositionMap};
pub use generator::{generate_basis, BasisField, BasisGeneratorConfig};
pub use pyramid::{extract_pyramid_features, DEFAULT_SCALES};

use crate::error::{Error, Result};
use crate::grid::DenseGrid;

/// Image feature map, H×W×C.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    grid: DenseGrid,
}

impl FeatureMap {
    pub fn new(grid: DenseGrid) -> Result<Self> {
        Ok(Self { grid })
    }

    pub fn grid(&self) -> &DenseGrid {
        &self.grid
    }

    pub fn into_grid(self) -> DenseGrid {
        self.grid
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

/// Channel-wise corner-aligned bilinear resampling to a new resolution.
pub fn interpolate_features(
    features: &FeatureMap,
    target_h: usize,
    target_w: usize,
) -> Result<FeatureMap> {
    if target_h == 0 || target_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "target resolution must be positive, got {target_h}x{target_w}"
        )));
    }
    if (target_h, target_w) == (features.height(), features.width()) {
        return Ok(features.clone());
    }
    let rows = resample::taps(
        &resample::corner_aligned_centers(features.height(), target_h),
        target_h,
    );
    let cols = resample::taps(
        &resample::corner_aligned_centers(features.width(), target_w),
        target_w,
    );
    FeatureMap::new(resample::resample(features.grid(), &rows, &cols))
}
