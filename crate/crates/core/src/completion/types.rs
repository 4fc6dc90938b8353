use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::DenseGrid;

/// One depth measurement in meters at a pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseEntry {
    pub row: usize,
    pub col: usize,
    pub depth: f64,
}

/// Sparse depth measurements bound to an image resolution. Coordinates are
/// unique and in bounds; depths are finite and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDepth {
    height: usize,
    width: usize,
    entries: Vec<SparseEntry>,
}

impl SparseDepth {
    pub fn new(height: usize, width: usize, entries: Vec<SparseEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.row >= height || e.col >= width {
                return Err(Error::OutOfBounds(format!(
                    "sparse entry ({}, {}) outside {height}x{width}",
                    e.row, e.col
                )));
            }
            if !(e.depth.is_finite() && e.depth > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "sparse depth at ({}, {}) must be finite and positive, got {}",
                    e.row, e.col, e.depth
                )));
            }
            if !seen.insert((e.row, e.col)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate sparse coordinate ({}, {})",
                    e.row, e.col
                )));
            }
        }
        Ok(Self {
            height,
            width,
            entries,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn entries(&self) -> &[SparseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn depths(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.depth).collect()
    }

    /// Same coordinates with new depths (validated).
    pub fn with_depths(&self, depths: impl IntoIterator<Item = f64>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .zip(depths)
            .map(|(e, depth)| SparseEntry { depth, ..*e })
            .collect::<Vec<_>>();
        if entries.len() != self.entries.len() {
            return Err(Error::DimensionMismatch(
                "depth count differs from entry count".into(),
            ));
        }
        Self::new(self.height, self.width, entries)
    }
}

/// Dense depth in meters, one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    grid: DenseGrid,
}

impl DepthMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        Ok(Self {
            grid: DenseGrid::new(height, width, 1, values)?,
        })
    }

    pub fn from_grid(grid: DenseGrid) -> Result<Self> {
        if grid.channels() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "depth map must have one channel, got {}",
                grid.channels()
            )));
        }
        Ok(Self { grid })
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.grid.get(row, col, 0)
    }

    pub fn values(&self) -> &[f64] {
        self.grid.as_slice()
    }

    pub fn grid(&self) -> &DenseGrid {
        &self.grid
    }

    pub fn into_grid(self) -> DenseGrid {
        self.grid
    }
}

/// Per-pixel validity flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidMask {
    height: usize,
    width: usize,
    flags: Vec<bool>,
}

impl ValidMask {
    pub fn new(height: usize, width: usize, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "mask for {height}x{width} needs {} flags, got {}",
                height * width,
                flags.len()
            )));
        }
        Ok(Self {
            height,
            width,
            flags,
        })
    }

    pub fn all(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            flags: vec![true; height * width],
        }
    }

    /// Valid where depth is finite and positive.
    pub fn from_depth(depth: &DepthMap) -> Self {
        Self {
            height: depth.height(),
            width: depth.width(),
            flags: depth
                .values()
                .iter()
                .map(|d| d.is_finite() && *d > 0.0)
                .collect(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}
