//! File formats, seeded randomness and the sparse-input perturbations used
//! by the experiment protocols.

mod formats;
mod perturb;
mod rng;
mod synthetic;

use std::path::Path;

use thiserror::Error;

pub use formats::{
    encode_depth, format_sparse, load_depth, load_features, load_features_for, load_image,
    load_sparse, parse_sparse, save_depth, save_features, save_image, save_sparse, DEPTH_MAGIC,
    DEPTH_PNG_SCALE, FEATURE_MAGIC,
};
pub use perturb::{inject_noise, perturb_scale, sample_sparse};
pub use rng::{Rng, RngSpec, RNG_ALGORITHM};
pub use synthetic::synthetic_scene;

use crate::completion::{DepthMap, ValidMask};
use crate::error::{Error, Result};
use crate::grid::DenseGrid;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated payload: expected {expected}, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("malformed record on line {line}: {text:?}")]
    MalformedRecord { line: usize, text: String },
    #[error("non-finite value in payload")]
    NonFinite,
    #[error("image codec: {0}")]
    Image(String),
}

/// Guide image, ground truth and its validity mask at a shared resolution.
#[derive(Debug, Clone)]
pub struct DatasetSample {
    pub image: DenseGrid,
    pub gt_depth: DepthMap,
    pub valid_mask: ValidMask,
}

pub fn load_sample(
    image_path: impl AsRef<Path>,
    depth_path: impl AsRef<Path>,
) -> Result<DatasetSample> {
    let image = load_image(image_path)?;
    let gt_depth = load_depth(depth_path)?;
    if (image.height(), image.width()) != (gt_depth.height(), gt_depth.width()) {
        return Err(Error::DimensionMismatch(format!(
            "image is {}x{} but depth is {}x{}",
            image.height(),
            image.width(),
            gt_depth.height(),
            gt_depth.width()
        )));
    }
    let valid_mask = ValidMask::from_depth(&gt_depth);
    Ok(DatasetSample {
        image,
        gt_depth,
        valid_mask,
    })
}
