//! Sparse-to-dense completion: gather the basis rows under the known
//! pixels, solve for the weights, and evaluate the weighted basis everywhere.

mod types;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use types::{DepthMap, SparseDepth, SparseEntry, ValidMask};

use crate::basis::{
    extract_pyramid_features, generate_basis, interpolate_features, normalized,
    positional_encoding, BasisField, BasisGeneratorConfig, FeatureMap,
};
use crate::error::{Error, Result};
use crate::grid::DenseGrid;
use crate::numcore::{
    dot, solve_irls, solve_lse_svd, IrlsConfig, Matrix, SolveReport, DEFAULT_RANK_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionConfig {
    pub generator: BasisGeneratorConfig,
    pub encode_levels: usize,
    pub use_irls: bool,
    pub irls: IrlsConfig,
    pub rank_tolerance: f64,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        Self {
            generator: BasisGeneratorConfig::default(),
            encode_levels: 5,
            use_irls: false,
            irls: IrlsConfig::default(),
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
        }
    }
}

/// Result of a completion run.
#[derive(Debug, Clone)]
pub struct Completion {
    pub depth: DepthMap,
    pub report: SolveReport,
    /// The basis the weights were fitted against; depends only on the guide
    /// image and the configuration.
    pub basis: BasisField,
}

/// Guide image → pyramid features.
pub fn image_features(image: &DenseGrid, cfg: &CompletionConfig) -> Result<FeatureMap> {
    extract_pyramid_features(image, &cfg.generator.pyramid_scales)
}

/// Features (at the working resolution) → basis field.
pub fn basis_from_features(features: &FeatureMap, cfg: &CompletionConfig) -> Result<BasisField> {
    let positions = positional_encoding(features.height(), features.width(), cfg.encode_levels)?;
    generate_basis(features, &positions, &cfg.generator)
}

pub fn build_basis(image: &DenseGrid, cfg: &CompletionConfig) -> Result<BasisField> {
    basis_from_features(&image_features(image, cfg)?, cfg)
}

/// Rows of the basis under each sparse pixel, in entry order, with the
/// matching depths.
pub fn gather_known(field: &BasisField, sparse: &SparseDepth) -> Result<(Matrix, Vec<f64>)> {
    check_resolution(field, sparse)?;
    if sparse.is_empty() {
        return Err(Error::InvalidArgument("no sparse measurements".into()));
    }
    gather_at(
        field,
        sparse.entries().iter().map(|e| (e.row, e.col, e.depth)),
    )
}

fn gather_at(
    field: &BasisField,
    at: impl Iterator<Item = (usize, usize, f64)>,
) -> Result<(Matrix, Vec<f64>)> {
    let cols = field.basis_dim() + 1;
    let mut data = Vec::new();
    let mut depths = Vec::new();
    for (r, c, d) in at {
        if r >= field.height() || c >= field.width() {
            return Err(Error::OutOfBounds(format!(
                "pixel ({r}, {c}) outside {}x{}",
                field.height(),
                field.width()
            )));
        }
        data.extend_from_slice(field.row(r, c));
        depths.push(d);
    }
    Ok((Matrix::new(depths.len(), cols, data)?, depths))
}

fn check_resolution(field: &BasisField, sparse: &SparseDepth) -> Result<()> {
    if (field.height(), field.width()) != (sparse.height(), sparse.width()) {
        return Err(Error::DimensionMismatch(format!(
            "sparse set is {}x{} but the basis is {}x{}",
            sparse.height(),
            sparse.width(),
            field.height(),
            field.width()
        )));
    }
    Ok(())
}

/// `D_a = F_a · Wᵀ` reshaped to the field resolution.
pub fn predict_dense(field: &BasisField, weights: &[f64]) -> Result<DepthMap> {
    let cols = field.basis_dim() + 1;
    if weights.len() != cols {
        return Err(Error::DimensionMismatch(format!(
            "expected {cols} weights, got {}",
            weights.len()
        )));
    }
    let values: Vec<f64> = field
        .matrix()
        .as_slice()
        .par_chunks(cols)
        .map(|row| dot(row, weights))
        .collect();
    DepthMap::new(field.height(), field.width(), values)
}

fn solve(f: &Matrix, d: &[f64], cfg: &CompletionConfig) -> Result<SolveReport> {
    let report = if cfg.use_irls {
        solve_irls(f, d, &cfg.irls, cfg.rank_tolerance)?
    } else {
        solve_lse_svd(f, d, cfg.rank_tolerance)?
    };
    Ok(report)
}

/// Fits the sparse set against an existing basis and predicts every pixel.
/// The basis is untouched, so one field can serve any number of sparse
/// inputs on the same image.
pub fn fit(
    basis: &BasisField,
    sparse: &SparseDepth,
    cfg: &CompletionConfig,
) -> Result<(DepthMap, SolveReport)> {
    let (f, d) = gather_known(basis, sparse)?;
    let report = solve(&f, &d, cfg)?;
    let depth = predict_dense(basis, &report.weights)?;
    Ok((depth, report))
}

pub fn complete_with_basis(
    basis: BasisField,
    sparse: &SparseDepth,
    cfg: &CompletionConfig,
) -> Result<Completion> {
    let (depth, report) = fit(&basis, sparse, cfg)?;
    Ok(Completion {
        depth,
        report,
        basis,
    })
}

/// Full pipeline from a guide image. With fewer than N+2 measurements the
/// minimum-norm solution is used and `report.underdetermined` is set.
pub fn complete(
    image: &DenseGrid,
    sparse: &SparseDepth,
    cfg: &CompletionConfig,
) -> Result<Completion> {
    if (image.height(), image.width()) != (sparse.height(), sparse.width()) {
        return Err(Error::DimensionMismatch(format!(
            "sparse set is {}x{} but the image is {}x{}",
            sparse.height(),
            sparse.width(),
            image.height(),
            image.width()
        )));
    }
    complete_with_basis(build_basis(image, cfg)?, sparse, cfg)
}

/// Pipeline on externally supplied features at the sparse resolution.
pub fn complete_with_features(
    features: &FeatureMap,
    sparse: &SparseDepth,
    cfg: &CompletionConfig,
) -> Result<Completion> {
    complete_with_basis(basis_from_features(features, cfg)?, sparse, cfg)
}

/// Index on a `dst`-sample axis nearest to index `i` of a `src`-sample axis,
/// matching by normalized coordinate.
fn nearest_index(i: usize, src: usize, dst: usize) -> usize {
    let pos = normalized(i, src) * (dst.max(1) - 1) as f64;
    (pos.round() as usize).min(dst - 1)
}

/// Completion at a higher output resolution.
///
/// Features are extracted at the source resolution and interpolated to the
/// target, the positional encoding is rebuilt at the target, and each sparse
/// pixel is matched to its nearest target pixel.
pub fn complete_superres(
    image: &DenseGrid,
    sparse: &SparseDepth,
    cfg: &CompletionConfig,
    target_h: usize,
    target_w: usize,
) -> Result<Completion> {
    complete_superres_features(
        &image_features(image, cfg)?,
        sparse,
        cfg,
        target_h,
        target_w,
    )
}

pub fn complete_superres_features(
    features: &FeatureMap,
    sparse: &SparseDepth,
    cfg: &CompletionConfig,
    target_h: usize,
    target_w: usize,
) -> Result<Completion> {
    let (sh, sw) = (features.height(), features.width());
    if (sparse.height(), sparse.width()) != (sh, sw) {
        return Err(Error::DimensionMismatch(format!(
            "sparse set is {}x{} but the source is {sh}x{sw}",
            sparse.height(),
            sparse.width()
        )));
    }
    if target_h < sh || target_w < sw {
        return Err(Error::InvalidArgument(format!(
            "target {target_h}x{target_w} is smaller than source {sh}x{sw}"
        )));
    }
    if sparse.is_empty() {
        return Err(Error::InvalidArgument("no sparse measurements".into()));
    }
    let upsampled = interpolate_features(features, target_h, target_w)?;
    let basis = basis_from_features(&upsampled, cfg)?;
    let (f, d) = gather_at(
        &basis,
        sparse.entries().iter().map(|e| {
            (
                nearest_index(e.row, sh, target_h),
                nearest_index(e.col, sw, target_w),
                e.depth,
            )
        }),
    )?;
    let report = solve(&f, &d, cfg)?;
    let depth = predict_dense(&basis, &report.weights)?;
    Ok(Completion {
        depth,
        report,
        basis,
    })
}

/// Normalized dot product between the basis row at `anchor` and every other
/// pixel's row.
pub fn kernel_map(field: &BasisField, anchor: (usize, usize)) -> Result<DenseGrid> {
    let (ar, ac) = anchor;
    if ar >= field.height() || ac >= field.width() {
        return Err(Error::OutOfBounds(format!(
            "anchor ({ar}, {ac}) outside {}x{}",
            field.height(),
            field.width()
        )));
    }
    let a = field.row(ar, ac);
    let na = dot(a, a).sqrt();
    assert!(
        na > 0.0,
        "basis rows contain a constant 1 and cannot vanish"
    );
    let values: Vec<f64> = field
        .matrix()
        .as_slice()
        .par_chunks(field.basis_dim() + 1)
        .map(|row| {
            if row == a {
                return 1.0;
            }
            let nr = dot(row, row).sqrt();
            (dot(a, row) / (na * nr)).clamp(-1.0, 1.0)
        })
        .collect();
    DenseGrid::new(field.height(), field.width(), 1, values)
}
