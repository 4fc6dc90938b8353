use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::encoding::PositionMap;
use super::pyramid::DEFAULT_SCALES;
use super::FeatureMap;
use crate::dataio::RngSpec;
use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisGeneratorConfig {
    /// Number of basis vectors N; every pixel row has N+1 entries.
    pub basis_dim: usize,
    pub seed: u64,
    pub hidden_dim: usize,
    pub pyramid_scales: Vec<usize>,
}

impl Default for BasisGeneratorConfig {
    fn default() -> Self {
        Self {
            basis_dim: 128,
            seed: 0,
            hidden_dim: 64,
            pyramid_scales: DEFAULT_SCALES.to_vec(),
        }
    }
}

impl BasisGeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.basis_dim == 0 {
            return Err(Error::InvalidArgument(
                "basis_dim must be at least 1".into(),
            ));
        }
        if self.hidden_dim == 0 {
            return Err(Error::InvalidArgument(
                "hidden_dim must be at least 1".into(),
            ));
        }
        if self.pyramid_scales.is_empty() {
            return Err(Error::InvalidArgument(
                "pyramid_scales must not be empty".into(),
            ));
        }
        Ok(())
    }
}

/// Per-pixel basis rows `[1, f₁ … f_N]` stacked in row-major pixel order.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisField {
    height: usize,
    width: usize,
    basis_dim: usize,
    matrix: Matrix,
}

impl BasisField {
    /// Wraps a precomputed matrix; column 0 must be all ones.
    pub fn from_matrix(height: usize, width: usize, matrix: Matrix) -> Result<Self> {
        if matrix.rows() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "basis matrix has {} rows for a {height}x{width} field",
                matrix.rows()
            )));
        }
        if matrix.cols() < 2 {
            return Err(Error::InvalidArgument(
                "basis needs at least one vector".into(),
            ));
        }
        if matrix.row_iter().any(|r| r[0] != 1.0) {
            return Err(Error::InvalidArgument(
                "basis column 0 must be all ones".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            basis_dim: matrix.cols() - 1,
            matrix,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn basis_dim(&self) -> usize {
        self.basis_dim
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn row(&self, row: usize, col: usize) -> &[f64] {
        self.matrix.row(row * self.width + col)
    }

    /// SHA-256 over the resolution and the exact bit patterns of every entry.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for v in [self.height, self.width, self.basis_dim] {
            h.update((v as u64).to_le_bytes());
        }
        for v in self.matrix.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        format!("{:x}", h.finalize())
    }
}

/// Fixed two-layer projection standing in for a trained per-pixel network.
struct Projection {
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    /// input_dim × hidden_dim
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// hidden_dim × output_dim
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl Projection {
    /// Glorot-uniform weights and biases, drawn in the order w1, b1, w2, b2.
    fn seeded(input_dim: usize, hidden_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut rng = RngSpec::new(seed).stream();
        let a1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let a2 = (6.0 / (hidden_dim + output_dim) as f64).sqrt();
        let mut draw =
            |n: usize, a: f64| -> Vec<f64> { (0..n).map(|_| rng.uniform(-a, a)).collect() };
        let w1 = draw(input_dim * hidden_dim, a1);
        let b1 = draw(hidden_dim, a1);
        let w2 = draw(hidden_dim * output_dim, a2);
        let b2 = draw(output_dim, a2);
        Self {
            input_dim,
            hidden_dim,
            output_dim,
            w1,
            b1,
            w2,
            b2,
        }
    }

    /// Writes `tanh(W2·tanh(W1·x + b1) + b2)` into `out`.
    fn forward(&self, x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        hidden.copy_from_slice(&self.b1);
        for (i, &xi) in x.iter().enumerate() {
            let w = &self.w1[i * self.hidden_dim..(i + 1) * self.hidden_dim];
            for (h, &wi) in hidden.iter_mut().zip(w) {
                *h += xi * wi;
            }
        }
        hidden.iter_mut().for_each(|h| *h = h.tanh());

        out.copy_from_slice(&self.b2);
        for (k, &hk) in hidden.iter().enumerate() {
            let w = &self.w2[k * self.output_dim..(k + 1) * self.output_dim];
            for (o, &wk) in out.iter_mut().zip(w) {
                *o += hk * wk;
            }
        }
        out.iter_mut().for_each(|o| *o = o.tanh());
    }
}

/// Per-channel mean and inverse standard deviation over all pixels.
/// Constant channels get unit scale so they map to zero.
fn channel_standardization(
    parts: &[&[f64]],
    channels: &[usize],
    pixels: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut mean = Vec::new();
    let mut inv_std = Vec::new();
    for (data, &ch) in parts.iter().zip(channels) {
        for k in 0..ch {
            let vals = data.iter().skip(k).step_by(ch);
            let m = vals.clone().sum::<f64>() / pixels as f64;
            let var = vals.map(|v| (v - m) * (v - m)).sum::<f64>() / pixels as f64;
            mean.push(m);
            inv_std.push(if var > 1e-24 { 1.0 / var.sqrt() } else { 1.0 });
        }
    }
    (mean, inv_std)
}

/// Maps every pixel's concatenated (features ‖ positions) vector through the
/// seeded projection and prefixes the constant 1.
///
/// Pixels are processed in parallel; each row depends only on its own pixel,
/// so the result does not depend on the thread count.
pub fn generate_basis(
    features: &FeatureMap,
    positions: &PositionMap,
    cfg: &BasisGeneratorConfig,
) -> Result<BasisField> {
    cfg.validate()?;
    let (h, w) = (features.height(), features.width());
    if positions.height() != h || positions.width() != w {
        return Err(Error::DimensionMismatch(format!(
            "features are {h}x{w} but positions are {}x{}",
            positions.height(),
            positions.width()
        )));
    }
    let (cf, cp) = (features.channels(), positions.channels());
    let net = Projection::seeded(cf + cp, cfg.hidden_dim, cfg.basis_dim, cfg.seed);
    debug_assert_eq!(net.input_dim, cf + cp);

    let cols = cfg.basis_dim + 1;
    let fdata = features.grid().as_slice();
    let pdata = positions.grid().as_slice();
    let (shift, scale) = channel_standardization(&[fdata, pdata], &[cf, cp], h * w);
    let mut data = vec![0.0; h * w * cols];
    data.par_chunks_mut(cols).enumerate().for_each_init(
        || (vec![0.0; cf + cp], vec![0.0; net.hidden_dim]),
        |(input, hidden), (p, row)| {
            input[..cf].copy_from_slice(&fdata[p * cf..(p + 1) * cf]);
            input[cf..].copy_from_slice(&pdata[p * cp..(p + 1) * cp]);
            for ((x, m), s) in input.iter_mut().zip(&shift).zip(&scale) {
                *x = (*x - m) * s;
            }
            row[0] = 1.0;
            net.forward(input, hidden, &mut row[1..]);
        },
    );
    BasisField::from_matrix(h, w, Matrix::from_raw(h * w, cols, data))
}
