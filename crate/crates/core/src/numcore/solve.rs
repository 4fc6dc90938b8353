use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use super::svd::Svd;
use super::NumError;

/// Default relative cutoff for the numerical rank.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// Settings for the reweighted solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrlsConfig {
    /// Lower bound on residual magnitudes before inversion (meters).
    pub residual_clamp: f64,
    /// Upper bound on the number of least-squares solves, the initial one included.
    pub max_iterations: usize,
    /// Stop once the largest absolute change in the weights drops below this.
    pub stop_tolerance: f64,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        Self {
            residual_clamp: 1e-4,
            max_iterations: 20,
            stop_tolerance: 1e-6,
        }
    }
}

impl IrlsConfig {
    pub fn validate(&self) -> Result<(), NumError> {
        if !(self.residual_clamp > 0.0 && self.residual_clamp.is_finite()) {
            return Err(NumError::InvalidConfig(format!(
                "residual_clamp must be positive, got {}",
                self.residual_clamp
            )));
        }
        if self.max_iterations == 0 {
            return Err(NumError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.stop_tolerance >= 0.0) {
            return Err(NumError::InvalidConfig(format!(
                "stop_tolerance must be non-negative, got {}",
                self.stop_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub weights: Vec<f64>,
    pub effective_rank: usize,
    /// Least-squares solves performed; 1 for a plain solve.
    pub iterations: usize,
    /// ‖D − F·W‖₂ against the unweighted system.
    pub residual_norm: f64,
    /// Set when there are no more equations than unknowns, so the
    /// minimum-norm solution was used in place of a true over-determined fit.
    pub underdetermined: bool,
}

fn check_system(f: &Matrix, d: &[f64]) -> Result<(), NumError> {
    if f.rows() == 0 || f.cols() == 0 {
        return Err(NumError::Empty);
    }
    if d.len() != f.rows() {
        return Err(NumError::DimensionMismatch {
            what: "right-hand side length",
            expected: f.rows(),
            found: d.len(),
        });
    }
    if f.as_slice().iter().chain(d).any(|v| !v.is_finite()) {
        return Err(NumError::NonFinite("system"));
    }
    Ok(())
}

fn residual(f: &Matrix, d: &[f64], w: &[f64]) -> Vec<f64> {
    f.row_iter()
        .zip(d)
        .map(|(row, &di)| di - dot(row, w))
        .collect()
}

/// Minimum-norm least squares through the truncated SVD pseudoinverse:
/// `W = Σ_{σᵢ > tol·σ₁} vᵢ (uᵢ·D) / σᵢ`.
pub fn solve_lse_svd(f: &Matrix, d: &[f64], rank_tolerance: f64) -> Result<SolveReport, NumError> {
    check_system(f, d)?;
    if !(rank_tolerance >= 0.0 && rank_tolerance.is_finite()) {
        return Err(NumError::InvalidConfig(format!(
            "rank tolerance must be non-negative, got {rank_tolerance}"
        )));
    }
    let (weights, rank) = pinv_apply(f, d, rank_tolerance);
    let res = residual(f, d, &weights);
    Ok(SolveReport {
        residual_norm: super::matrix::norm2(&res),
        weights,
        effective_rank: rank,
        iterations: 1,
        underdetermined: f.rows() <= f.cols(),
    })
}

fn pinv_apply(f: &Matrix, d: &[f64], rank_tolerance: f64) -> (Vec<f64>, usize) {
    let svd = Svd::compute(f);
    let rank = svd.rank(rank_tolerance);
    let coeffs = svd.u.tr_mul_vec(d).expect("U has one row per equation");
    let n = f.cols();
    let mut w = vec![0.0; n];
    for (k, (&c, &s)) in coeffs.iter().zip(&svd.singular).take(rank).enumerate() {
        let scale = c / s;
        for (j, wj) in w.iter_mut().enumerate() {
            *wj += svd.v.get(j, k) * scale;
        }
    }
    (w, rank)
}

/// Normal-equations solve `(FᵀF)⁻¹FᵀD` via Cholesky. Fails with
/// [`NumError::Singular`] when the Gram matrix is not numerically positive
/// definite.
pub fn solve_lse_normal(f: &Matrix, d: &[f64]) -> Result<SolveReport, NumError> {
    check_system(f, d)?;
    let gram = f.transpose().matmul(f)?;
    let rhs = f.tr_mul_vec(d)?;
    let n = gram.cols();
    let max_diag = (0..n).map(|i| gram.get(i, i)).fold(0.0_f64, f64::max);
    let pivot_floor = (n as f64) * f64::EPSILON * max_diag;

    // Lower-triangular L with LLᵀ = G.
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = gram.get(j, j);
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > pivot_floor) {
            return Err(NumError::Singular {
                column: j,
                pivot: diag,
            });
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = gram.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }

    let mut y = rhs.into_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }

    let res = residual(f, d, &y);
    Ok(SolveReport {
        residual_norm: super::matrix::norm2(&res),
        weights: y,
        effective_rank: n,
        iterations: 1,
        underdetermined: f.rows() <= f.cols(),
    })
}

/// Iteratively reweighted least squares.
///
/// Starts from the plain minimum-norm solution, then alternates residual
/// weights `1 / max(clamp, |r|)` with weighted solves. The weighted solve
/// scales each equation by the square root of its weight and reuses the SVD
/// path.
pub fn solve_irls(
    f: &Matrix,
    d: &[f64],
    cfg: &IrlsConfig,
    rank_tolerance: f64,
) -> Result<SolveReport, NumError> {
    cfg.validate()?;
    let init = solve_lse_svd(f, d, rank_tolerance)?;
    let mut w = init.weights.clone();
    let mut rank = init.effective_rank;
    let mut iterations = 1;

    while iterations < cfg.max_iterations {
        let res = residual(f, d, &w);
        if res.iter().all(|r| r.abs() <= cfg.residual_clamp) {
            // every equation gets the same weight; the solution cannot move
            break;
        }
        let sqrt_w: Vec<f64> = res
            .iter()
            .map(|r| (1.0 / r.abs().max(cfg.residual_clamp)).sqrt())
            .collect();
        let fw = f.scale_rows(&sqrt_w)?;
        let dw: Vec<f64> = d.iter().zip(&sqrt_w).map(|(a, b)| a * b).collect();
        let (next, r) = pinv_apply(&fw, &dw, rank_tolerance);
        iterations += 1;
        rank = r;
        let delta = next
            .iter()
            .zip(&w)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        w = next;
        if delta < cfg.stop_tolerance {
            break;
        }
    }

    let res = residual(f, d, &w);
    Ok(SolveReport {
        residual_norm: super::matrix::norm2(&res),
        weights: w,
        effective_rank: rank,
        iterations,
        underdetermined: init.underdetermined,
    })
}
