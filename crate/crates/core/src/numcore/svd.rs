//! Thin singular value decomposition.
//!
//! Tall inputs are reduced with a Householder QR first, then the square
//! triangular factor is diagonalized with one-sided (Hestenes) Jacobi
//! rotations. Wide inputs are handled through their transpose.

use super::matrix::{dot, norm2, Matrix};

const MAX_SWEEPS: usize = 80;

/// `A = U · diag(singular) · Vᵀ` with `k = min(rows, cols)` columns in `U`
/// and `V`, singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    /// rows × k
    pub u: Matrix,
    pub singular: Vec<f64>,
    /// cols × k
    pub v: Matrix,
}

impl Svd {
    pub fn compute(a: &Matrix) -> Svd {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            let t = svd_tall(&a.transpose());
            return Svd {
                u: t.v,
                singular: t.singular,
                v: t.u,
            };
        }
        svd_tall(a)
    }

    /// Number of singular values strictly above `rel_tol · σ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.singular.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.singular
            .iter()
            .filter(|&&s| s > rel_tol * smax)
            .count()
    }

    /// Ratio of largest to smallest singular value (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        match (self.singular.first(), self.singular.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

/// Column-major working copy.
fn to_columns(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.cols()).map(|c| a.column(c)).collect()
}

fn from_columns(rows: usize, cols: &[Vec<f64>]) -> Matrix {
    let mut data = vec![0.0; rows * cols.len()];
    for (c, col) in cols.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            data[r * cols.len() + c] = v;
        }
    }
    Matrix::from_raw(rows, cols.len(), data)
}

fn svd_tall(a: &Matrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    if n == 0 {
        return Svd {
            u: Matrix::zeros(m, 0),
            singular: Vec::new(),
            v: Matrix::zeros(0, 0),
        };
    }
    if m == n {
        let (u, s, v) = jacobi(to_columns(a), m);
        return Svd { u, singular: s, v };
    }
    let (q, r) = householder_qr(a);
    let (ur, s, v) = jacobi(r, n);
    // U = Q · U_r
    let u = from_columns(m, &q)
        .matmul(&ur)
        .expect("QR factor shapes agree");
    Svd { u, singular: s, v }
}

/// Householder QR of an m×n (m > n) matrix. Returns the explicit thin `Q`
/// (n columns of length m) and the n×n `R` as columns.
fn householder_qr(a: &Matrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (m, n) = (a.rows(), a.cols());
    let mut cols = to_columns(a);
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);

    for k in 0..n {
        let x = &cols[k][k..];
        let alpha = norm2(x);
        let mut v = x.to_vec();
        if alpha == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vn = norm2(&v);
        v.iter_mut().for_each(|e| *e /= vn);
        for col in cols.iter_mut().skip(k) {
            let seg = &mut col[k..];
            let p = 2.0 * dot(&v, seg);
            seg.iter_mut().zip(&v).for_each(|(s, &vi)| *s -= p * vi);
        }
        for e in cols[k][k + 1..].iter_mut() {
            *e = 0.0;
        }
        reflectors.push(v);
    }

    let r: Vec<Vec<f64>> = cols.iter().map(|c| c[..n].to_vec()).collect();

    // Q = H_0 H_1 … H_{n-1} applied to the first n unit vectors.
    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for k in (0..n).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        for col in q.iter_mut() {
            let seg = &mut col[k..];
            let p = 2.0 * dot(v, seg);
            seg.iter_mut().zip(v).for_each(|(s, &vi)| *s -= p * vi);
        }
    }
    (q, r)
}

/// One-sided Jacobi on a p×n matrix given as n columns (p ≥ n).
/// Returns (U p×n, σ descending, V n×n).
fn jacobi(mut cols: Vec<Vec<f64>>, p: usize) -> (Matrix, Vec<f64>, Matrix) {
    let n = cols.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (p as f64).sqrt();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (norm2(c), j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut u_cols = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for &(s, j) in &order {
        let u = if s > 0.0 {
            cols[j].iter().map(|e| e / s).collect()
        } else {
            vec![0.0; p]
        };
        u_cols.push(u);
        v_cols.push(v[j].clone());
        sigma.push(s);
    }
    (from_columns(p, &u_cols), sigma, from_columns(n, &v_cols))
}

#[inline]
fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (a, b) = (&mut lo[i], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xi, yi) = (*x, *y);
        *x = c * xi - s * yi;
        *y = s * xi + c * yi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd) -> Matrix {
        let k = svd.singular.len();
        let mut us = svd.u.clone().into_vec();
        let rows = svd.u.rows();
        for r in 0..rows {
            for c in 0..k {
                us[r * k + c] *= svd.singular[c];
            }
        }
        Matrix::from_raw(rows, k, us)
            .matmul(&svd.v.transpose())
            .unwrap()
    }

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < tol, "{x} vs {y}");
        }
    }

    fn pseudo_random(rows: usize, cols: usize, mut state: u64) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn reconstructs_tall_square_and_wide() {
        for &(m, n) in &[(7, 3), (4, 4), (3, 6), (1, 1), (5, 1), (1, 4)] {
            let a = pseudo_random(m, n, (m * 31 + n) as u64);
            let svd = Svd::compute(&a);
            assert_eq!(svd.singular.len(), m.min(n));
            assert!(svd.singular.windows(2).all(|w| w[0] >= w[1]));
            assert_close(&reconstruct(&svd), &a, 1e-12);
            let vtv = svd.v.transpose().matmul(&svd.v).unwrap();
            assert_close(&vtv, &Matrix::identity(m.min(n)), 1e-12);
        }
    }

    #[test]
    fn known_singular_values() {
        let a = Matrix::from_rows(&[[3.0, 0.0], [0.0, -2.0], [0.0, 0.0]]).unwrap();
        let svd = Svd::compute(&a);
        assert!((svd.singular[0] - 3.0).abs() < 1e-14);
        assert!((svd.singular[1] - 2.0).abs() < 1e-14);
        assert_eq!(svd.rank(1e-10), 2);
    }

    #[test]
    fn rank_deficient_and_zero() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let svd = Svd::compute(&a);
        assert_eq!(svd.rank(1e-10), 1);
        assert!(svd.condition_number() > 1e12);
        let z = Matrix::zeros(3, 2);
        let svd = Svd::compute(&z);
        assert_eq!(svd.rank(1e-10), 0);
    }
}
