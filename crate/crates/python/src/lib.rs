//! Python bindings. Grids cross the boundary as flat row-major lists with
//! explicit dimensions; sparse sets as `(row, col, depth)` tuples.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sparsefill::completion::{
    self, CompletionConfig, DepthMap, SparseDepth, SparseEntry, ValidMask,
};
use sparsefill::dataio::{self, RngSpec};
use sparsefill::metrics::{self, SeeOptions};
use sparsefill::numcore::{self, IrlsConfig, Matrix};
use sparsefill::{DenseGrid, Error};

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io { .. } | Error::Format(_) => PyIOError::new_err(msg),
        Error::Solver(_) => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T, E: Into<Error>> OrPy<T> for Result<T, E> {
    fn py(self) -> PyResult<T> {
        self.map_err(|e| py_err(e.into()))
    }
}

#[pyclass(name = "SolveReport", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySolveReport {
    weights: Vec<f64>,
    effective_rank: usize,
    iterations: usize,
    residual_norm: f64,
    underdetermined: bool,
}

impl From<numcore::SolveReport> for PySolveReport {
    fn from(r: numcore::SolveReport) -> Self {
        Self {
            weights: r.weights,
            effective_rank: r.effective_rank,
            iterations: r.iterations,
            residual_norm: r.residual_norm,
            underdetermined: r.underdetermined,
        }
    }
}

#[pymethods]
impl PySolveReport {
    fn __repr__(&self) -> String {
        format!(
            "SolveReport(effective_rank={}, iterations={}, residual_norm={}, underdetermined={})",
            self.effective_rank, self.iterations, self.residual_norm, self.underdetermined
        )
    }
}

#[pyclass(name = "Completion", get_all, frozen)]
struct PyCompletion {
    height: usize,
    width: usize,
    depth: Vec<f64>,
    report: PySolveReport,
    basis_fingerprint: String,
}

#[pyclass(name = "MetricsReport", get_all, frozen)]
struct PyMetrics {
    rmse: f64,
    rel: f64,
    delta1: f64,
    delta2: f64,
    delta3: f64,
    see: Option<f64>,
    edge_pixel_count: Option<usize>,
    valid_pixel_count: usize,
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!(
            "MetricsReport(rmse={}, rel={}, delta1={})",
            self.rmse, self.rel, self.delta1
        )
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("ragged matrix rows"));
    }
    Matrix::new(r, c, rows.concat()).py()
}

fn sparse_set(
    height: usize,
    width: usize,
    points: Vec<(usize, usize, f64)>,
) -> PyResult<SparseDepth> {
    let entries = points
        .into_iter()
        .map(|(row, col, depth)| SparseEntry { row, col, depth })
        .collect();
    SparseDepth::new(height, width, entries).py()
}

fn config(basis_dim: usize, encode_levels: usize, seed: u64, irls: bool) -> CompletionConfig {
    let mut cfg = CompletionConfig {
        encode_levels,
        use_irls: irls,
        ..Default::default()
    };
    cfg.generator.basis_dim = basis_dim;
    cfg.generator.seed = seed;
    cfg
}

fn wrap(done: completion::Completion) -> PyCompletion {
    PyCompletion {
        height: done.depth.height(),
        width: done.depth.width(),
        basis_fingerprint: done.basis.fingerprint(),
        depth: done.depth.into_grid().into_vec(),
        report: done.report.into(),
    }
}

/// Minimum-norm least squares through the truncated pseudoinverse.
#[pyfunction]
#[pyo3(signature = (f, d, rank_tolerance = numcore::DEFAULT_RANK_TOLERANCE))]
fn solve_lse_svd(f: Vec<Vec<f64>>, d: Vec<f64>, rank_tolerance: f64) -> PyResult<PySolveReport> {
    Ok(numcore::solve_lse_svd(&matrix(f)?, &d, rank_tolerance)
        .py()?
        .into())
}

/// Normal-equation solve; full column rank only.
#[pyfunction]
fn solve_lse_normal(f: Vec<Vec<f64>>, d: Vec<f64>) -> PyResult<PySolveReport> {
    Ok(numcore::solve_lse_normal(&matrix(f)?, &d).py()?.into())
}

#[pyfunction]
#[pyo3(signature = (f, d, residual_clamp = 1e-4, max_iterations = 20, stop_tolerance = 1e-6, rank_tolerance = numcore::DEFAULT_RANK_TOLERANCE))]
fn solve_irls(
    f: Vec<Vec<f64>>,
    d: Vec<f64>,
    residual_clamp: f64,
    max_iterations: usize,
    stop_tolerance: f64,
    rank_tolerance: f64,
) -> PyResult<PySolveReport> {
    let cfg = IrlsConfig {
        residual_clamp,
        max_iterations,
        stop_tolerance,
    };
    Ok(numcore::solve_irls(&matrix(f)?, &d, &cfg, rank_tolerance)
        .py()?
        .into())
}

/// Returns `(channels, values)` for an `height x width` encoding.
#[pyfunction]
fn positional_encoding(height: usize, width: usize, levels: usize) -> PyResult<(usize, Vec<f64>)> {
    let p = sparsefill::basis::positional_encoding(height, width, levels).py()?;
    Ok((p.channels(), p.grid().as_slice().to_vec()))
}

#[pyfunction]
#[pyo3(signature = (image, height, width, channels, sparse, basis_dim = 128, encode_levels = 5, seed = 0, irls = false))]
#[allow(clippy::too_many_arguments)]
fn complete(
    py: Python<'_>,
    image: Vec<f64>,
    height: usize,
    width: usize,
    channels: usize,
    sparse: Vec<(usize, usize, f64)>,
    basis_dim: usize,
    encode_levels: usize,
    seed: u64,
    irls: bool,
) -> PyResult<PyCompletion> {
    let image = DenseGrid::new(height, width, channels, image).py()?;
    let sparse = sparse_set(height, width, sparse)?;
    let cfg = config(basis_dim, encode_levels, seed, irls);
    let done = py
        .detach(|| completion::complete(&image, &sparse, &cfg))
        .py()?;
    Ok(wrap(done))
}

#[pyfunction]
#[pyo3(signature = (image, height, width, channels, sparse, target_height, target_width, basis_dim = 128, encode_levels = 5, seed = 0, irls = false))]
#[allow(clippy::too_many_arguments)]
fn complete_superres(
    py: Python<'_>,
    image: Vec<f64>,
    height: usize,
    width: usize,
    channels: usize,
    sparse: Vec<(usize, usize, f64)>,
    target_height: usize,
    target_width: usize,
    basis_dim: usize,
    encode_levels: usize,
    seed: u64,
    irls: bool,
) -> PyResult<PyCompletion> {
    let image = DenseGrid::new(height, width, channels, image).py()?;
    let sparse = sparse_set(height, width, sparse)?;
    let cfg = config(basis_dim, encode_levels, seed, irls);
    let done = py
        .detach(|| {
            completion::complete_superres(&image, &sparse, &cfg, target_height, target_width)
        })
        .py()?;
    Ok(wrap(done))
}

/// Metrics over pixels where `gt > 0`.
#[pyfunction]
#[pyo3(signature = (pred, gt, height, width, see = false))]
fn evaluate(
    pred: Vec<f64>,
    gt: Vec<f64>,
    height: usize,
    width: usize,
    see: bool,
) -> PyResult<PyMetrics> {
    let pred = DepthMap::new(height, width, pred).py()?;
    let gt = DepthMap::new(height, width, gt).py()?;
    let opts = see.then(SeeOptions::default);
    let r = metrics::evaluate(&pred, &gt, &ValidMask::from_depth(&gt), opts.as_ref()).py()?;
    Ok(PyMetrics {
        rmse: r.rmse,
        rel: r.rel,
        delta1: r.delta1,
        delta2: r.delta2,
        delta3: r.delta3,
        see: r.see,
        edge_pixel_count: r.edge_pixel_count,
        valid_pixel_count: r.valid_pixel_count,
    })
}

/// Returns `(rgb, depth)` flat lists for a procedural scene.
#[pyfunction]
fn synthetic_scene(height: usize, width: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = dataio::synthetic_scene(height, width, RngSpec::new(seed)).py()?;
    Ok((s.image.into_vec(), s.gt_depth.into_grid().into_vec()))
}

/// `count` distinct pixels with `depth > 0`, drawn uniformly.
#[pyfunction]
fn sample_sparse(
    depth: Vec<f64>,
    height: usize,
    width: usize,
    count: usize,
    seed: u64,
) -> PyResult<Vec<(usize, usize, f64)>> {
    let gt = DepthMap::new(height, width, depth).py()?;
    let s =
        dataio::sample_sparse(&gt, &ValidMask::from_depth(&gt), count, RngSpec::new(seed)).py()?;
    Ok(s.entries()
        .iter()
        .map(|e| (e.row, e.col, e.depth))
        .collect())
}

/// Returns `(height, width, values)`.
#[pyfunction]
fn load_depth(path: std::path::PathBuf) -> PyResult<(usize, usize, Vec<f64>)> {
    let d = dataio::load_depth(path).py()?;
    Ok((d.height(), d.width(), d.into_grid().into_vec()))
}

#[pyfunction]
fn save_depth(
    path: std::path::PathBuf,
    height: usize,
    width: usize,
    values: Vec<f64>,
) -> PyResult<()> {
    dataio::save_depth(&DepthMap::new(height, width, values).py()?, path).py()
}

#[pymodule]
fn _sparsefill(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyCompletion>()?;
    m.add_class::<PyMetrics>()?;
    m.add_function(wrap_pyfunction!(solve_lse_svd, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lse_normal, m)?)?;
    m.add_function(wrap_pyfunction!(solve_irls, m)?)?;
    m.add_function(wrap_pyfunction!(positional_encoding, m)?)?;
    m.add_function(wrap_pyfunction!(complete, m)?)?;
    m.add_function(wrap_pyfunction!(complete_superres, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_scene, m)?)?;
    m.add_function(wrap_pyfunction!(sample_sparse, m)?)?;
    m.add_function(wrap_pyfunction!(load_depth, m)?)?;
    m.add_function(wrap_pyfunction!(save_depth, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
