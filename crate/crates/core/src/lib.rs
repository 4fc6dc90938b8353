//! Depth completion by least-squares fitting of per-pixel basis vectors.
//!
//! A guide image is turned into one basis vector per pixel (pyramid color
//! features, positional encoding, and a fixed seeded projection). Sparse
//! depth only enters afterwards: the basis rows under the measured pixels
//! are fitted to the measurements with an SVD least-squares solve (or IRLS
//! when the measurements carry outliers), and the fitted weights are applied
//! to every pixel.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cli;
pub mod completion;
pub mod dataio;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod numcore;

pub use error::{Error, Result};
pub use grid::DenseGrid;
