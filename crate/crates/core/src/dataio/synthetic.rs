//! Procedural RGB-D scenes for experiments and tests.

use super::rng::RngSpec;
use super::DatasetSample;
use crate::completion::{DepthMap, ValidMask};
use crate::error::Result;
use crate::grid::DenseGrid;

struct Blob {
    cy: f64,
    cx: f64,
    ry: f64,
    rx: f64,
    depth: f64,
    color: [f64; 3],
}

/// A sloped background (farther toward the top) with a few elliptical
/// objects in front of it. Object colors are distinct from the background
/// and shading darkens with depth, so the image carries the depth edges.
pub fn synthetic_scene(height: usize, width: usize, rng: RngSpec) -> Result<DatasetSample> {
    let mut r = rng.stream();
    let blobs: Vec<Blob> = (0..4)
        .map(|_| Blob {
            cy: r.uniform(0.2, 0.8),
            cx: r.uniform(0.15, 0.85),
            ry: r.uniform(0.08, 0.22),
            rx: r.uniform(0.08, 0.22),
            depth: r.uniform(1.0, 2.5),
            color: [
                r.uniform(0.2, 1.0),
                r.uniform(0.0, 0.6),
                r.uniform(0.2, 1.0),
            ],
        })
        .collect();
    let tilt = r.uniform(-0.5, 0.5);

    let mut depth = Vec::with_capacity(height * width);
    let mut rgb = Vec::with_capacity(height * width * 3);
    for row in 0..height {
        let y = (row as f64 + 0.5) / height as f64;
        for col in 0..width {
            let x = (col as f64 + 0.5) / width as f64;
            let mut d = 3.0 + 2.0 * (1.0 - y) + tilt * x;
            let mut color = [0.55, 0.6 + 0.2 * x, 0.5];
            // nearest object wins
            for b in &blobs {
                let q = ((y - b.cy) / b.ry).powi(2) + ((x - b.cx) / b.rx).powi(2);
                if q <= 1.0 {
                    let bulge = b.depth - 0.3 * (1.0 - q).sqrt();
                    if bulge < d {
                        d = bulge;
                        color = b.color;
                    }
                }
            }
            let shade = 1.2 - 0.12 * d;
            rgb.extend(color.iter().map(|c| (c * shade).clamp(0.0, 1.0)));
            depth.push(d);
        }
    }
    let gt = DepthMap::new(height, width, depth)?;
    let valid_mask = ValidMask::from_depth(&gt);
    Ok(DatasetSample {
        image: DenseGrid::new(height, width, 3, rgb)?,
        gt_depth: gt,
        valid_mask,
    })
}
