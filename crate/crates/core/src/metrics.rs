//! Evaluation metrics (RMSE, REL, δ thresholds, soft edge error) and the
//! three training loss terms, computed as diagnostics.

use serde::{Deserialize, Serialize};

use crate::completion::{DepthMap, ValidMask};
use crate::error::{Error, Result};

pub const DELTA_THRESHOLDS: [f64; 3] = [1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeeOptions {
    /// Ground-truth gradient magnitude (meters per pixel) above which a
    /// pixel is an edge.
    pub edge_threshold: f64,
}

impl Default for SeeOptions {
    fn default() -> Self {
        Self {
            edge_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    pub rel: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub see: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub edge_pixel_count: Option<usize>,
    pub valid_pixel_count: usize,
}

impl MetricsReport {
    /// `key=value` lines in a fixed order.
    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "rmse={}\nrel={}\ndelta1={}\ndelta2={}\ndelta3={}\n",
            self.rmse, self.rel, self.delta1, self.delta2, self.delta3
        );
        if let Some(see) = self.see {
            s.push_str(&format!("see={see}\n"));
        }
        if let Some(n) = self.edge_pixel_count {
            s.push_str(&format!("edge_pixel_count={n}\n"));
        }
        s.push_str(&format!("valid_pixel_count={}\n", self.valid_pixel_count));
        s
    }
}

fn check_same(pred: &DepthMap, gt: &DepthMap) -> Result<()> {
    if (pred.height(), pred.width()) != (gt.height(), gt.width()) {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    Ok(())
}

/// Metrics over the valid pixels; soft edge error when `see` is given.
pub fn evaluate(
    pred: &DepthMap,
    gt: &DepthMap,
    mask: &ValidMask,
    see: Option<&SeeOptions>,
) -> Result<MetricsReport> {
    check_same(pred, gt)?;
    if (mask.height(), mask.width()) != (gt.height(), gt.width()) {
        return Err(Error::DimensionMismatch(
            "mask resolution differs from ground truth".into(),
        ));
    }
    let mut count = 0usize;
    let (mut sq, mut rel) = (0.0, 0.0);
    let mut hits = [0usize; 3];
    for ((&p, &g), &valid) in pred.values().iter().zip(gt.values()).zip(mask.flags()) {
        if !valid {
            continue;
        }
        if !(g > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ground truth must be positive at valid pixels, got {g}"
            )));
        }
        count += 1;
        let err = p - g;
        sq += err * err;
        rel += err.abs() / g;
        if p > 0.0 {
            let ratio = (p / g).max(g / p);
            for (h, &t) in hits.iter_mut().zip(&DELTA_THRESHOLDS) {
                if ratio < t {
                    *h += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument("no valid pixels to evaluate".into()));
    }
    let m = count as f64;
    let pct = |h: usize| 100.0 * h as f64 / m;
    let (see_value, edges) = match see {
        Some(opts) => {
            let (v, n) = soft_edge_error(pred, gt, mask, opts);
            (Some(v), Some(n))
        }
        None => (None, None),
    };
    Ok(MetricsReport {
        rmse: (sq / m).sqrt(),
        rel: rel / m,
        delta1: pct(hits[0]),
        delta2: pct(hits[1]),
        delta3: pct(hits[2]),
        see: see_value,
        edge_pixel_count: edges,
        valid_pixel_count: count,
    })
}

/// Ground-truth edge pixels: valid pixels whose forward-difference gradient
/// magnitude exceeds the threshold. Differences reaching an invalid
/// neighbor or the border count as zero.
pub fn edge_pixels(gt: &DepthMap, mask: &ValidMask, threshold: f64) -> Vec<bool> {
    let (h, w) = (gt.height(), gt.width());
    let valid = mask.flags();
    let mut edges = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !valid[i] {
                continue;
            }
            let g = gt.get(r, c);
            let gx = if c + 1 < w && valid[i + 1] {
                gt.get(r, c + 1) - g
            } else {
                0.0
            };
            let gy = if r + 1 < h && valid[i + w] {
                gt.get(r + 1, c) - g
            } else {
                0.0
            };
            edges[i] = gx.hypot(gy) > threshold;
        }
    }
    edges
}

/// Mean over edge pixels `p` of `min_{q ∈ 3×3(p)} |pred(q) − gt(p)|`.
/// Returns (0, 0) when the ground truth has no edges.
fn soft_edge_error(
    pred: &DepthMap,
    gt: &DepthMap,
    mask: &ValidMask,
    opts: &SeeOptions,
) -> (f64, usize) {
    let (h, w) = (gt.height(), gt.width());
    let edges = edge_pixels(gt, mask, opts.edge_threshold);
    let mut total = 0.0;
    let mut n = 0usize;
    for r in 0..h {
        for c in 0..w {
            if !edges[r * w + c] {
                continue;
            }
            let g = gt.get(r, c);
            let mut best = f64::INFINITY;
            for rr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                    best = best.min((pred.get(rr, cc) - g).abs());
                }
            }
            total += best;
            n += 1;
        }
    }
    if n == 0 {
        (0.0, 0)
    } else {
        (total / n as f64, n)
    }
}

/// How the weight regularizer reduces the weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Regularization {
    /// `|Σ wᵢ|`
    #[default]
    AbsOfSum,
    /// `Σ |wᵢ|`
    SumOfAbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub direct: f64,
    pub grad: f64,
    pub regular: f64,
    pub total: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Direct ℓ₁ depth error, ℓ₁ error of forward-difference gradients, and the
/// weight regularizer, combined as `α·direct + β·grad + γ·regular`.
pub fn training_losses(
    pred: &DepthMap,
    gt: &DepthMap,
    weights: &[f64],
    lw: LossWeights,
    reg: Regularization,
) -> Result<LossReport> {
    check_same(pred, gt)?;
    if weights.is_empty() {
        return Err(Error::InvalidArgument("weight vector is empty".into()));
    }
    let (h, w) = (gt.height(), gt.width());
    let (p, g) = (pred.values(), gt.values());
    let direct = p.iter().zip(g).map(|(a, b)| (b - a).abs()).sum::<f64>() / (h * w) as f64;

    let mut grad_sum = 0.0;
    let mut grad_n = 0usize;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                grad_sum += ((g[i + 1] - g[i]) - (p[i + 1] - p[i])).abs();
                grad_n += 1;
            }
            if r + 1 < h {
                grad_sum += ((g[i + w] - g[i]) - (p[i + w] - p[i])).abs();
                grad_n += 1;
            }
        }
    }
    let grad = if grad_n == 0 {
        0.0
    } else {
        grad_sum / grad_n as f64
    };

    let regular = match reg {
        Regularization::AbsOfSum => weights.iter().sum::<f64>().abs(),
        Regularization::SumOfAbs => weights.iter().map(|v| v.abs()).sum(),
    };
    Ok(LossReport {
        direct,
        grad,
        regular,
        total: lw.alpha * direct + lw.beta * grad + lw.gamma * regular,
        alpha: lw.alpha,
        beta: lw.beta,
        gamma: lw.gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(h: usize, w: usize, v: &[f64]) -> DepthMap {
        DepthMap::new(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn two_pixel_hand_check() {
        let gt = map(1, 2, &[2.0, 4.0]);
        let pred = map(1, 2, &[3.0, 3.0]);
        let r = evaluate(&pred, &gt, &ValidMask::all(1, 2), None).unwrap();
        assert_eq!(r.rmse, 1.0);
        assert_eq!(r.rel, 0.375);
        assert_eq!(r.valid_pixel_count, 2);
        assert!(r.see.is_none());
    }

    #[test]
    fn identity_is_perfect() {
        let gt = map(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let r = evaluate(
            &gt,
            &gt,
            &ValidMask::all(2, 2),
            Some(&SeeOptions::default()),
        )
        .unwrap();
        assert_eq!((r.rmse, r.rel), (0.0, 0.0));
        assert_eq!((r.delta1, r.delta2, r.delta3), (100.0, 100.0, 100.0));
        assert_eq!(r.see, Some(0.0));
    }

    #[test]
    fn delta_thresholds() {
        let gt = map(2, 2, &[1.0; 4]);
        let pred = map(2, 2, &[1.3; 4]);
        let r = evaluate(&pred, &gt, &ValidMask::all(2, 2), None).unwrap();
        assert_eq!((r.delta1, r.delta2, r.delta3), (0.0, 100.0, 100.0));
    }

    #[test]
    fn mask_and_errors() {
        let gt = map(1, 3, &[0.0, 2.0, 4.0]);
        let pred = map(1, 3, &[9.0, 3.0, 3.0]);
        let mask = ValidMask::from_depth(&gt);
        let r = evaluate(&pred, &gt, &mask, None).unwrap();
        assert_eq!(r.valid_pixel_count, 2);
        assert_eq!(r.rmse, 1.0);
        assert!(evaluate(&pred, &gt, &ValidMask::all(1, 3), None).is_err());
        let none = ValidMask::new(1, 3, vec![false; 3]).unwrap();
        assert!(evaluate(&pred, &gt, &none, None).is_err());
        assert!(evaluate(&map(1, 2, &[1.0, 1.0]), &gt, &mask, None).is_err());
    }

    #[test]
    fn nonpositive_prediction_fails_every_threshold() {
        let gt = map(1, 2, &[1.0, 1.0]);
        let pred = map(1, 2, &[-1.0, 1.0]);
        let r = evaluate(&pred, &gt, &ValidMask::all(1, 2), None).unwrap();
        assert_eq!(r.delta3, 50.0);
    }

    #[test]
    fn soft_edge_tolerates_one_pixel_shift() {
        // step edge after column 1; the predicted step comes one pixel early
        let gt = map(1, 4, &[1.0, 1.0, 3.0, 3.0]);
        let pred = map(1, 4, &[1.0, 3.0, 3.0, 3.0]);
        let mask = ValidMask::all(1, 4);
        let r = evaluate(&pred, &gt, &mask, Some(&SeeOptions::default())).unwrap();
        assert_eq!(r.edge_pixel_count, Some(1));
        assert_eq!(r.see, Some(0.0));
        assert!(r.rmse > 0.0);
    }

    #[test]
    fn loss_examples() {
        let gt = map(2, 2, &[1.0, 2.0, 3.0, 5.0]);
        let lw = LossWeights {
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.1,
        };
        let r = training_losses(&gt, &gt, &[0.0, 0.0], lw, Regularization::AbsOfSum).unwrap();
        assert_eq!((r.direct, r.grad, r.regular, r.total), (0.0, 0.0, 0.0, 0.0));

        let shifted = map(2, 2, &[1.5, 2.5, 3.5, 5.5]);
        let r = training_losses(&shifted, &gt, &[1.0], lw, Regularization::AbsOfSum).unwrap();
        assert_eq!(r.direct, 0.5);
        assert_eq!(r.grad, 0.0);

        let r = training_losses(&gt, &gt, &[1.0, -1.0, 0.5], lw, Regularization::AbsOfSum).unwrap();
        assert_eq!(r.regular, 0.5);
        let r = training_losses(&gt, &gt, &[1.0, -1.0, 0.5], lw, Regularization::SumOfAbs).unwrap();
        assert_eq!(r.regular, 2.5);
        assert_eq!(r.total, 0.1 * 2.5);
        assert!(training_losses(&gt, &gt, &[], lw, Regularization::AbsOfSum).is_err());
    }

    #[test]
    fn kv_output() {
        let gt = map(1, 2, &[2.0, 4.0]);
        let pred = map(1, 2, &[3.0, 3.0]);
        let r = evaluate(
            &pred,
            &gt,
            &ValidMask::all(1, 2),
            Some(&SeeOptions::default()),
        )
        .unwrap();
        let kv = r.to_kv();
        assert!(kv.starts_with("rmse=1\nrel=0.375\n"));
        assert!(kv.contains("see="));
        let back: MetricsReport =
            serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
