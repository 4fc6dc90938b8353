//! Property tests over the public API.

use proptest::prelude::*;

use sparsefill::basis::positional_encoding;
use sparsefill::completion::{DepthMap, SparseDepth, SparseEntry, ValidMask};
use sparsefill::dataio::{format_sparse, load_depth, parse_sparse, save_depth};
use sparsefill::metrics::evaluate;
use sparsefill::numcore::{
    norm2, solve_irls, solve_lse_normal, solve_lse_svd, IrlsConfig, Matrix, Svd,
    DEFAULT_RANK_TOLERANCE,
};

/// Tall matrix with entries in [-1, 1] plus a matching right-hand side.
fn system(max_cols: usize) -> impl Strategy<Value = (Matrix, Vec<f64>)> {
    (1..=max_cols).prop_flat_map(|cols| {
        (cols + 2..cols + 12).prop_flat_map(move |rows| {
            (
                prop::collection::vec(-1.0f64..1.0, rows * cols),
                prop::collection::vec(-10.0f64..10.0, rows),
            )
                .prop_map(move |(data, d)| (Matrix::new(rows, cols, data).unwrap(), d))
        })
    })
}

fn depth_map() -> impl Strategy<Value = DepthMap> {
    (1usize..6, 1usize..6).prop_flat_map(|(h, w)| {
        prop::collection::vec(0.1f64..20.0, h * w)
            .prop_map(move |v| DepthMap::new(h, w, v).unwrap())
    })
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn svd_matches_normal_equations((f, d) in system(6)) {
        let cond = Svd::compute(&f).condition_number();
        prop_assume!(cond < 1e4);
        let a = solve_lse_svd(&f, &d, DEFAULT_RANK_TOLERANCE).unwrap();
        let b = solve_lse_normal(&f, &d).unwrap();
        prop_assert!(rel_diff(&a.weights, &b.weights) < 1e-8);
        prop_assert!((a.residual_norm - b.residual_norm).abs() <= 1e-8 * (1.0 + b.residual_norm));
    }

    #[test]
    fn svd_reconstructs((f, _) in system(6)) {
        let s = Svd::compute(&f);
        let k = s.singular.len();
        let mut us = s.u.clone().into_vec();
        for row in us.chunks_mut(k) {
            for (v, sv) in row.iter_mut().zip(&s.singular) {
                *v *= sv;
            }
        }
        let back = Matrix::new(f.rows(), k, us).unwrap().matmul(&s.v.transpose()).unwrap();
        let err: Vec<f64> = back.as_slice().iter().zip(f.as_slice()).map(|(a, b)| a - b).collect();
        prop_assert!(norm2(&err) <= 1e-12 * (1.0 + f.norm()));
        prop_assert!(s.singular.windows(2).all(|p| p[0] >= p[1]));
        prop_assert!(s.singular.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn solution_scales_with_depth((f, d) in system(5), alpha in 0.05f64..20.0) {
        let a = solve_lse_svd(&f, &d, DEFAULT_RANK_TOLERANCE).unwrap();
        let scaled: Vec<f64> = d.iter().map(|v| v * alpha).collect();
        let b = solve_lse_svd(&f, &scaled, DEFAULT_RANK_TOLERANCE).unwrap();
        let expect: Vec<f64> = a.weights.iter().map(|w| w * alpha).collect();
        prop_assert!(rel_diff(&b.weights, &expect) < 1e-12);
    }

    #[test]
    fn duplicated_columns_share_weight((f, d) in system(4)) {
        // append a copy of column 0; the minimum-norm answer splits its weight evenly
        let cols = f.cols();
        let mut data = Vec::new();
        for r in 0..f.rows() {
            data.extend_from_slice(f.row(r));
            data.push(f.get(r, 0));
        }
        let g = Matrix::new(f.rows(), cols + 1, data).unwrap();
        prop_assume!(Svd::compute(&f).condition_number() < 1e6);
        let s = solve_lse_svd(&g, &d, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert_eq!(s.effective_rank, cols);
        let scale = 1.0 + s.weights[0].abs();
        prop_assert!((s.weights[0] - s.weights[cols]).abs() < 1e-9 * scale);
        let full = solve_lse_normal(&f, &d).unwrap();
        prop_assert!((s.weights[0] + s.weights[cols] - full.weights[0]).abs() < 1e-8 * scale);
    }

    #[test]
    fn irls_is_bounded_and_finite((f, d) in system(4), max_iter in 1usize..8) {
        let cfg = IrlsConfig { max_iterations: max_iter, ..Default::default() };
        let r = solve_irls(&f, &d, &cfg, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert!(r.iterations >= 1 && r.iterations <= max_iter);
        prop_assert!(r.weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn encoding_bounds(h in 1usize..12, w in 1usize..12, levels in 1usize..6) {
        let p = positional_encoding(h, w, levels).unwrap();
        prop_assert_eq!(p.channels(), 4 * levels);
        let c = p.channels();
        for px in p.grid().as_slice().chunks(c) {
            prop_assert!(px[..4].iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(px[4..].iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn metric_relations(gt in depth_map(), noise in prop::collection::vec(-0.5f64..0.5, 36)) {
        let pred = DepthMap::new(
            gt.height(),
            gt.width(),
            // multiplicative so the prediction stays positive and can serve as ground truth
            gt.values().iter().zip(&noise).map(|(g, n)| g * (1.0 + n)).collect(),
        ).unwrap();
        let mask = ValidMask::all(gt.height(), gt.width());
        let m = evaluate(&pred, &gt, &mask, None).unwrap();
        let swapped = evaluate(&gt, &pred, &mask, None).unwrap();
        prop_assert_eq!(m.rmse, swapped.rmse);
        let mae = pred.values().iter().zip(gt.values()).map(|(a, b)| (a - b).abs()).sum::<f64>()
            / gt.values().len() as f64;
        prop_assert!(m.rmse >= mae - 1e-12);
        prop_assert!(m.delta1 <= m.delta2 && m.delta2 <= m.delta3 && m.delta3 <= 100.0 && m.delta1 >= 0.0);
        let same = evaluate(&gt, &gt, &mask, None).unwrap();
        prop_assert_eq!(same.rmse, 0.0);
        prop_assert_eq!(same.delta1, 100.0);
    }

    #[test]
    fn sparse_text_round_trip(h in 1usize..40, w in 1usize..40, raw in prop::collection::vec((0usize..40, 0usize..40, 1e-3f64..1e3), 0..30)) {
        let mut seen = std::collections::HashSet::new();
        let entries: Vec<SparseEntry> = raw
            .into_iter()
            .filter(|&(r, c, _)| r < h && c < w && seen.insert((r, c)))
            .map(|(row, col, depth)| SparseEntry { row, col, depth })
            .collect();
        let s = SparseDepth::new(h, w, entries).unwrap();
        prop_assert_eq!(parse_sparse(&format_sparse(&s)).unwrap(), s);
    }

    #[test]
    fn raw_depth_round_trip(gt in depth_map()) {
        // the raw layout stores f32, so round-trip values that are f32-exact
        let exact = DepthMap::new(gt.height(), gt.width(), gt.values().iter().map(|&v| v as f32 as f64).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.sfd");
        save_depth(&exact, &path).unwrap();
        prop_assert_eq!(load_depth(&path).unwrap(), exact);
    }
}
