//! Property tests over the metric, fusion, and feature invariants.

use histofuse::metrics::{auc_binary, sen_at_spe, spe_at_sen};
use histofuse::model::{compose_dist3, convex_combine};
use histofuse::radiomics::{first_order_features, ForegroundMask, GrayscaleTile};
use ndarray::Array2;
use proptest::prelude::*;

fn softmax2(l: [f64; 2]) -> [f64; 2] {
    let m = l[0].max(l[1]);
    let e = [(l[0] - m).exp(), (l[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

proptest! {
    #[test]
    fn dist3_normalizes_for_arbitrary_logits(
        la in prop::array::uniform2(-50.0f64..50.0),
        lb in prop::array::uniform2(-50.0f64..50.0),
    ) {
        let d = compose_dist3(softmax2(la), softmax2(lb));
        let sum: f64 = d.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
        prop_assert!(d.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn auc_is_invariant_under_monotone_transforms(
        scores in prop::collection::vec(0.0f64..1.0, 4..40),
        flips in prop::collection::vec(any::<bool>(), 4..40),
    ) {
        let n = scores.len().min(flips.len());
        let scores = &scores[..n];
        let labels = &flips[..n];
        prop_assume!(labels.contains(&true) && labels.contains(&false));
        let base = auc_binary(scores, labels).unwrap();
        // strictly increasing transforms preserve the ranking
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s + 1.0).tanh()).collect();
        let shifted: Vec<f64> = scores.iter().map(|s| 10.0 * s - 4.0).collect();
        let expd: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert!((auc_binary(&squashed, labels).unwrap() - base).abs() < 1e-12);
        prop_assert!((auc_binary(&shifted, labels).unwrap() - base).abs() < 1e-12);
        prop_assert!((auc_binary(&expd, labels).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn constrained_metrics_monotone_in_floor(
        scores in prop::collection::vec(0.0f64..1.0, 4..40),
        flips in prop::collection::vec(any::<bool>(), 4..40),
        f1 in 0.0f64..1.0,
        f2 in 0.0f64..1.0,
    ) {
        let n = scores.len().min(flips.len());
        let scores = &scores[..n];
        let labels = &flips[..n];
        prop_assume!(labels.contains(&true) && labels.contains(&false));
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        // raising the floor can only lower the constrained optimum
        prop_assert!(
            sen_at_spe(scores, labels, lo).unwrap() >= sen_at_spe(scores, labels, hi).unwrap()
        );
        prop_assert!(
            spe_at_sen(scores, labels, lo).unwrap() >= spe_at_sen(scores, labels, hi).unwrap()
        );
    }

    #[test]
    fn fusion_is_a_convex_combination(
        z_img in prop::collection::vec(-10.0f64..10.0, 6),
        z_rad in prop::collection::vec(-10.0f64..10.0, 6),
        a in 0.0f64..1.0,
    ) {
        let zi = Array2::from_shape_vec((1, 6), z_img).unwrap();
        let zr = Array2::from_shape_vec((1, 6), z_rad).unwrap();
        let alpha = Array2::from_shape_vec((1, 2), vec![a, 1.0 - a]).unwrap();
        let z = convex_combine(&zi, &zr, &alpha);
        for j in 0..6 {
            let lo = zi[[0, j]].min(zr[[0, j]]) - 1e-12;
            let hi = zi[[0, j]].max(zr[[0, j]]) + 1e-12;
            prop_assert!(z[[0, j]] >= lo && z[[0, j]] <= hi);
        }
    }

    #[test]
    fn first_order_is_permutation_invariant(
        values in prop::collection::vec(0.0f64..255.0, 16),
        seed in any::<u64>(),
    ) {
        let gray = GrayscaleTile::new(Array2::from_shape_vec((4, 4), values.clone()).unwrap()).unwrap();
        let mask = ForegroundMask { mask: Array2::from_elem((4, 4), true) };
        let base = first_order_features(&gray, &mask).unwrap();

        // deterministic Fisher-Yates on the same multiset
        let mut permuted = values;
        let mut state = seed | 1;
        for i in (1..permuted.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let j = (state % (i as u64 + 1)) as usize;
            permuted.swap(i, j);
        }
        let gray_p = GrayscaleTile::new(Array2::from_shape_vec((4, 4), permuted).unwrap()).unwrap();
        let shuffled = first_order_features(&gray_p, &mask).unwrap();
        for (a, b) in base.iter().zip(&shuffled) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn variance_matches_mean_square_identity(
        values in prop::collection::vec(0.0f64..255.0, 2..64),
    ) {
        let n = values.len() as f64;
        let w = values.len();
        let gray = GrayscaleTile::new(Array2::from_shape_vec((1, w), values.clone()).unwrap()).unwrap();
        let mask = ForegroundMask { mask: Array2::from_elem((1, w), true) };
        let f = first_order_features(&gray, &mask).unwrap();
        // variance sits at index 17 of the first-order block
        let variance = f[17];
        let mean = values.iter().sum::<f64>() / n;
        let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / n;
        let expected = mean_sq - mean * mean;
        let tol = 1e-6 * expected.abs().max(1e-6);
        prop_assert!((variance - expected).abs() <= tol);
    }
}
