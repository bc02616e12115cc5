use std::collections::HashMap;

use super::{by_frame, match_frame, GtAnnotation, PredRecord, Similarity};
use crate::geometry::Box3D;

/// Localization thresholds 0.05, 0.10, ..., 0.95.
pub const HOTA_ALPHAS: [f64; 19] = {
    let mut a = [0.0; 19];
    let mut k = 0;
    while k < 19 {
        a[k] = (k + 1) as f64 / 20.0;
        k += 1;
    }
    a
};

#[derive(Debug, Clone, PartialEq)]
pub struct Hota {
    /// Mean of `per_alpha`.
    pub hota: f64,
    pub per_alpha: [f64; 19],
}

/// HOTA at a single localization threshold.
///
/// Each true positive `c` scores
/// `A(c) = |TPA| / (|TPA| + |FNA| + |FPA|)`, and the result is
/// `sqrt(sum_c A(c) / (|TP| + |FN| + |FP|))`. An empty sequence scores 1.
pub fn hota_at(gts: &[GtAnnotation], preds: &[PredRecord], alpha: f64, similarity: Similarity) -> f64 {
    let mut pair_tp: HashMap<(u64, u64), usize> = HashMap::new();
    let mut gt_count: HashMap<u64, usize> = HashMap::new();
    let mut pred_count: HashMap<u64, usize> = HashMap::new();
    let (mut tp, mut fn_count, mut fp) = (0usize, 0usize, 0usize);

    for slice in by_frame(gts, preds).values() {
        for g in &slice.gts {
            *gt_count.entry(g.gt_id).or_default() += 1;
        }
        for p in &slice.preds {
            *pred_count.entry(p.pred_id).or_default() += 1;
        }
        let gboxes: Vec<Box3D> = slice.gts.iter().map(|g| g.bbox).collect();
        let pboxes: Vec<Box3D> = slice.preds.iter().map(|p| p.bbox).collect();
        let m = match_frame(&gboxes, &pboxes, alpha, similarity);
        for &(i, j, _) in &m.matches {
            *pair_tp
                .entry((slice.gts[i].gt_id, slice.preds[j].pred_id))
                .or_default() += 1;
        }
        tp += m.tp();
        fn_count += m.fn_count();
        fp += m.fp();
    }

    let denom = tp + fn_count + fp;
    if denom == 0 {
        return 1.0;
    }
    // |FNA(c)| = |gt occurrences| - |TPA(c)|, |FPA(c)| = |pred occurrences| - |TPA(c)|.
    let mut a_sum = 0.0;
    let mut pairs: Vec<_> = pair_tp.into_iter().collect();
    pairs.sort_unstable();
    for ((g, p), tpa) in pairs {
        let union = gt_count[&g] + pred_count[&p] - tpa;
        a_sum += tpa as f64 * (tpa as f64 / union as f64);
    }
    (a_sum / denom as f64).sqrt()
}

pub fn hota(gts: &[GtAnnotation], preds: &[PredRecord], similarity: Similarity) -> Hota {
    let per_alpha = HOTA_ALPHAS.map(|alpha| hota_at(gts, preds, alpha, similarity));
    Hota {
        hota: per_alpha.iter().sum::<f64>() / per_alpha.len() as f64,
        per_alpha,
    }
}
