use std::collections::{BTreeMap, HashMap};

use super::{by_frame, max_weight_matching, GtAnnotation, PredRecord, Similarity};
use crate::error::{Error, Result};

/// Added to the weight of a pair that was matched in the previous frame so
/// that established correspondences win over marginally better overlaps.
pub const CONTINUITY_BONUS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ClearMot {
    pub mota: f64,
    pub motp: f64,
    pub ids: usize,
    pub mt: f64,
    pub ml: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub num_gt: usize,
    pub num_gt_ids: usize,
}

/// CLEAR-MOT over a frame-indexed sequence of one category.
///
/// Per frame, the matching maximizes total similarity over pairs at or
/// above `threshold`, with [`CONTINUITY_BONUS`] on pairs matched in the
/// previous frame. An identity switch is counted when a ground-truth object
/// is matched to a prediction id different from the last one it was matched
/// to.
pub fn clear_mot(
    gts: &[GtAnnotation],
    preds: &[PredRecord],
    threshold: f64,
    similarity: Similarity,
) -> Result<ClearMot> {
    if gts.is_empty() {
        return Err(Error::NoGroundTruth);
    }

    let mut last_match: HashMap<u64, u64> = HashMap::new();
    let mut prev_frame_match: HashMap<u64, u64> = HashMap::new();
    let mut lifespan: BTreeMap<u64, usize> = BTreeMap::new();
    let mut tracked: HashMap<u64, usize> = HashMap::new();
    let (mut tp, mut fp, mut fn_count, mut ids) = (0usize, 0usize, 0usize, 0usize);
    let mut sim_sum = 0.0;

    for slice in by_frame(gts, preds).values() {
        for g in &slice.gts {
            *lifespan.entry(g.gt_id).or_default() += 1;
        }
        let sim: Vec<Vec<f64>> = slice
            .gts
            .iter()
            .map(|g| slice.preds.iter().map(|p| similarity.score(&g.bbox, &p.bbox)).collect())
            .collect();
        let pairs = max_weight_matching(slice.gts.len(), slice.preds.len(), |i, j| {
            let s = sim[i][j];
            if s < threshold || s <= 0.0 {
                return None;
            }
            let continuing = prev_frame_match.get(&slice.gts[i].gt_id) == Some(&slice.preds[j].pred_id);
            Some(if continuing { s + CONTINUITY_BONUS } else { s })
        });

        prev_frame_match.clear();
        for &(i, j) in &pairs {
            let gt_id = slice.gts[i].gt_id;
            let pred_id = slice.preds[j].pred_id;
            if let Some(&prev) = last_match.get(&gt_id) {
                if prev != pred_id {
                    ids += 1;
                }
            }
            last_match.insert(gt_id, pred_id);
            prev_frame_match.insert(gt_id, pred_id);
            *tracked.entry(gt_id).or_default() += 1;
            sim_sum += sim[i][j];
        }
        tp += pairs.len();
        fp += slice.preds.len() - pairs.len();
        fn_count += slice.gts.len() - pairs.len();
    }

    let num_gt = gts.len();
    let num_gt_ids = lifespan.len();
    let ratio = |id: &u64, span: &usize| tracked.get(id).copied().unwrap_or(0) as f64 / *span as f64;
    let mt = lifespan.iter().filter(|(id, s)| ratio(id, s) >= 0.8).count();
    let ml = lifespan.iter().filter(|(id, s)| ratio(id, s) <= 0.2).count();

    Ok(ClearMot {
        mota: 1.0 - (fp + fn_count + ids) as f64 / num_gt as f64,
        motp: if tp == 0 { 0.0 } else { sim_sum / tp as f64 },
        ids,
        mt: mt as f64 / num_gt_ids as f64,
        ml: ml as f64 / num_gt_ids as f64,
        tp,
        fp,
        fn_count,
        num_gt,
        num_gt_ids,
    })
}

/// MOTA from raw counts.
pub fn mota_from_counts(num_gt: usize, fp: usize, fn_count: usize, ids: usize) -> Result<f64> {
    if num_gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    Ok(1.0 - (fp + fn_count + ids) as f64 / num_gt as f64)
}
