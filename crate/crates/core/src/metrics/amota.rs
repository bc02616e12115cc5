use std::collections::BTreeMap;

use super::{clear_mot, GtAnnotation, PredRecord, Similarity};
use crate::error::{Error, Result};

pub const DEFAULT_RECALL_LEVELS: usize = 40;

/// MOTA and MOTP at one recall level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallPoint {
    pub recall: f64,
    /// Score threshold that realized it; `None` when the level is out of
    /// reach.
    pub score_threshold: Option<f64>,
    pub achieved_recall: f64,
    pub mota: f64,
    pub smota: f64,
    pub motp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amota {
    pub amota: f64,
    pub samota: f64,
    pub amotp: f64,
    pub curve: Vec<RecallPoint>,
}

/// `max(0, MOTA_r / r)`, additionally capped at 1 because the realized
/// recall can overshoot `r` when scores tie.
pub fn scaled_mota(mota: f64, recall: f64) -> f64 {
    (mota / recall).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
struct Operating {
    recall: f64,
    mota: f64,
    motp: f64,
}

/// Sweeps score thresholds to realize recalls `1/L, 2/L, ..., 1`.
///
/// At each level the highest threshold whose recall reaches it is used
/// (located by bisection over the distinct prediction scores, recall being
/// non-increasing in the threshold). Unreachable levels contribute zero to
/// every average.
pub fn amota(
    gts: &[GtAnnotation],
    preds: &[PredRecord],
    threshold: f64,
    similarity: Similarity,
    levels: usize,
) -> Result<Amota> {
    if gts.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    if levels == 0 {
        return Err(Error::config("recall_levels", "must be at least 1"));
    }

    let mut scores: Vec<f64> = preds.iter().map(|p| p.score).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    scores.dedup();

    let num_gt = gts.len() as f64;
    let mut cache: BTreeMap<usize, Operating> = BTreeMap::new();
    let mut at = |k: usize| -> Result<Operating> {
        if let Some(op) = cache.get(&k) {
            return Ok(*op);
        }
        let kept: Vec<PredRecord> = preds.iter().filter(|p| p.score >= scores[k]).cloned().collect();
        let c = clear_mot(gts, &kept, threshold, similarity)?;
        let op = Operating {
            recall: c.tp as f64 / num_gt,
            mota: c.mota,
            motp: c.motp,
        };
        cache.insert(k, op);
        Ok(op)
    };

    let mut curve = Vec::with_capacity(levels);
    for level in 1..=levels {
        let r = level as f64 / levels as f64;
        let reaches = |op: &Operating| op.recall >= r - 1e-12;

        let point = if scores.is_empty() || !reaches(&at(scores.len() - 1)?) {
            RecallPoint {
                recall: r,
                score_threshold: None,
                achieved_recall: 0.0,
                mota: 0.0,
                smota: 0.0,
                motp: 0.0,
            }
        } else {
            // First index (highest threshold) reaching r.
            let (mut lo, mut hi) = (0usize, scores.len() - 1);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if reaches(&at(mid)?) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            let op = at(lo)?;
            RecallPoint {
                recall: r,
                score_threshold: Some(scores[lo]),
                achieved_recall: op.recall,
                mota: op.mota,
                smota: scaled_mota(op.mota, r),
                motp: op.motp,
            }
        };
        curve.push(point);
    }

    let mean = |f: fn(&RecallPoint) -> f64| curve.iter().map(f).sum::<f64>() / levels as f64;
    Ok(Amota {
        amota: mean(|p| p.mota),
        samota: mean(|p| p.smota),
        amotp: mean(|p| p.motp),
        curve,
    })
}
