//! Tracking evaluation: per-frame matching, CLEAR-MOT counts, HOTA averaged
//! over localization thresholds, and recall-swept AMOTA / sAMOTA / AMOTP.

mod amota;
mod clear;
mod hota;

use std::collections::{BTreeMap, BTreeSet};

pub use amota::{amota, scaled_mota, Amota, RecallPoint, DEFAULT_RECALL_LEVELS};
pub use clear::{clear_mot, mota_from_counts, ClearMot, CONTINUITY_BONUS};
pub use hota::{hota, hota_at, Hota, HOTA_ALPHAS};

use crate::association::{linear_assignment, CostMatrix};
use crate::detection::CategoryId;
use crate::error::Result;
use crate::geometry::{iou3d, Box3D};

#[derive(Debug, Clone, PartialEq)]
pub struct GtAnnotation {
    pub frame: u64,
    pub gt_id: u64,
    pub category: CategoryId,
    pub bbox: Box3D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredRecord {
    pub frame: u64,
    pub pred_id: u64,
    pub category: CategoryId,
    pub bbox: Box3D,
    pub score: f64,
}

/// Localization similarity between a ground-truth box and a prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Similarity {
    Iou3d,
    /// `1 - d / max_distance` for BEV center distance `d`; a threshold of 0
    /// accepts pairs closer than `max_distance`.
    CenterDistance { max_distance: f64 },
}

impl Similarity {
    pub fn score(&self, gt: &Box3D, pred: &Box3D) -> f64 {
        match *self {
            Similarity::Iou3d => iou3d(gt, pred),
            Similarity::CenterDistance { max_distance } => {
                1.0 - (gt.x - pred.x).hypot(gt.y - pred.y) / max_distance
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub similarity: Similarity,
    /// Minimum similarity of a CLEAR / AMOTA match.
    pub threshold: f64,
    pub recall_levels: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            similarity: Similarity::Iou3d,
            threshold: 0.25,
            recall_levels: DEFAULT_RECALL_LEVELS,
        }
    }
}

impl EvalConfig {
    pub fn center_distance() -> Self {
        Self {
            similarity: Similarity::CenterDistance { max_distance: 2.0 },
            threshold: 0.0,
            recall_levels: DEFAULT_RECALL_LEVELS,
        }
    }
}

/// Maximum-weight matching over eligible pairs. `weight` returns `None` for
/// ineligible pairs; eligible weights must be positive.
pub(crate) fn max_weight_matching(
    rows: usize,
    cols: usize,
    weight: impl Fn(usize, usize) -> Option<f64>,
) -> Vec<(usize, usize)> {
    let mut eligible = vec![false; rows * cols];
    let cost = CostMatrix::from_fn(rows, cols, |i, j| match weight(i, j) {
        Some(w) => {
            eligible[i * cols + j] = true;
            -w
        }
        None => 0.0,
    });
    linear_assignment(&cost)
        .into_iter()
        .filter(|&(i, j)| eligible[i * cols + j])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMatch {
    /// `(gt index, pred index, similarity)`.
    pub matches: Vec<(usize, usize, f64)>,
    pub unmatched_gts: Vec<usize>,
    pub unmatched_preds: Vec<usize>,
}

impl FrameMatch {
    pub fn tp(&self) -> usize {
        self.matches.len()
    }

    pub fn fn_count(&self) -> usize {
        self.unmatched_gts.len()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_preds.len()
    }
}

/// Matching of one frame of one category maximizing total similarity among
/// pairs with similarity at least `threshold` (and strictly positive).
pub fn match_frame(
    gts: &[Box3D],
    preds: &[Box3D],
    threshold: f64,
    similarity: Similarity,
) -> FrameMatch {
    let sim: Vec<Vec<f64>> = gts
        .iter()
        .map(|g| preds.iter().map(|p| similarity.score(g, p)).collect())
        .collect();
    let pairs = max_weight_matching(gts.len(), preds.len(), |i, j| {
        let s = sim[i][j];
        (s >= threshold && s > 0.0).then_some(s)
    });
    let mut gt_used = vec![false; gts.len()];
    let mut pred_used = vec![false; preds.len()];
    let matches = pairs
        .into_iter()
        .map(|(i, j)| {
            gt_used[i] = true;
            pred_used[j] = true;
            (i, j, sim[i][j])
        })
        .collect();
    FrameMatch {
        matches,
        unmatched_gts: (0..gts.len()).filter(|&i| !gt_used[i]).collect(),
        unmatched_preds: (0..preds.len()).filter(|&j| !pred_used[j]).collect(),
    }
}

/// Ground truth and predictions of one frame.
pub(crate) struct FrameSlice<'a> {
    pub gts: Vec<&'a GtAnnotation>,
    pub preds: Vec<&'a PredRecord>,
}

/// Groups by frame in ascending order. Frames that only appear on one side
/// are included.
pub(crate) fn by_frame<'a>(
    gts: &'a [GtAnnotation],
    preds: &'a [PredRecord],
) -> BTreeMap<u64, FrameSlice<'a>> {
    let mut frames: BTreeMap<u64, FrameSlice<'a>> = BTreeMap::new();
    for g in gts {
        frames
            .entry(g.frame)
            .or_insert_with(|| FrameSlice {
                gts: Vec::new(),
                preds: Vec::new(),
            })
            .gts
            .push(g);
    }
    for p in preds {
        frames
            .entry(p.frame)
            .or_insert_with(|| FrameSlice {
                gts: Vec::new(),
                preds: Vec::new(),
            })
            .preds
            .push(p);
    }
    frames
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMetrics {
    pub category: CategoryId,
    pub hota: f64,
    pub mota: f64,
    pub motp: f64,
    pub samota: f64,
    pub amota: f64,
    pub amotp: f64,
    /// Fraction of ground-truth identities tracked for at least 80% of
    /// their lifespan.
    pub mt: f64,
    /// Fraction tracked for at most 20%.
    pub ml: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub ids: usize,
    pub num_gt: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub categories: Vec<CategoryMetrics>,
    pub recall_curves: BTreeMap<CategoryId, Vec<RecallPoint>>,
}

impl MetricsReport {
    pub fn get(&self, category: CategoryId) -> Option<&CategoryMetrics> {
        self.categories.iter().find(|c| c.category == category)
    }
}

/// Evaluates every category present in the ground truth.
pub fn evaluate(
    gts: &[GtAnnotation],
    preds: &[PredRecord],
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    let categories: BTreeSet<CategoryId> = gts.iter().map(|g| g.category).collect();
    let mut report = MetricsReport::default();
    for cat in categories {
        let g: Vec<GtAnnotation> = gts.iter().filter(|x| x.category == cat).cloned().collect();
        let p: Vec<PredRecord> = preds.iter().filter(|x| x.category == cat).cloned().collect();
        let clear = clear_mot(&g, &p, cfg.threshold, cfg.similarity)?;
        let h = hota(&g, &p, cfg.similarity);
        let a = amota(&g, &p, cfg.threshold, cfg.similarity, cfg.recall_levels)?;
        report.categories.push(CategoryMetrics {
            category: cat,
            hota: h.hota,
            mota: clear.mota,
            motp: clear.motp,
            samota: a.samota,
            amota: a.amota,
            amotp: a.amotp,
            mt: clear.mt,
            ml: clear.ml,
            tp: clear.tp,
            fp: clear.fp,
            fn_count: clear.fn_count,
            ids: clear.ids,
            num_gt: clear.num_gt,
        });
        report.recall_curves.insert(cat, a.curve);
    }
    Ok(report)
}
