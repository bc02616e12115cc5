//! Frame-stepped tracking pipeline: preprocess, predict, build and gate cost
//! matrices, associate, update, spawn, emit, retire.

use std::collections::BTreeMap;

use crate::appearance::{
    appearance_cost_matrix, AppearanceFeature, AppearanceMemory, FeatureStrategy,
    DEFAULT_HISTORY_DEPTH,
};
use crate::association::{
    cascade, category_gate, solve, CascadeResult, CostMatrix, Stage, CATEGORY_GAP,
};
use crate::detection::{CategoryId, Detection};
use crate::error::{Error, Result};
use crate::geometry::{nms, suppress_ranked, Box3D};
use crate::motion::{
    motion_cost_matrix, predict, update, update_score, KalmanState, MotionConfig, TrackScore,
};

/// Cost given to pairs where either side has no appearance feature. It sits
/// at the top of the cosine range so such pairs never pass a threshold
/// below 2.
pub const UNAVAILABLE_APPEARANCE_COST: f64 = 2.0;

/// Which cues drive association.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Appearance,
    Motion,
    Fused,
}

/// Stage order of the fused cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AssociationOrder {
    #[default]
    MotionFirst,
    AppearanceFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub nms_threshold: f64,
    /// Detections scoring below this are dropped before tracking.
    pub confidence_threshold: f64,
    pub motion_threshold: f64,
    pub appearance_threshold: f64,
    pub deletion_threshold: f64,
    pub max_age: u32,
    pub max_predicted_emission: u32,
    pub predicted_score_factor: f64,
    /// `None` disables suppression of the emitted states.
    pub output_nms_threshold: Option<f64>,
    pub feature_strategy: FeatureStrategy,
    pub history_depth: usize,
    pub motion: MotionConfig,
    pub modality: Modality,
    pub order: AssociationOrder,
    pub category_gating: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            nms_threshold: 0.1,
            confidence_threshold: 0.0,
            motion_threshold: 0.01,
            appearance_threshold: 1.4,
            deletion_threshold: 0.0,
            max_age: 15,
            max_predicted_emission: 15,
            predicted_score_factor: 0.05,
            output_nms_threshold: None,
            feature_strategy: FeatureStrategy::default(),
            history_depth: DEFAULT_HISTORY_DEPTH,
            motion: MotionConfig::default(),
            modality: Modality::Fused,
            order: AssociationOrder::MotionFirst,
            category_gating: true,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(key, format!("{v} is outside [0, 1]")))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("{v} must be finite and >= 0")))
            }
        };
        unit("nms_threshold", self.nms_threshold)?;
        unit("confidence_threshold", self.confidence_threshold)?;
        if let Some(t) = self.output_nms_threshold {
            unit("output_nms_threshold", t)?;
        }
        non_negative("motion_threshold", self.motion_threshold)?;
        non_negative("appearance_threshold", self.appearance_threshold)?;
        non_negative("deletion_threshold", self.deletion_threshold)?;
        if self.category_gating {
            for (key, v) in [
                ("motion_threshold", self.motion_threshold),
                ("appearance_threshold", self.appearance_threshold),
            ] {
                if v >= CATEGORY_GAP {
                    return Err(Error::config(key, "must stay below the category gap"));
                }
            }
        }
        if self.max_age < 1 {
            return Err(Error::config("max_age", "must be at least 1"));
        }
        if !(self.predicted_score_factor > 0.0 && self.predicted_score_factor <= 1.0) {
            return Err(Error::config("predicted_score_factor", "must lie in (0, 1]"));
        }
        self.feature_strategy.validate()?;
        if self.history_depth < self.feature_strategy.window {
            return Err(Error::config(
                "history_depth",
                "must be at least the feature window",
            ));
        }
        self.motion.validate()
    }
}

/// Input handed to an [`AppearanceModel`] for one frame.
#[derive(Debug)]
pub struct AppearanceQuery<'a> {
    pub frame: u64,
    pub detections: &'a [Detection],
    /// Index of each detection in the frame as it was passed to
    /// [`Tracker::step`], before filtering and reordering.
    pub source_indices: &'a [usize],
    pub track_ids: &'a [u64],
    /// Selected feature per track, `None` when the track has no history.
    pub track_features: &'a [Option<Vec<f32>>],
}

/// Supplies the appearance cost matrix, lower is more similar, in `[0, 2]`.
pub trait AppearanceModel: Send + Sync {
    fn cost_matrix(&self, query: &AppearanceQuery<'_>) -> Result<CostMatrix>;
}

/// `1 - cosine` between detection embeddings and selected track features.
#[derive(Debug, Clone, Copy, Default)]
pub struct CosineAppearance;

impl AppearanceModel for CosineAppearance {
    fn cost_matrix(&self, q: &AppearanceQuery<'_>) -> Result<CostMatrix> {
        let rows: Vec<usize> = (0..q.detections.len())
            .filter(|&i| q.detections[i].embedding.is_some())
            .collect();
        let cols: Vec<usize> = (0..q.track_features.len())
            .filter(|&j| q.track_features[j].is_some())
            .collect();
        let det_feats: Vec<&[f32]> = rows
            .iter()
            .map(|&i| q.detections[i].embedding.as_deref().unwrap())
            .collect();
        let track_feats: Vec<&[f32]> = cols
            .iter()
            .map(|&j| q.track_features[j].as_deref().unwrap())
            .collect();
        let dense = appearance_cost_matrix(&det_feats, &track_feats)?;

        let mut out = CostMatrix::filled(
            q.detections.len(),
            q.track_features.len(),
            UNAVAILABLE_APPEARANCE_COST,
        );
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.set(i, j, dense.get(a, b));
            }
        }
        Ok(out)
    }
}

/// Replays externally computed appearance costs keyed by
/// `(frame, source detection index, track id)`; missing pairs cost
/// [`UNAVAILABLE_APPEARANCE_COST`].
#[derive(Debug, Clone, Default)]
pub struct PrecomputedAppearance {
    pub costs: BTreeMap<(u64, usize, u64), f64>,
}

impl AppearanceModel for PrecomputedAppearance {
    fn cost_matrix(&self, q: &AppearanceQuery<'_>) -> Result<CostMatrix> {
        Ok(CostMatrix::from_fn(
            q.detections.len(),
            q.track_ids.len(),
            |i, j| {
                self.costs
                    .get(&(q.frame, q.source_indices[i], q.track_ids[j]))
                    .copied()
                    .unwrap_or(UNAVAILABLE_APPEARANCE_COST)
            },
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub category: CategoryId,
    pub kalman: KalmanState,
    pub score: TrackScore,
    pub appearance: AppearanceMemory,
    pub hits: u32,
    pub misses_in_a_row: u32,
    pub age: u32,
    /// Score of the most recent updated (detection-backed) emission.
    pub last_output_score: f64,
    has_velocity: bool,
}

impl Track {
    pub fn bbox(&self) -> Box3D {
        self.kalman.to_box(self.has_velocity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputSource {
    Updated,
    Predicted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub track_id: u64,
    pub category: CategoryId,
    pub bbox: Box3D,
    pub score: f64,
    pub source: OutputSource,
}

/// One detection-to-track association made during a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationEvent {
    pub track_id: u64,
    pub track_category: CategoryId,
    pub detection_category: CategoryId,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameResult {
    pub frame: u64,
    /// Sorted by track id.
    pub outputs: Vec<TrackOutput>,
    pub born: Vec<u64>,
    pub died: Vec<u64>,
    pub associations: Vec<AssociationEvent>,
}

/// Confidence filter, class-aware NMS, descending score order.
pub fn preprocess(raw: &[Detection], cfg: &TrackerConfig) -> Vec<Detection> {
    let kept: Vec<Detection> = raw
        .iter()
        .filter(|d| d.score >= cfg.confidence_threshold)
        .cloned()
        .collect();
    nms(&kept, cfg.nms_threshold)
}

fn preprocess_indexed(raw: &[Detection], cfg: &TrackerConfig) -> Vec<(usize, Detection)> {
    let mut ranked: Vec<usize> = (0..raw.len())
        .filter(|&i| raw[i].score >= cfg.confidence_threshold)
        .collect();
    ranked.sort_by(|&a, &b| raw[b].score.total_cmp(&raw[a].score));
    suppress_ranked(&ranked, cfg.nms_threshold, |&i| (&raw[i].bbox, raw[i].category))
        .into_iter()
        .map(|k| (ranked[k], raw[ranked[k]].clone()))
        .collect()
}

/// Serial tracking state machine for one sequence.
pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
    appearance_model: Box<dyn AppearanceModel>,
}

impl std::fmt::Debug for Tracker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tracker")
            .field("tracks", &self.tracks.len())
            .field("next_id", &self.next_id)
            .field("last_frame", &self.last_frame)
            .finish()
    }
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        Self::with_appearance_model(cfg, Box::new(CosineAppearance))
    }

    pub fn with_appearance_model(
        cfg: TrackerConfig,
        appearance_model: Box<dyn AppearanceModel>,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            appearance_model,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn step(&mut self, frame: u64, raw: &[Detection]) -> Result<FrameResult> {
        let elapsed = match self.last_frame {
            Some(prev) if frame <= prev => {
                return Err(Error::OutOfOrderFrame {
                    previous: prev,
                    current: frame,
                })
            }
            Some(prev) => frame - prev,
            None => 1,
        };
        self.last_frame = Some(frame);

        let kept = preprocess_indexed(raw, &self.cfg);
        let source_indices: Vec<usize> = kept.iter().map(|(i, _)| *i).collect();
        let dets: Vec<Detection> = kept.into_iter().map(|(_, d)| d).collect();

        self.advance(elapsed);

        let assoc = self.associate(frame, &dets, &source_indices)?;
        let mut result = FrameResult {
            frame,
            ..FrameResult::default()
        };

        let mut matched_track = vec![false; self.tracks.len()];
        for (&(di, ti), &stage) in assoc.assignment.matches.iter().zip(&assoc.stages) {
            matched_track[ti] = true;
            let det = &dets[di];
            let track = &mut self.tracks[ti];
            track.kalman = update(&track.kalman, det, &self.cfg.motion)?;
            track.score = update_score(track.score, det.score, &self.cfg.motion);
            record_appearance(&mut track.appearance, det, frame)?;
            track.hits += 1;
            track.misses_in_a_row = 0;
            track.last_output_score = det.score;
            track.has_velocity |= det.bbox.velocity.is_some();
            result.associations.push(AssociationEvent {
                track_id: track.id,
                track_category: track.category,
                detection_category: det.category,
                stage,
            });
            result.outputs.push(TrackOutput {
                track_id: track.id,
                category: track.category,
                bbox: track.bbox(),
                score: det.score,
                source: OutputSource::Updated,
            });
        }

        for (track, _) in self
            .tracks
            .iter_mut()
            .zip(&matched_track)
            .filter(|(_, &m)| !m)
        {
            track.misses_in_a_row += 1;
            track.score = update_score(track.score, 0.0, &self.cfg.motion);
            if track.misses_in_a_row <= self.cfg.max_predicted_emission {
                result.outputs.push(TrackOutput {
                    track_id: track.id,
                    category: track.category,
                    bbox: track.bbox(),
                    score: self.cfg.predicted_score_factor * track.last_output_score,
                    source: OutputSource::Predicted,
                });
            }
        }

        for &di in &assoc.assignment.unmatched_dets {
            let track = self.spawn(&dets[di], frame)?;
            result.born.push(track.id);
            result.outputs.push(TrackOutput {
                track_id: track.id,
                category: track.category,
                bbox: track.bbox(),
                score: dets[di].score,
                source: OutputSource::Updated,
            });
            self.tracks.push(track);
        }

        if let Some(threshold) = self.cfg.output_nms_threshold {
            result.outputs = suppress_outputs(result.outputs, threshold);
        }
        result.outputs.sort_by_key(|o| o.track_id);

        let (max_age, del) = (self.cfg.max_age, self.cfg.deletion_threshold);
        self.tracks.retain(|t| {
            let dead = t.misses_in_a_row > max_age || t.last_output_score <= del;
            if dead {
                result.died.push(t.id);
            }
            !dead
        });
        result.died.sort_unstable();
        result.born.sort_unstable();
        Ok(result)
    }

    /// Runs the filter forward to the current frame. Skipped frames count as
    /// misses.
    fn advance(&mut self, elapsed: u64) {
        let steps = elapsed.min(self.cfg.max_age as u64 + 2);
        for track in &mut self.tracks {
            for _ in 0..steps {
                track.kalman = predict(&track.kalman, &self.cfg.motion);
            }
            for _ in 1..steps {
                track.misses_in_a_row += 1;
                track.score = update_score(track.score, 0.0, &self.cfg.motion);
            }
            track.age += elapsed as u32;
        }
    }

    fn associate(
        &self,
        frame: u64,
        dets: &[Detection],
        source_indices: &[usize],
    ) -> Result<CascadeResult> {
        let cfg = &self.cfg;
        let gate = if cfg.category_gating {
            let det_cats: Vec<CategoryId> = dets.iter().map(|d| d.category).collect();
            let track_cats: Vec<CategoryId> = self.tracks.iter().map(|t| t.category).collect();
            category_gate(&det_cats, &track_cats)
        } else {
            CostMatrix::zeros(dets.len(), self.tracks.len())
        };

        let motion = || -> Result<CostMatrix> {
            let det_boxes: Vec<Box3D> = dets.iter().map(|d| d.bbox).collect();
            let predicted: Vec<(Box3D, f64)> = self
                .tracks
                .iter()
                .map(|t| (t.bbox(), t.score.gamma))
                .collect();
            motion_cost_matrix(&det_boxes, &predicted).compose(&gate)
        };
        let appearance = || -> Result<CostMatrix> {
            let track_ids: Vec<u64> = self.tracks.iter().map(|t| t.id).collect();
            let track_features: Vec<Option<Vec<f32>>> = self
                .tracks
                .iter()
                .map(|t| t.appearance.select(&cfg.feature_strategy).ok())
                .collect();
            let query = AppearanceQuery {
                frame,
                detections: dets,
                source_indices,
                track_ids: &track_ids,
                track_features: &track_features,
            };
            self.appearance_model.cost_matrix(&query)?.compose(&gate)
        };

        let single = |cost: CostMatrix, threshold: f64| {
            let assignment = solve(&cost, threshold);
            let stages = vec![Stage::First; assignment.matches.len()];
            CascadeResult { assignment, stages }
        };
        let (mo_t, app_t) = (cfg.motion_threshold, cfg.appearance_threshold);
        match (cfg.modality, cfg.order) {
            (Modality::Motion, _) => Ok(single(motion()?, mo_t)),
            (Modality::Appearance, _) => Ok(single(appearance()?, app_t)),
            (Modality::Fused, AssociationOrder::MotionFirst) => {
                cascade(&motion()?, mo_t, &appearance()?, app_t)
            }
            (Modality::Fused, AssociationOrder::AppearanceFirst) => {
                cascade(&appearance()?, app_t, &motion()?, mo_t)
            }
        }
    }

    fn spawn(&mut self, det: &Detection, frame: u64) -> Result<Track> {
        let motion = &self.cfg.motion;
        let mut appearance = AppearanceMemory::new(self.cfg.history_depth);
        record_appearance(&mut appearance, det, frame)?;
        let id = self.next_id;
        self.next_id += 1;
        Ok(Track {
            id,
            category: det.category,
            kalman: KalmanState::from_box(&det.bbox, motion),
            score: update_score(TrackScore::new(motion), det.score, motion),
            appearance,
            hits: 1,
            misses_in_a_row: 0,
            age: 0,
            last_output_score: det.score,
            has_velocity: det.bbox.velocity.is_some(),
        })
    }
}

fn record_appearance(memory: &mut AppearanceMemory, det: &Detection, frame: u64) -> Result<()> {
    if let Some(e) = &det.embedding {
        memory.record(AppearanceFeature {
            embedding: e.clone(),
            occlusion: det.occlusion.unwrap_or_default(),
            frame,
        })?;
    }
    Ok(())
}

/// Output suppression ranks detection-backed states ahead of predicted ones,
/// then by score, then by id.
fn suppress_outputs(outputs: Vec<TrackOutput>, threshold: f64) -> Vec<TrackOutput> {
    let mut ranked = outputs;
    ranked.sort_by(|a, b| {
        (a.source == OutputSource::Predicted)
            .cmp(&(b.source == OutputSource::Predicted))
            .then(b.score.total_cmp(&a.score))
            .then(a.track_id.cmp(&b.track_id))
    });
    let keep = suppress_ranked(&ranked, threshold, |o| (&o.bbox, o.category));
    let mut flags = vec![false; ranked.len()];
    for k in keep {
        flags[k] = true;
    }
    ranked
        .into_iter()
        .zip(flags)
        .filter_map(|(o, keep)| keep.then_some(o))
        .collect()
}

/// Steps a fresh tracker over consecutive frames `0, 1, 2, ...`.
pub fn run_sequence<I>(frames: I, cfg: &TrackerConfig) -> Result<Vec<FrameResult>>
where
    I: IntoIterator,
    I::Item: AsRef<[Detection]>,
{
    let mut tracker = Tracker::new(cfg.clone())?;
    frames
        .into_iter()
        .enumerate()
        .map(|(k, dets)| tracker.step(k as u64, dets.as_ref()))
        .collect()
}
