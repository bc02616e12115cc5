//! Per-track appearance memory tagged with occlusion states, and the
//! feature-selection strategies that turn a history into one track feature.

use std::collections::VecDeque;

use crate::association::CostMatrix;
use crate::error::{Error, Result};

/// Four-level visibility, ordered from fully visible to fully occluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[repr(u8)]
pub enum OcclusionState {
    #[default]
    FullyVisible = 0,
    PartlyOccluded = 1,
    LargelyOccluded = 2,
    FullyOccluded = 3,
}

impl OcclusionState {
    pub const ALL: [OcclusionState; 4] = [
        OcclusionState::FullyVisible,
        OcclusionState::PartlyOccluded,
        OcclusionState::LargelyOccluded,
        OcclusionState::FullyOccluded,
    ];

    pub fn level(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for OcclusionState {
    type Error = Error;

    fn try_from(level: u8) -> Result<Self> {
        OcclusionState::ALL
            .get(level as usize)
            .copied()
            .ok_or_else(|| Error::config("occlusion", format!("level {level} not in 0..=3")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceFeature {
    pub embedding: Vec<f32>,
    pub occlusion: OcclusionState,
    pub frame: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSelection {
    /// Least-occluded stored feature, most recent on ties.
    Occ,
    /// Plain mean of the last `window` features.
    Ltf,
    /// Occlusion-weighted mean of the last `window` features.
    LtfOcc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureStrategy {
    pub variant: FeatureSelection,
    pub occlusion_weights: [f64; 4],
    pub window: usize,
}

impl Default for FeatureStrategy {
    fn default() -> Self {
        Self {
            variant: FeatureSelection::Occ,
            occlusion_weights: [1.0, 0.7, 0.3, 0.0],
            window: 3,
        }
    }
}

impl FeatureStrategy {
    pub fn new(variant: FeatureSelection) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("feature_window", "must be at least 1"));
        }
        let w = &self.occlusion_weights;
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::config("occlusion_weights", "weights must be finite and >= 0"));
        }
        if w.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::config(
                "occlusion_weights",
                "weights must not increase with occlusion level",
            ));
        }
        Ok(())
    }
}

pub const DEFAULT_HISTORY_DEPTH: usize = 16;

/// Ring buffer of the most recent features of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceMemory {
    capacity: usize,
    dim: Option<usize>,
    history: VecDeque<AppearanceFeature>,
}

impl Default for AppearanceMemory {
    fn default() -> Self {
        Self::new(DEFAULT_HISTORY_DEPTH)
    }
}

impl AppearanceMemory {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            dim: None,
            history: VecDeque::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn history(&self) -> impl Iterator<Item = &AppearanceFeature> {
        self.history.iter()
    }

    pub fn record(&mut self, feature: AppearanceFeature) -> Result<()> {
        let found = feature.embedding.len();
        match self.dim {
            Some(expected) if expected != found => {
                return Err(Error::DimensionMismatch { expected, found })
            }
            None if found == 0 => return Err(Error::DimensionMismatch { expected: 1, found }),
            _ => {}
        }
        self.dim = Some(found);
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(feature);
        Ok(())
    }

    pub fn select(&self, strategy: &FeatureStrategy) -> Result<Vec<f32>> {
        select_feature(self, strategy)
    }

    fn best_visible(&self) -> Result<&AppearanceFeature> {
        // min_by_key keeps the first minimum; scanning newest-first makes
        // that the most recent one.
        self.history
            .iter()
            .rev()
            .min_by_key(|f| f.occlusion)
            .ok_or(Error::EmptyHistory)
    }
}

pub fn select_feature(memory: &AppearanceMemory, strategy: &FeatureStrategy) -> Result<Vec<f32>> {
    if memory.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let window = strategy.window.max(1);
    let recent = memory.history.iter().skip(memory.len().saturating_sub(window));
    match strategy.variant {
        FeatureSelection::Occ => Ok(memory.best_visible()?.embedding.clone()),
        FeatureSelection::Ltf => Ok(weighted_mean(recent.map(|f| (f, 1.0)))
            .expect("window holds at least one feature")),
        FeatureSelection::LtfOcc => {
            let weighted = recent.map(|f| (f, strategy.occlusion_weights[f.occlusion.level() as usize]));
            match weighted_mean(weighted) {
                Some(e) => Ok(e),
                None => Ok(memory.best_visible()?.embedding.clone()),
            }
        }
    }
}

/// `None` when the weights sum to zero.
fn weighted_mean<'a>(items: impl Iterator<Item = (&'a AppearanceFeature, f64)>) -> Option<Vec<f32>> {
    let mut acc: Vec<f64> = Vec::new();
    let mut total = 0.0;
    for (f, w) in items {
        if acc.is_empty() {
            acc = vec![0.0; f.embedding.len()];
        }
        if w == 0.0 {
            continue;
        }
        total += w;
        for (a, &e) in acc.iter_mut().zip(&f.embedding) {
            *a += w * e as f64;
        }
    }
    (total > 0.0).then(|| acc.iter().map(|a| (a / total) as f32).collect())
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

pub fn cosine_similarity(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    dot / (norm(a) * norm(b))
}

/// `1 - cos(det_i, track_j)`, in `[0, 2]`.
pub fn appearance_cost_matrix<D, T>(det_feats: &[D], track_feats: &[T]) -> Result<CostMatrix>
where
    D: AsRef<[f32]>,
    T: AsRef<[f32]>,
{
    let dim = det_feats
        .first()
        .map(|d| d.as_ref().len())
        .or_else(|| track_feats.first().map(|t| t.as_ref().len()));
    let check = |v: &[f32], idx: usize| -> Result<f64> {
        if let Some(expected) = dim {
            if v.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: v.len(),
                });
            }
        }
        let n = norm(v);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm(idx));
        }
        Ok(n)
    };
    let det_norms = det_feats
        .iter()
        .enumerate()
        .map(|(i, d)| check(d.as_ref(), i))
        .collect::<Result<Vec<_>>>()?;
    let track_norms = track_feats
        .iter()
        .enumerate()
        .map(|(j, t)| check(t.as_ref(), j))
        .collect::<Result<Vec<_>>>()?;

    Ok(CostMatrix::from_fn(det_feats.len(), track_feats.len(), |i, j| {
        let dot: f64 = det_feats[i]
            .as_ref()
            .iter()
            .zip(track_feats[j].as_ref())
            .map(|(&x, &y)| x as f64 * y as f64)
            .sum();
        (1.0 - dot / (det_norms[i] * track_norms[j])).clamp(0.0, 2.0)
    }))
}
