use std::cmp::Ordering;

use crate::appearance::OcclusionState;
use crate::geometry::Box3D;

/// Integer class label. Only equality matters for gating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CategoryId(pub u32);

/// One detector output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: Box3D,
    pub score: f64,
    pub category: CategoryId,
    pub embedding: Option<Vec<f32>>,
    pub occlusion: Option<OcclusionState>,
}

impl Detection {
    pub fn new(bbox: Box3D, score: f64, category: CategoryId) -> Self {
        Self {
            bbox,
            score,
            category,
            embedding: None,
            occlusion: None,
        }
    }

    pub fn with_embedding(mut self, embedding: Vec<f32>, occlusion: OcclusionState) -> Self {
        self.embedding = Some(embedding);
        self.occlusion = Some(occlusion);
        self
    }
}

/// Total order used to canonicalize a frame: score descending, then box
/// fields, category, occlusion and embedding.
pub fn canonical_cmp(a: &Detection, b: &Detection) -> Ordering {
    let fields = |d: &Detection| [d.bbox.x, d.bbox.y, d.bbox.z, d.bbox.w, d.bbox.l, d.bbox.h, d.bbox.yaw];
    b.score
        .total_cmp(&a.score)
        .then_with(|| {
            fields(a)
                .iter()
                .zip(fields(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.bbox.velocity.map(|v| v.map(f64::to_bits)).cmp(&b.bbox.velocity.map(|v| v.map(f64::to_bits))))
        .then_with(|| a.category.cmp(&b.category))
        .then_with(|| a.occlusion.cmp(&b.occlusion))
        .then_with(|| {
            let bits = |d: &Detection| d.embedding.as_ref().map(|e| e.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            bits(a).cmp(&bits(b))
        })
}

pub fn sort_canonical(dets: &mut [Detection]) {
    dets.sort_by(canonical_cmp);
}
