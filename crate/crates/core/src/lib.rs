//! Tracking-by-detection for 3D boxes with fused motion and appearance
//! association, plus the CLEAR / HOTA / AMOTA evaluation stack and a
//! synthetic scenario harness.

pub mod appearance;
pub mod association;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod motion;
pub mod metrics;
pub mod tracker;

pub use appearance::{FeatureSelection, FeatureStrategy, OcclusionState};
pub use association::{AssignmentResult, CostMatrix};
pub use detection::{CategoryId, Detection};
pub use error::{Error, Result};
pub use geometry::Box3D;
pub use harness::{Scenario, SyntheticData};
pub use io::{CategoryTable, LoadedConfig, Profile};
pub use metrics::{evaluate, EvalConfig, GtAnnotation, MetricsReport, PredRecord};
pub use motion::{KalmanState, MotionConfig, TrackScore};
pub use tracker::{
    AssociationOrder, FrameResult, Modality, OutputSource, Track, TrackOutput, Tracker,
    TrackerConfig,
};
