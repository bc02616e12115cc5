//! Synthetic scenarios with exact ground truth, the synth / track / eval
//! pipeline, and the ablation grid.

mod ablation;
mod generate;
mod scenario;
pub mod stock;

pub use ablation::{
    ablate, ablation_table, median, parse_order, parse_strategy, records, run_cell, run_pipeline, track_frames,
    AblationPlan, AblationRow, Cell, Grid, PipelineRun, Summary, Variant, PLAN_FILE,
};
pub use generate::{
    generate, pose, SyntheticData, DETECTIONS_FILE, EMBEDDINGS_FILE, GROUND_TRUTH_FILE,
};
pub use scenario::{
    default_dims, EmbeddingModel, NoiseModel, OcclusionEvent, Scenario, Script, ScriptedObject,
};
