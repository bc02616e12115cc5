use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::generate::{generate, SyntheticData};
use super::scenario::Scenario;
use crate::appearance::FeatureSelection;
use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::io::{load_config, tracks_to_predictions, LoadedConfig, Profile, TrackRecord};
use crate::metrics::{evaluate, EvalConfig, MetricsReport};
use crate::tracker::{AssociationOrder, FrameResult, Modality, Tracker, TrackerConfig};

/// Which cues a cell uses. The non-OCC appearance variants run with the
/// occlusion labels stripped from the detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Ap,
    Mo,
    ApMo,
    ApMoOcc,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Ap, Variant::Mo, Variant::ApMo, Variant::ApMoOcc];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Ap => "AP",
            Variant::Mo => "MO",
            Variant::ApMo => "AP+MO",
            Variant::ApMoOcc => "AP+MO+OCC",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("variants", format!("unknown variant {s:?}")))
    }

    fn uses_occlusion(self) -> bool {
        self == Variant::ApMoOcc
    }
}

fn strategy_label(s: FeatureSelection) -> &'static str {
    match s {
        FeatureSelection::Occ => "OCC",
        FeatureSelection::Ltf => "LTF",
        FeatureSelection::LtfOcc => "LTF_OCC",
    }
}

pub fn parse_strategy(s: &str) -> Result<FeatureSelection> {
    [FeatureSelection::Occ, FeatureSelection::Ltf, FeatureSelection::LtfOcc]
        .into_iter()
        .find(|v| strategy_label(*v).eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::config("strategies", format!("unknown strategy {s:?}")))
}

/// One configuration of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub variant: Variant,
    pub strategy: FeatureSelection,
    pub order: AssociationOrder,
    pub gating: bool,
}

impl Cell {
    pub fn new(variant: Variant, strategy: FeatureSelection) -> Self {
        Self {
            variant,
            strategy,
            order: AssociationOrder::MotionFirst,
            gating: true,
        }
    }

    pub fn label(&self) -> String {
        let order = match self.order {
            AssociationOrder::MotionFirst => "MO>AP",
            AssociationOrder::AppearanceFirst => "AP>MO",
        };
        let gate = if self.gating { "CL" } else { "NCL" };
        format!("{} {} {order} {gate}", self.variant.label(), strategy_label(self.strategy))
    }

    pub fn apply(&self, base: &TrackerConfig) -> TrackerConfig {
        let mut cfg = base.clone();
        cfg.modality = match self.variant {
            Variant::Ap => Modality::Appearance,
            Variant::Mo => Modality::Motion,
            Variant::ApMo | Variant::ApMoOcc => Modality::Fused,
        };
        cfg.feature_strategy.variant = self.strategy;
        cfg.order = self.order;
        cfg.category_gating = self.gating;
        cfg
    }

    /// Prepares the detections this cell sees.
    pub fn inputs(&self, frames: &[Vec<Detection>]) -> Vec<Vec<Detection>> {
        let mut frames = frames.to_vec();
        if !self.variant.uses_occlusion() {
            for d in frames.iter_mut().flatten() {
                d.occlusion = None;
            }
        }
        frames
    }
}

/// Cartesian product of the listed settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub variants: Vec<Variant>,
    pub strategies: Vec<FeatureSelection>,
    pub orders: Vec<AssociationOrder>,
    pub gating: Vec<bool>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            strategies: vec![FeatureSelection::Occ, FeatureSelection::Ltf, FeatureSelection::LtfOcc],
            orders: vec![AssociationOrder::MotionFirst, AssociationOrder::AppearanceFirst],
            gating: vec![true, false],
        }
    }
}

impl Grid {
    /// Cells in lexicographic order of (variant, strategy, order, gating)
    /// as listed. Motion-only cells ignore the strategy, so only the first
    /// strategy is kept for them.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            let strategies = if variant == Variant::Mo {
                &self.strategies[..self.strategies.len().min(1)]
            } else {
                &self.strategies[..]
            };
            for &strategy in strategies {
                for &order in &self.orders {
                    for &gating in &self.gating {
                        out.push(Cell {
                            variant,
                            strategy,
                            order,
                            gating,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Tracker outputs and metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub results: Vec<FrameResult>,
    pub report: MetricsReport,
    pub summary: Summary,
}

/// Category-aggregated figures: HOTA and MOTA averaged over categories,
/// counts summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub hota: f64,
    pub mota: f64,
    pub ids: usize,
    pub fp: usize,
    pub fn_count: usize,
}

impl Summary {
    pub fn of(report: &MetricsReport) -> Self {
        let n = report.categories.len().max(1) as f64;
        Self {
            hota: report.categories.iter().map(|c| c.hota).sum::<f64>() / n,
            mota: report.categories.iter().map(|c| c.mota).sum::<f64>() / n,
            ids: report.categories.iter().map(|c| c.ids).sum(),
            fp: report.categories.iter().map(|c| c.fp).sum(),
            fn_count: report.categories.iter().map(|c| c.fn_count).sum(),
        }
    }
}

pub fn track_frames(frames: &[Vec<Detection>], cfg: &TrackerConfig) -> Result<Vec<FrameResult>> {
    let mut tracker = Tracker::new(cfg.clone())?;
    frames
        .iter()
        .enumerate()
        .map(|(f, dets)| tracker.step(f as u64, dets))
        .collect()
}

pub fn records(results: &[FrameResult]) -> Vec<TrackRecord> {
    let mut out: Vec<TrackRecord> = results
        .iter()
        .flat_map(|r| {
            r.outputs.iter().map(move |o| TrackRecord {
                frame: r.frame,
                output: o.clone(),
            })
        })
        .collect();
    out.sort_by_key(|r| (r.frame, r.output.track_id));
    out
}

/// Tracks already generated data under one cell and evaluates it.
pub fn run_cell(data: &SyntheticData, cell: &Cell, base: &TrackerConfig, eval: &EvalConfig) -> Result<PipelineRun> {
    let results = track_frames(&cell.inputs(&data.detections), &cell.apply(base))?;
    let preds = tracks_to_predictions(&records(&results));
    let report = evaluate(&data.ground_truth, &preds, eval)?;
    let summary = Summary::of(&report);
    Ok(PipelineRun {
        results,
        report,
        summary,
    })
}

/// Synthesizes, tracks and evaluates.
pub fn run_pipeline(
    scenario: &Scenario,
    seed: u64,
    cell: &Cell,
    base: &TrackerConfig,
    eval: &EvalConfig,
) -> Result<PipelineRun> {
    run_cell(&generate(scenario, seed)?, cell, base, eval)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub scenario: String,
    pub seed: u64,
    pub cell: Cell,
    pub summary: Summary,
}

/// Runs every (scenario, seed, cell) combination in parallel. Rows come back
/// in (scenario, seed, cell) order regardless of scheduling.
pub fn ablate(
    scenarios: &[Scenario],
    seeds: &[u64],
    grid: &Grid,
    base: &TrackerConfig,
    eval: &EvalConfig,
) -> Result<Vec<AblationRow>> {
    let cells = grid.cells();
    let data: Vec<(usize, u64, SyntheticData)> = scenarios
        .par_iter()
        .enumerate()
        .flat_map_iter(|(si, s)| seeds.iter().map(move |&seed| (si, seed, s)))
        .map(|(si, seed, s)| generate(s, seed).map(|d| (si, seed, d)))
        .collect::<Result<_>>()?;
    data.par_iter()
        .flat_map_iter(|job| cells.iter().map(move |cell| (job, cell)))
        .map(|((si, seed, d), cell)| {
            run_cell(d, cell, base, eval).map(|run| AblationRow {
                scenario: scenarios[*si].name.clone(),
                seed: *seed,
                cell: *cell,
                summary: run.summary,
            })
        })
        .collect()
}

/// File name of the grid description inside an ablation directory.
pub const PLAN_FILE: &str = "ablation.toml";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    variants: Option<Vec<String>>,
    #[serde(default)]
    strategies: Option<Vec<String>>,
    #[serde(default)]
    orders: Option<Vec<String>>,
    #[serde(default)]
    gating: Option<Vec<bool>>,
    /// Tracker config file relative to the directory.
    #[serde(default)]
    config: Option<PathBuf>,
}

/// Everything needed to run an ablation: scenarios, seeds, grid and the
/// base tracker configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationPlan {
    pub scenarios: Vec<Scenario>,
    pub seeds: Vec<u64>,
    pub grid: Grid,
    pub config: LoadedConfig,
}

impl AblationPlan {
    /// Reads `dir/ablation.toml` (optional) and every other `*.toml` in
    /// `dir` as a scenario, in file-name order. Without a plan file the full
    /// default grid runs on seed 0 with the synthetic profile.
    pub fn load(dir: &Path) -> Result<Self> {
        let plan_path = dir.join(PLAN_FILE);
        let raw = if plan_path.exists() {
            toml::from_str::<RawPlan>(&fs::read_to_string(&plan_path)?)
                .map_err(|e| Error::config(PLAN_FILE, e.message().to_string()))?
        } else {
            toml::from_str::<RawPlan>("").expect("all fields optional")
        };
        let config_path = raw.config.as_ref().map(|p| dir.join(p));
        let config = match &config_path {
            Some(p) => load_config(p)?,
            None => LoadedConfig::from_profile(Profile::Synthetic),
        };

        let mut files: Vec<PathBuf> = fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| {
            p.extension().is_some_and(|e| e == "toml")
                && p.file_name().is_some_and(|n| n != PLAN_FILE)
                && Some(p) != config_path.as_ref()
        });
        files.sort();
        let scenarios = files.iter().map(|p| Scenario::load(p)).collect::<Result<Vec<_>>>()?;
        if scenarios.is_empty() {
            return Err(Error::config("scenarios", format!("no scenario files in {}", dir.display())));
        }

        let defaults = Grid::default();
        let grid = Grid {
            variants: parse_all(raw.variants, Variant::parse)?.unwrap_or(defaults.variants),
            strategies: parse_all(raw.strategies, parse_strategy)?.unwrap_or(defaults.strategies),
            orders: parse_all(raw.orders, parse_order)?.unwrap_or(defaults.orders),
            gating: raw.gating.unwrap_or(defaults.gating),
        };
        if grid.cells().is_empty() {
            return Err(Error::config(PLAN_FILE, "the grid has no cells"));
        }
        Ok(Self {
            scenarios,
            seeds: raw.seeds.unwrap_or_else(|| vec![0]),
            grid,
            config,
        })
    }

    pub fn run(&self) -> Result<Vec<AblationRow>> {
        ablate(&self.scenarios, &self.seeds, &self.grid, &self.config.tracker, &self.config.eval)
    }
}

fn parse_all<T>(items: Option<Vec<String>>, f: fn(&str) -> Result<T>) -> Result<Option<Vec<T>>> {
    items.map(|v| v.iter().map(|s| f(s)).collect()).transpose()
}

pub fn parse_order(s: &str) -> Result<AssociationOrder> {
    match s {
        "motion_first" | "MO>AP" => Ok(AssociationOrder::MotionFirst),
        "appearance_first" | "AP>MO" => Ok(AssociationOrder::AppearanceFirst),
        other => Err(Error::config("orders", format!("unknown order {other:?}"))),
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median HOTA / MOTA / IDS per (scenario, cell) across seeds, as a
/// column-aligned table.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        let k = (r.scenario.clone(), r.cell.label());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut table = vec![["scenario", "cell", "seeds", "HOTA", "MOTA", "IDS"]
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    for (scenario, label) in keys {
        let group: Vec<&AblationRow> = rows
            .iter()
            .filter(|r| r.scenario == scenario && r.cell.label() == label)
            .collect();
        let mut hota: Vec<f64> = group.iter().map(|r| r.summary.hota).collect();
        let mut mota: Vec<f64> = group.iter().map(|r| r.summary.mota).collect();
        let mut ids: Vec<f64> = group.iter().map(|r| r.summary.ids as f64).collect();
        table.push(vec![
            scenario,
            label,
            group.len().to_string(),
            format!("{:.2}", 100.0 * median(&mut hota)),
            format!("{:.2}", 100.0 * median(&mut mota)),
            format!("{}", median(&mut ids)),
        ]);
    }
    crate::io::align_rows(&table)
}
