use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::CategoryTable;
use crate::appearance::FeatureSelection;
use crate::error::{Error, Result};
use crate::metrics::EvalConfig;
use crate::motion::{NoiseProfile, VelocityMeasurement};
use crate::tracker::{AssociationOrder, Modality, TrackerConfig};

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Kitti,
    Nuscenes,
    /// Tuned for the scenarios produced by the harness (unit-scale costs,
    /// clean embeddings).
    Synthetic,
}

impl Profile {
    pub const NAMES: [&'static str; 3] = ["kitti", "nuscenes", "synthetic"];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "kitti" => Ok(Profile::Kitti),
            "nuscenes" => Ok(Profile::Nuscenes),
            "synthetic" => Ok(Profile::Synthetic),
            other => Err(Error::config(
                "profile",
                format!("unknown profile {other:?} (known: {})", Self::NAMES.join(", ")),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Kitti => "kitti",
            Profile::Nuscenes => "nuscenes",
            Profile::Synthetic => "synthetic",
        }
    }

    pub fn tracker(self) -> TrackerConfig {
        let mut cfg = TrackerConfig::default();
        match self {
            Profile::Kitti => {}
            Profile::Nuscenes => {
                cfg.motion_threshold = 0.02;
                cfg.nms_threshold = 0.08;
                cfg.max_predicted_emission = 2;
                cfg.output_nms_threshold = Some(0.08);
                cfg.motion.dt = 0.5;
            }
            Profile::Synthetic => {
                cfg.motion_threshold = 0.6;
                cfg.appearance_threshold = 0.3;
                cfg.motion.theta = 0.01;
                cfg.max_predicted_emission = 2;
            }
        }
        cfg
    }

    pub fn categories(self) -> CategoryTable {
        match self {
            Profile::Nuscenes => CategoryTable::nuscenes(),
            Profile::Kitti | Profile::Synthetic => CategoryTable::kitti(),
        }
    }

    pub fn eval(self) -> EvalConfig {
        match self {
            Profile::Nuscenes => EvalConfig::center_distance(),
            Profile::Kitti | Profile::Synthetic => EvalConfig::default(),
        }
    }
}

/// Detector-specific confidence filter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    BevFusion,
    FocalsConv,
    CenterPoint,
}

impl Detector {
    pub const NAMES: [&'static str; 3] = ["bevfusion", "focalsconv", "centerpoint"];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bevfusion" => Ok(Detector::BevFusion),
            "focalsconv" => Ok(Detector::FocalsConv),
            "centerpoint" => Ok(Detector::CenterPoint),
            other => Err(Error::config(
                "detector",
                format!("unknown detector {other:?} (known: {})", Self::NAMES.join(", ")),
            )),
        }
    }

    pub fn confidence_threshold(self) -> f64 {
        match self {
            Detector::BevFusion => 0.03,
            Detector::FocalsConv => 0.12,
            Detector::CenterPoint => 0.14,
        }
    }
}

/// Tracker configuration plus the file-level settings that travel with it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub profile: Profile,
    pub tracker: TrackerConfig,
    pub categories: CategoryTable,
    pub eval: EvalConfig,
}

impl LoadedConfig {
    pub fn from_profile(profile: Profile) -> Self {
        Self {
            profile,
            tracker: profile.tracker(),
            categories: profile.categories(),
            eval: profile.eval(),
        }
    }
}

/// Keys accepted at the top level of a config file.
pub const CONFIG_KEYS: &[&str] = &[
    "profile",
    "detector",
    "categories",
    "nms_threshold",
    "confidence_threshold",
    "motion_threshold",
    "appearance_threshold",
    "deletion_threshold",
    "max_age",
    "max_predicted_emission",
    "predicted_score_factor",
    "output_nms_threshold",
    "feature_strategy",
    "feature_window",
    "occlusion_weights",
    "history_depth",
    "modality",
    "order",
    "category_gating",
    "motion",
];

/// Keys accepted in the `[motion]` table.
pub const MOTION_KEYS: &[&str] = &[
    "dt",
    "theta",
    "gamma_init",
    "gamma_min",
    "gamma_max",
    "velocity",
    "birth_inflation",
    "process_noise",
    "measurement_noise",
];

const NOISE_KEYS: &[&str] = &["position", "velocity", "acceleration", "dims", "yaw"];

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    profile: Option<String>,
    detector: Option<String>,
    categories: Option<Vec<String>>,
    nms_threshold: Option<f64>,
    confidence_threshold: Option<f64>,
    motion_threshold: Option<f64>,
    appearance_threshold: Option<f64>,
    deletion_threshold: Option<f64>,
    max_age: Option<u32>,
    max_predicted_emission: Option<u32>,
    predicted_score_factor: Option<f64>,
    /// A negative value disables output suppression.
    output_nms_threshold: Option<f64>,
    feature_strategy: Option<String>,
    feature_window: Option<usize>,
    occlusion_weights: Option<[f64; 4]>,
    history_depth: Option<usize>,
    modality: Option<String>,
    order: Option<String>,
    category_gating: Option<bool>,
    motion: Option<RawMotion>,
}

#[derive(Debug, Default, Deserialize)]
struct RawMotion {
    dt: Option<f64>,
    theta: Option<f64>,
    gamma_init: Option<f64>,
    gamma_min: Option<f64>,
    gamma_max: Option<f64>,
    velocity: Option<String>,
    birth_inflation: Option<f64>,
    process_noise: Option<RawNoise>,
    measurement_noise: Option<RawNoise>,
}

#[derive(Debug, Default, Deserialize)]
struct RawNoise {
    position: Option<f64>,
    velocity: Option<f64>,
    acceleration: Option<f64>,
    dims: Option<f64>,
    yaw: Option<f64>,
}

impl RawNoise {
    fn apply(self, n: &mut NoiseProfile) {
        set(&mut n.position, self.position);
        set(&mut n.velocity, self.velocity);
        set(&mut n.acceleration, self.acceleration);
        set(&mut n.dims, self.dims);
        set(&mut n.yaw, self.yaw);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn check_keys(table: &toml::Table, allowed: &[&str], prefix: &str) -> Result<()> {
    for (key, value) in table {
        let full = format!("{prefix}{key}");
        if !allowed.contains(&key.as_str()) {
            return Err(Error::config(full, "unknown key"));
        }
        let nested = match key.as_str() {
            "motion" if prefix.is_empty() => Some(MOTION_KEYS),
            "process_noise" | "measurement_noise" if prefix == "motion." => Some(NOISE_KEYS),
            _ => None,
        };
        if let Some(keys) = nested {
            let sub = value
                .as_table()
                .ok_or_else(|| Error::config(full.clone(), "expected a table"))?;
            check_keys(sub, keys, &format!("{full}."))?;
        }
    }
    Ok(())
}

fn enum_value<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::config(key, format!("unknown value {value:?} (expected one of {})", names.join(", ")))
        })
}

/// Parses a TOML config: a `profile` name (default `kitti`) whose defaults
/// are overridden key by key, then validated as a whole.
pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
    check_keys(&table, CONFIG_KEYS, "")?;
    let raw: RawConfig = table.try_into().map_err(|e: toml::de::Error| {
        Error::config("<file>", e.message().to_string())
    })?;

    let profile = Profile::parse(raw.profile.as_deref().unwrap_or("kitti"))?;
    let mut loaded = LoadedConfig::from_profile(profile);
    let cfg = &mut loaded.tracker;

    if let Some(names) = raw.categories {
        loaded.categories = CategoryTable::new(names)?;
    }
    if let Some(d) = raw.detector {
        cfg.confidence_threshold = Detector::parse(&d)?.confidence_threshold();
    }
    set(&mut cfg.nms_threshold, raw.nms_threshold);
    set(&mut cfg.confidence_threshold, raw.confidence_threshold);
    set(&mut cfg.motion_threshold, raw.motion_threshold);
    set(&mut cfg.appearance_threshold, raw.appearance_threshold);
    set(&mut cfg.deletion_threshold, raw.deletion_threshold);
    set(&mut cfg.max_age, raw.max_age);
    set(&mut cfg.max_predicted_emission, raw.max_predicted_emission);
    set(&mut cfg.predicted_score_factor, raw.predicted_score_factor);
    if let Some(t) = raw.output_nms_threshold {
        cfg.output_nms_threshold = (t >= 0.0).then_some(t);
    }
    if let Some(s) = raw.feature_strategy {
        cfg.feature_strategy.variant = enum_value(
            "feature_strategy",
            &s,
            &[
                ("occ", FeatureSelection::Occ),
                ("ltf", FeatureSelection::Ltf),
                ("ltf_occ", FeatureSelection::LtfOcc),
            ],
        )?;
    }
    set(&mut cfg.feature_strategy.window, raw.feature_window);
    set(&mut cfg.feature_strategy.occlusion_weights, raw.occlusion_weights);
    set(&mut cfg.history_depth, raw.history_depth);
    if let Some(m) = raw.modality {
        cfg.modality = enum_value(
            "modality",
            &m,
            &[
                ("appearance", Modality::Appearance),
                ("motion", Modality::Motion),
                ("fused", Modality::Fused),
            ],
        )?;
    }
    if let Some(o) = raw.order {
        cfg.order = enum_value(
            "order",
            &o,
            &[
                ("motion_first", AssociationOrder::MotionFirst),
                ("appearance_first", AssociationOrder::AppearanceFirst),
            ],
        )?;
    }
    set(&mut cfg.category_gating, raw.category_gating);

    if let Some(m) = raw.motion {
        let mc = &mut cfg.motion;
        set(&mut mc.dt, m.dt);
        set(&mut mc.theta, m.theta);
        set(&mut mc.gamma_init, m.gamma_init);
        set(&mut mc.gamma_clamp.0, m.gamma_min);
        set(&mut mc.gamma_clamp.1, m.gamma_max);
        set(&mut mc.birth_inflation, m.birth_inflation);
        if let Some(v) = m.velocity {
            mc.velocity_measurement = enum_value(
                "motion.velocity",
                &v,
                &[
                    ("if_present", VelocityMeasurement::IfPresent),
                    ("required", VelocityMeasurement::Required),
                    ("ignored", VelocityMeasurement::Ignored),
                ],
            )?;
        }
        if let Some(n) = m.process_noise {
            n.apply(&mut mc.process_noise);
        }
        if let Some(n) = m.measurement_noise {
            n.apply(&mut mc.measurement_noise);
        }
    }

    loaded.tracker.validate()?;
    Ok(loaded)
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    parse_config(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(err: Error) -> String {
        match err {
            Error::Config { key, .. } => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn kitti_defaults() {
        let c = parse_config("profile = \"kitti\"").unwrap().tracker;
        assert_eq!(c.motion_threshold, 0.01);
        assert_eq!(c.appearance_threshold, 1.4);
        assert_eq!(c.max_age, 15);
        assert_eq!(c.nms_threshold, 0.1);
        assert_eq!(c.deletion_threshold, 0.0);
        assert_eq!(c.output_nms_threshold, None);
    }

    #[test]
    fn nuscenes_defaults() {
        let l = parse_config("profile = \"nuscenes\"").unwrap();
        let c = l.tracker;
        assert_eq!(c.motion_threshold, 0.02);
        assert_eq!(c.appearance_threshold, 1.4);
        assert_eq!(c.nms_threshold, 0.08);
        assert_eq!(c.max_predicted_emission, 2);
        assert_eq!(c.predicted_score_factor, 0.05);
        assert_eq!(c.output_nms_threshold, Some(0.08));
        assert_eq!(c.max_age, 15);
        assert_eq!(l.categories.len(), 7);
    }

    #[test]
    fn detector_presets() {
        for (name, t) in [("bevfusion", 0.03), ("focalsconv", 0.12), ("centerpoint", 0.14)] {
            let text = format!("profile = \"nuscenes\"\ndetector = \"{name}\"");
            assert_eq!(parse_config(&text).unwrap().tracker.confidence_threshold, t);
        }
    }

    #[test]
    fn overrides_apply() {
        let text = r#"
            profile = "kitti"
            max_age = 4
            feature_strategy = "ltf_occ"
            order = "appearance_first"
            categories = ["car", "van"]
            [motion]
            dt = 0.05
            [motion.process_noise]
            yaw = 0.5
        "#;
        let l = parse_config(text).unwrap();
        assert_eq!(l.tracker.max_age, 4);
        assert_eq!(l.tracker.feature_strategy.variant, FeatureSelection::LtfOcc);
        assert_eq!(l.tracker.order, AssociationOrder::AppearanceFirst);
        assert_eq!(l.tracker.motion.dt, 0.05);
        assert_eq!(l.tracker.motion.process_noise.yaw, 0.5);
        assert_eq!(l.categories.names(), ["car", "van"]);
    }

    #[test]
    fn validation_errors_name_the_key() {
        assert_eq!(key_of(parse_config("max_age = 0").unwrap_err()), "max_age");
        assert_eq!(key_of(parse_config("max_agee = 3").unwrap_err()), "max_agee");
        assert_eq!(
            key_of(parse_config("[motion]\nspeed = 1").unwrap_err()),
            "motion.speed"
        );
        assert_eq!(
            key_of(parse_config("[motion.process_noise]\nfoo = 1").unwrap_err()),
            "motion.process_noise.foo"
        );
        assert_eq!(key_of(parse_config("profile = \"waymo\"").unwrap_err()), "profile");
        assert_eq!(key_of(parse_config("modality = \"lidar\"").unwrap_err()), "modality");
        assert_eq!(
            key_of(parse_config("predicted_score_factor = 0").unwrap_err()),
            "predicted_score_factor"
        );
        assert_eq!(key_of(parse_config("[motion]\ndt = -1").unwrap_err()), "dt");
    }

    #[test]
    fn negative_output_nms_disables() {
        let c = parse_config("profile = \"nuscenes\"\noutput_nms_threshold = -1").unwrap();
        assert_eq!(c.tracker.output_nms_threshold, None);
    }
}
