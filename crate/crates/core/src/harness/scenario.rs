use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::CategoryTable;

/// How an object moves. Headings follow the direction of travel unless the
/// object fixes a yaw.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Script {
    ConstantVelocity {
        velocity: [f64; 2],
    },
    ConstantAcceleration {
        velocity: [f64; 2],
        acceleration: [f64; 2],
    },
    /// Constant speed along a circular arc.
    Turn {
        speed: f64,
        heading: f64,
        yaw_rate: f64,
    },
    /// Alternates `go_frames` of motion at `velocity` with `stop_frames`
    /// standing still, starting with motion.
    StopAndGo {
        velocity: [f64; 2],
        go_frames: u64,
        stop_frames: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedObject {
    pub category: String,
    pub birth: u64,
    /// Last frame the object exists (inclusive).
    pub death: u64,
    /// Center at birth.
    pub start: [f64; 3],
    /// `[w, l, h]`; defaults by category.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<f64>,
    pub script: Script,
}

/// The object is seen at `level` from `start` to `end` inclusive. Level 3
/// removes its detections.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OcclusionEvent {
    pub object: usize,
    pub start: u64,
    pub end: u64,
    pub level: u8,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of the planar center jitter, meters.
    pub position_sigma: f64,
    pub dropout: f64,
    /// Expected false positives per frame (Poisson).
    pub fp_rate: f64,
    /// Uniform range of false-positive scores.
    pub fp_score: [f64; 2],
    /// `[x_min, x_max, y_min, y_max]` where false positives appear.
    pub fp_region: [f64; 4],
    /// Uniform range of true-detection scores.
    pub score: [f64; 2],
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            position_sigma: 0.0,
            dropout: 0.0,
            fp_rate: 0.0,
            fp_score: [0.1, 0.5],
            fp_region: [-50.0, 50.0, -50.0, 50.0],
            score: [1.0, 1.0],
        }
    }
}

/// Observed embedding: `normalize(w * base + (1 - w) * distractor + noise)`
/// with `w` the visibility weight of the current occlusion level.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingModel {
    pub dim: usize,
    /// Per-component standard deviation of additive noise.
    pub noise: f64,
    pub visibility: [f64; 4],
}

impl Default for EmbeddingModel {
    fn default() -> Self {
        Self {
            dim: 32,
            noise: 0.02,
            visibility: [1.0, 0.7, 0.3, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub frames: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_categories")]
    pub categories: Vec<String>,
    pub objects: Vec<ScriptedObject>,
    #[serde(default)]
    pub occlusions: Vec<OcclusionEvent>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub embedding: EmbeddingModel,
}

fn default_dt() -> f64 {
    0.1
}

fn default_categories() -> Vec<String> {
    CategoryTable::kitti().names().to_vec()
}

/// Typical `[w, l, h]` for a category token.
pub fn default_dims(category: &str) -> [f64; 3] {
    match category.to_ascii_lowercase().as_str() {
        "pedestrian" => [0.6, 0.8, 1.7],
        "cyclist" | "bicycle" | "motorcycle" => [0.6, 1.8, 1.7],
        "bus" | "truck" | "trailer" => [2.5, 10.0, 3.2],
        _ => [1.8, 4.2, 1.6],
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)
            .map_err(|e| Error::config("scenario", e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable")
    }

    pub fn category_table(&self) -> Result<CategoryTable> {
        CategoryTable::new(self.categories.iter().cloned())
    }

    pub fn dims_of(&self, object: usize) -> [f64; 3] {
        let o = &self.objects[object];
        o.dims.unwrap_or_else(|| default_dims(&o.category))
    }

    pub fn validate(&self) -> Result<()> {
        let table = self.category_table()?;
        if self.frames == 0 {
            return Err(Error::config("frames", "must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "must be positive"));
        }
        for (i, o) in self.objects.iter().enumerate() {
            let key = |field: &str| format!("objects[{i}].{field}");
            table
                .id(&o.category)
                .map_err(|e| Error::config(key("category"), e.to_string()))?;
            if o.birth > o.death || o.death >= self.frames {
                return Err(Error::config(key("death"), "need birth <= death < frames"));
            }
            if self.dims_of(i).iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return Err(Error::config(key("dims"), "must be positive"));
            }
            if let Script::StopAndGo { go_frames: 0, .. } = o.script {
                return Err(Error::config(key("script.go_frames"), "must be at least 1"));
            }
        }
        for (i, e) in self.occlusions.iter().enumerate() {
            let key = |field: &str| format!("occlusions[{i}].{field}");
            if e.object >= self.objects.len() {
                return Err(Error::config(key("object"), "no such object"));
            }
            if e.start > e.end {
                return Err(Error::config(key("end"), "must not precede start"));
            }
            if e.level > 3 {
                return Err(Error::config(key("level"), "must be in 0..=3"));
            }
        }
        let n = &self.noise;
        let prob = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(key, "must lie in [0, 1]"))
            }
        };
        prob("noise.dropout", n.dropout)?;
        for (key, [lo, hi]) in [("noise.score", n.score), ("noise.fp_score", n.fp_score)] {
            prob(key, lo)?;
            prob(key, hi)?;
            if lo > hi {
                return Err(Error::config(key, "empty range"));
            }
        }
        if !(n.position_sigma >= 0.0 && n.position_sigma.is_finite()) {
            return Err(Error::config("noise.position_sigma", "must be >= 0"));
        }
        if !(n.fp_rate >= 0.0 && n.fp_rate.is_finite()) {
            return Err(Error::config("noise.fp_rate", "must be >= 0"));
        }
        let r = n.fp_region;
        if !(r[0] <= r[1] && r[2] <= r[3]) {
            return Err(Error::config("noise.fp_region", "empty region"));
        }
        let m = &self.embedding;
        if m.dim == 0 {
            return Err(Error::config("embedding.dim", "must be at least 1"));
        }
        if !(m.noise >= 0.0 && m.noise.is_finite()) {
            return Err(Error::config("embedding.noise", "must be >= 0"));
        }
        for v in m.visibility {
            prob("embedding.visibility", v)?;
        }
        Ok(())
    }

    /// Occlusion level of `object` at `frame`; overlapping events take the
    /// heaviest level.
    pub fn occlusion_level(&self, object: usize, frame: u64) -> u8 {
        self.occlusions
            .iter()
            .filter(|e| e.object == object && (e.start..=e.end).contains(&frame))
            .map(|e| e.level)
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "one"
        frames = 20
        [[objects]]
        category = "Car"
        birth = 0
        death = 19
        start = [0.0, 0.0, 0.0]
        script = { kind = "constant_velocity", velocity = [1.0, 0.0] }
    "#;

    #[test]
    fn parses_minimal() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.dt, 0.1);
        assert_eq!(s.dims_of(0), [1.8, 4.2, 1.6]);
        assert_eq!(s.noise.score, [1.0, 1.0]);
    }

    #[test]
    fn rejects_bad_fields() {
        let bad = MINIMAL.replace("death = 19", "death = 20");
        assert!(matches!(Scenario::parse(&bad), Err(Error::Config { key, .. }) if key == "objects[0].death"));
        let bad = MINIMAL.replace("\"Car\"", "\"Tram\"");
        assert!(matches!(Scenario::parse(&bad), Err(Error::Config { key, .. }) if key == "objects[0].category"));
        let bad = format!("{MINIMAL}\nspeed = 3\n");
        assert!(Scenario::parse(&bad).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(Scenario::parse(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn occlusion_levels_overlap() {
        let mut s = Scenario::parse(MINIMAL).unwrap();
        s.occlusions = vec![
            OcclusionEvent { object: 0, start: 2, end: 6, level: 1 },
            OcclusionEvent { object: 0, start: 4, end: 5, level: 3 },
        ];
        assert_eq!(s.occlusion_level(0, 1), 0);
        assert_eq!(s.occlusion_level(0, 3), 1);
        assert_eq!(s.occlusion_level(0, 5), 3);
        assert_eq!(s.occlusion_level(0, 6), 1);
    }
}
