//! Whitespace-delimited text formats for detections, ground truth and track
//! outputs, the binary embedding sidecar, the TOML tracker configuration and
//! metric reports.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! value read back is bit-identical to the one written. Missing optional
//! fields are written as `-`.

mod config;
mod formats;
mod report;

pub use config::{
    load_config, parse_config, Detector, LoadedConfig, Profile, CONFIG_KEYS, MOTION_KEYS,
};
pub use formats::{
    load_detections, load_embeddings, load_ground_truth, load_tracks, parse_detections,
    parse_ground_truth, parse_tracks, read_embeddings, tracks_to_predictions, write_detections,
    write_embeddings, write_ground_truth, write_tracks, TrackRecord,
};
pub use report::{align_rows, format_report, format_table, write_report};

use crate::detection::CategoryId;
use crate::error::{Error, Result};

/// Maps category tokens in data files to integer ids (the token's position).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    names: Vec<String>,
}

impl CategoryTable {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::config("categories", "at least one category is required"));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(char::is_whitespace) || n == "-" {
                return Err(Error::config("categories", format!("invalid token {n:?}")));
            }
            if names[..i].contains(n) {
                return Err(Error::config("categories", format!("duplicate token {n:?}")));
            }
        }
        Ok(Self { names })
    }

    pub fn kitti() -> Self {
        Self::new(["Car", "Pedestrian", "Cyclist"]).expect("static table")
    }

    pub fn nuscenes() -> Self {
        Self::new([
            "car",
            "pedestrian",
            "bicycle",
            "bus",
            "motorcycle",
            "trailer",
            "truck",
        ])
        .expect("static table")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, token: &str) -> Result<CategoryId> {
        self.names
            .iter()
            .position(|n| n == token)
            .map(|i| CategoryId(i as u32))
            .ok_or_else(|| Error::UnknownCategory {
                token: token.to_string(),
                known: self.names.clone(),
            })
    }

    pub fn name(&self, id: CategoryId) -> Result<&str> {
        self.names
            .get(id.0 as usize)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownCategory {
                token: id.0.to_string(),
                known: self.names.clone(),
            })
    }
}
