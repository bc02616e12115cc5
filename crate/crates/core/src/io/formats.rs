use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::CategoryTable;
use crate::appearance::OcclusionState;
use crate::detection::{sort_canonical, CategoryId, Detection};
use crate::error::{Error, Result};
use crate::geometry::Box3D;
use crate::metrics::{GtAnnotation, PredRecord};
use crate::tracker::{FrameResult, OutputSource, TrackOutput};

const DETECTION_HEADER: &str = "# frame category score x y z w l h yaw vx vy embedding occlusion";
const GT_HEADER: &str = "# frame gt_id category x y z w l h yaw";
const TRACK_HEADER: &str = "# frame track_id category score x y z w l h yaw vx vy source";

/// Cursor over the tokens of one data row, producing located errors.
struct Row<'a> {
    origin: &'a Path,
    line: usize,
    tokens: Vec<&'a str>,
    next: usize,
}

impl<'a> Row<'a> {
    fn new(origin: &'a Path, line: usize, text: &'a str) -> Self {
        Self {
            origin,
            line,
            tokens: text.split_whitespace().collect(),
            next: 0,
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.to_path_buf(),
            line: self.line,
            reason: reason.into(),
        }
    }

    fn expect_len(&self, allowed: &[usize]) -> Result<()> {
        if allowed.contains(&self.tokens.len()) {
            Ok(())
        } else {
            Err(self.err(format!(
                "expected {} fields, found {}",
                allowed
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" or "),
                self.tokens.len()
            )))
        }
    }

    fn token(&mut self) -> &'a str {
        let t = self.tokens[self.next];
        self.next += 1;
        t
    }

    fn value<T: FromStr>(&mut self, name: &str) -> Result<T> {
        let t = self.token();
        t.parse()
            .map_err(|_| self.err(format!("invalid {name} {t:?}")))
    }

    fn optional<T: FromStr>(&mut self, name: &str) -> Result<Option<T>> {
        if self.tokens[self.next] == "-" {
            self.next += 1;
            Ok(None)
        } else {
            self.value(name).map(Some)
        }
    }

    fn category(&mut self, table: &CategoryTable) -> Result<CategoryId> {
        let t = self.token();
        table.id(t).map_err(|e| match e {
            Error::UnknownCategory { token, known } => self.err(format!(
                "unknown category {token:?} (known: {})",
                known.join(", ")
            )),
            other => other,
        })
    }

    fn bbox(&mut self) -> Result<Box3D> {
        let mut v = [0.0; 7];
        for (slot, name) in v.iter_mut().zip(["x", "y", "z", "w", "l", "h", "yaw"]) {
            *slot = self.value(name)?;
        }
        Box3D::new([v[0], v[1], v[2]], [v[3], v[4], v[5]], v[6]).map_err(|e| self.err(e.to_string()))
    }

    fn velocity(&mut self) -> Result<Option<[f64; 2]>> {
        match (self.optional("vx")?, self.optional("vy")?) {
            (Some(vx), Some(vy)) => Ok(Some([vx, vy])),
            (None, None) => Ok(None),
            _ => Err(self.err("vx and vy must both be present or both be `-`")),
        }
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn push_box(out: &mut String, b: &Box3D) {
    let _ = write!(out, " {} {} {} {} {} {} {}", b.x, b.y, b.z, b.w, b.l, b.h, b.yaw);
}

fn push_velocity(out: &mut String, v: Option<[f64; 2]>) {
    match v {
        Some([vx, vy]) => {
            let _ = write!(out, " {vx} {vy}");
        }
        None => out.push_str(" - -"),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Parses detection rows
/// `frame category score x y z w l h yaw [vx vy embedding occlusion]`.
///
/// `embedding` is a row index into `embeddings`; when no sidecar is given
/// the reference is ignored. Frames are returned densely from 0 to the
/// largest frame present, each sorted canonically so row order within a
/// frame does not matter.
pub fn parse_detections(
    text: &str,
    origin: &Path,
    table: &CategoryTable,
    embeddings: Option<&[Vec<f32>]>,
) -> Result<Vec<Vec<Detection>>> {
    let mut frames: Vec<Vec<Detection>> = Vec::new();
    for (line, content) in data_lines(text) {
        let mut row = Row::new(origin, line, content);
        row.expect_len(&[10, 14])?;
        let frame: u64 = row.value("frame")?;
        let category = row.category(table)?;
        let score: f64 = row.value("score")?;
        if !(0.0..=1.0).contains(&score) {
            return Err(row.err(format!("score {score} is outside [0, 1]")));
        }
        let mut det = Detection::new(row.bbox()?, score, category);
        if row.tokens.len() == 14 {
            det.bbox.velocity = row.velocity()?;
            let emb_ref: Option<usize> = row.optional("embedding index")?;
            let occ: Option<u8> = row.optional("occlusion")?;
            det.occlusion = occ
                .map(OcclusionState::try_from)
                .transpose()
                .map_err(|e| row.err(e.to_string()))?;
            if let (Some(k), Some(table)) = (emb_ref, embeddings) {
                let e = table.get(k).ok_or_else(|| {
                    row.err(format!("embedding index {k} beyond sidecar of {}", table.len()))
                })?;
                det.embedding = Some(e.clone());
            }
        }
        let f = frame as usize;
        if frames.len() <= f {
            frames.resize_with(f + 1, Vec::new);
        }
        frames[f].push(det);
    }
    for f in &mut frames {
        sort_canonical(f);
    }
    Ok(frames)
}

pub fn load_detections(
    path: &Path,
    table: &CategoryTable,
    embeddings: Option<&[Vec<f32>]>,
) -> Result<Vec<Vec<Detection>>> {
    parse_detections(&fs::read_to_string(path)?, path, table, embeddings)
}

/// Writes detections frame by frame. Embeddings are appended to a sidecar at
/// `embeddings_path` in the order they appear; without a sidecar path they
/// are dropped.
pub fn write_detections(
    path: &Path,
    frames: &[Vec<Detection>],
    table: &CategoryTable,
    embeddings_path: Option<&Path>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(DETECTION_HEADER);
    out.push('\n');
    let mut sidecar: Vec<Vec<f32>> = Vec::new();
    for (frame, dets) in frames.iter().enumerate() {
        for d in dets {
            let _ = write!(out, "{frame} {} {}", table.name(d.category)?, d.score);
            push_box(&mut out, &d.bbox);
            push_velocity(&mut out, d.bbox.velocity);
            match (&d.embedding, embeddings_path) {
                (Some(e), Some(_)) => {
                    let _ = write!(out, " {}", sidecar.len());
                    sidecar.push(e.clone());
                }
                _ => out.push_str(" -"),
            }
            match d.occlusion {
                Some(o) => {
                    let _ = write!(out, " {}", o.level());
                }
                None => out.push_str(" -"),
            }
            out.push('\n');
        }
    }
    write_text(path, &out)?;
    if let Some(p) = embeddings_path {
        write_embeddings(p, &sidecar)?;
    }
    Ok(())
}

/// Sidecar layout: an ASCII line `dim count\n`, then `dim * count`
/// little-endian `f32` values.
pub fn write_embeddings(path: &Path, embeddings: &[Vec<f32>]) -> Result<()> {
    let dim = embeddings.first().map_or(0, Vec::len);
    if let Some(bad) = embeddings.iter().find(|e| e.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{dim} {}", embeddings.len())?;
    for e in embeddings {
        for v in e {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings(bytes: &[u8], origin: &Path) -> Result<Vec<Vec<f32>>> {
    let parse_err = |reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line: 1,
        reason,
    };
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| parse_err("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|e| parse_err(e.to_string()))?;
    let fields: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(format!("bad header {header:?}")))?;
    let [dim, count] = fields[..] else {
        return Err(parse_err(format!("header needs `dim count`, got {header:?}")));
    };
    let body = &bytes[nl + 1..];
    if body.len() != dim * count * 4 {
        return Err(parse_err(format!(
            "expected {} payload bytes, found {}",
            dim * count * 4,
            body.len()
        )));
    }
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if dim == 0 {
        return Ok(vec![Vec::new(); count]);
    }
    Ok(values.chunks_exact(dim).map(<[f32]>::to_vec).collect())
}

pub fn load_embeddings(path: &Path) -> Result<Vec<Vec<f32>>> {
    read_embeddings(&fs::read(path)?, path)
}

/// Parses `frame gt_id category x y z w l h yaw`, returning annotations
/// sorted by (frame, gt_id). Duplicate keys are rejected.
pub fn parse_ground_truth(text: &str, origin: &Path, table: &CategoryTable) -> Result<Vec<GtAnnotation>> {
    let mut out = Vec::new();
    let mut lines = Vec::new();
    for (line, content) in data_lines(text) {
        let mut row = Row::new(origin, line, content);
        row.expect_len(&[10])?;
        out.push(GtAnnotation {
            frame: row.value("frame")?,
            gt_id: row.value("gt_id")?,
            category: row.category(table)?,
            bbox: row.bbox()?,
        });
        lines.push(line);
    }
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by_key(|&i| (out[i].frame, out[i].gt_id));
    for w in order.windows(2) {
        let (a, b) = (&out[w[0]], &out[w[1]]);
        if (a.frame, a.gt_id) == (b.frame, b.gt_id) {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: lines[w[0]].max(lines[w[1]]),
                reason: format!("duplicate gt_id {} in frame {}", b.gt_id, b.frame),
            });
        }
    }
    Ok(order.into_iter().map(|i| out[i].clone()).collect())
}

pub fn load_ground_truth(path: &Path, table: &CategoryTable) -> Result<Vec<GtAnnotation>> {
    parse_ground_truth(&fs::read_to_string(path)?, path, table)
}

pub fn write_ground_truth(path: &Path, gts: &[GtAnnotation], table: &CategoryTable) -> Result<()> {
    let mut sorted: Vec<&GtAnnotation> = gts.iter().collect();
    sorted.sort_by_key(|g| (g.frame, g.gt_id));
    let mut out = String::new();
    out.push_str(GT_HEADER);
    out.push('\n');
    for g in sorted {
        let _ = write!(out, "{} {} {}", g.frame, g.gt_id, table.name(g.category)?);
        push_box(&mut out, &g.bbox);
        out.push('\n');
    }
    write_text(path, &out)
}

/// One row of a track file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub frame: u64,
    pub output: TrackOutput,
}

/// Writes every emitted state as
/// `frame track_id category score x y z w l h yaw vx vy U|P`, sorted by
/// (frame, track_id).
pub fn write_tracks(path: &Path, results: &[FrameResult], table: &CategoryTable) -> Result<()> {
    let mut rows: Vec<(u64, &TrackOutput)> = results
        .iter()
        .flat_map(|r| r.outputs.iter().map(move |o| (r.frame, o)))
        .collect();
    rows.sort_by_key(|(f, o)| (*f, o.track_id));
    let mut out = String::new();
    out.push_str(TRACK_HEADER);
    out.push('\n');
    for (frame, o) in rows {
        let _ = write!(out, "{frame} {} {} {}", o.track_id, table.name(o.category)?, o.score);
        push_box(&mut out, &o.bbox);
        push_velocity(&mut out, o.bbox.velocity);
        out.push_str(match o.source {
            OutputSource::Updated => " U\n",
            OutputSource::Predicted => " P\n",
        });
    }
    write_text(path, &out)
}

/// Parses a track file into records sorted by (frame, track_id); a repeated
/// key is an error.
pub fn parse_tracks(text: &str, origin: &Path, table: &CategoryTable) -> Result<Vec<TrackRecord>> {
    let mut out: Vec<(usize, TrackRecord)> = Vec::new();
    for (line, content) in data_lines(text) {
        let mut row = Row::new(origin, line, content);
        row.expect_len(&[14])?;
        let frame = row.value("frame")?;
        let track_id = row.value("track_id")?;
        let category = row.category(table)?;
        let score = row.value("score")?;
        let mut bbox = row.bbox()?;
        bbox.velocity = row.velocity()?;
        let source = match row.token() {
            "U" => OutputSource::Updated,
            "P" => OutputSource::Predicted,
            other => return Err(row.err(format!("source flag must be U or P, found {other:?}"))),
        };
        out.push((
            line,
            TrackRecord {
                frame,
                output: TrackOutput {
                    track_id,
                    category,
                    bbox,
                    score,
                    source,
                },
            },
        ));
    }
    out.sort_by_key(|(_, r)| (r.frame, r.output.track_id));
    for w in out.windows(2) {
        if (w[0].1.frame, w[0].1.output.track_id) == (w[1].1.frame, w[1].1.output.track_id) {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: w[0].0.max(w[1].0),
                reason: format!(
                    "duplicate track_id {} in frame {}",
                    w[1].1.output.track_id, w[1].1.frame
                ),
            });
        }
    }
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

pub fn load_tracks(path: &Path, table: &CategoryTable) -> Result<Vec<TrackRecord>> {
    parse_tracks(&fs::read_to_string(path)?, path, table)
}

pub fn tracks_to_predictions(records: &[TrackRecord]) -> Vec<PredRecord> {
    records
        .iter()
        .map(|r| PredRecord {
            frame: r.frame,
            pred_id: r.output.track_id,
            category: r.output.category,
            bbox: r.output.bbox,
            score: r.output.score,
        })
        .collect()
}
