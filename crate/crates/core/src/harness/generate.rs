use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use super::scenario::{default_dims, Scenario, Script};
use crate::appearance::OcclusionState;
use crate::detection::{sort_canonical, Detection};
use crate::error::Result;
use crate::geometry::{wrap_angle, Box3D};
use crate::io::{self, CategoryTable};
use crate::metrics::GtAnnotation;

/// Independent random streams, so e.g. false-positive placement does not
/// shift when the jitter settings change.
const STREAM_EMBEDDING: u64 = 0;
const STREAM_OBSERVATION: u64 = 1;
const STREAM_FALSE_POSITIVE: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub categories: CategoryTable,
    /// Detections for frames `0..frames`.
    pub detections: Vec<Vec<Detection>>,
    pub ground_truth: Vec<GtAnnotation>,
    /// Number of distinct ground-truth identities.
    pub identities: usize,
}

pub const DETECTIONS_FILE: &str = "detections.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.bin";
pub const GROUND_TRUTH_FILE: &str = "gt.txt";

impl SyntheticData {
    /// Writes `detections.txt`, `embeddings.bin` and `gt.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        io::write_detections(
            &dir.join(DETECTIONS_FILE),
            &self.detections,
            &self.categories,
            Some(&dir.join(EMBEDDINGS_FILE)),
        )?;
        io::write_ground_truth(&dir.join(GROUND_TRUTH_FILE), &self.ground_truth, &self.categories)
    }
}

/// Center and heading of a scripted object `t` frames after its birth.
pub fn pose(script: &Script, start: [f64; 3], yaw: Option<f64>, t: u64, dt: f64) -> ([f64; 3], f64) {
    let heading = |vx: f64, vy: f64| {
        if vx == 0.0 && vy == 0.0 {
            0.0
        } else {
            vy.atan2(vx)
        }
    };
    let s = t as f64 * dt;
    let ([dx, dy], travel) = match *script {
        Script::ConstantVelocity { velocity: [vx, vy] } => ([vx * s, vy * s], heading(vx, vy)),
        Script::ConstantAcceleration {
            velocity: [vx, vy],
            acceleration: [ax, ay],
        } => (
            [vx * s + 0.5 * ax * s * s, vy * s + 0.5 * ay * s * s],
            heading(vx + ax * s, vy + ay * s),
        ),
        Script::Turn {
            speed,
            heading: h0,
            yaw_rate,
        } => {
            let h = h0 + yaw_rate * s;
            if yaw_rate == 0.0 {
                ([speed * s * h0.cos(), speed * s * h0.sin()], h0)
            } else {
                let r = speed / yaw_rate;
                ([r * (h.sin() - h0.sin()), -r * (h.cos() - h0.cos())], h)
            }
        }
        Script::StopAndGo {
            velocity: [vx, vy],
            go_frames,
            stop_frames,
        } => {
            let period = go_frames + stop_frames;
            let moving = (t / period) * go_frames + (t % period).min(go_frames);
            let m = moving as f64 * dt;
            ([vx * m, vy * m], heading(vx, vy))
        }
    };
    (
        [start[0] + dx, start[1] + dy, start[2]],
        wrap_angle(yaw.unwrap_or(travel)),
    )
}

fn unit_normal(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn normalized_f32(v: &[f64]) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    v.iter().map(|x| (x / n) as f32).collect()
}

/// Renders a scenario into detections and ground truth. The output depends
/// only on `(scenario, seed)`.
pub fn generate(scenario: &Scenario, seed: u64) -> Result<SyntheticData> {
    scenario.validate()?;
    let table = scenario.category_table()?;
    let stream = |k: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(k);
        r
    };
    let mut emb_rng = stream(STREAM_EMBEDDING);
    let mut obs_rng = stream(STREAM_OBSERVATION);
    let mut fp_rng = stream(STREAM_FALSE_POSITIVE);

    let model = &scenario.embedding;
    let distractor = unit_normal(&mut emb_rng, model.dim);
    let bases: Vec<Vec<f64>> = scenario
        .objects
        .iter()
        .map(|_| unit_normal(&mut emb_rng, model.dim))
        .collect();
    let noise = &scenario.noise;
    let jitter = Normal::new(0.0, noise.position_sigma).expect("validated sigma");
    let emb_noise = Normal::new(0.0, model.noise).expect("validated sigma");
    let fp_count = (noise.fp_rate > 0.0).then(|| Poisson::new(noise.fp_rate).expect("validated rate"));
    let mut fp_categories: Vec<&str> = scenario.objects.iter().map(|o| o.category.as_str()).collect();
    fp_categories.sort_unstable();
    fp_categories.dedup();
    if fp_categories.is_empty() {
        fp_categories.push(&scenario.categories[0]);
    }

    let mut detections = vec![Vec::new(); scenario.frames as usize];
    let mut ground_truth = Vec::new();
    for (frame, dets) in detections.iter_mut().enumerate() {
        let frame = frame as u64;
        for (i, o) in scenario.objects.iter().enumerate() {
            if frame < o.birth || frame > o.death {
                continue;
            }
            let category = table.id(&o.category)?;
            let (center, yaw) = pose(&o.script, o.start, o.yaw, frame - o.birth, scenario.dt);
            let bbox = Box3D::new(center, scenario.dims_of(i), yaw)?;
            ground_truth.push(GtAnnotation {
                frame,
                gt_id: i as u64,
                category,
                bbox,
            });

            // Draw every per-object variate unconditionally so one object's
            // visibility never shifts another object's randomness.
            let dx: f64 = jitter.sample(&mut obs_rng);
            let dy: f64 = jitter.sample(&mut obs_rng);
            let dropped = obs_rng.random_bool(noise.dropout);
            let score = uniform(&mut obs_rng, noise.score);
            let e_noise: Vec<f64> = (0..model.dim).map(|_| emb_noise.sample(&mut obs_rng)).collect();

            let level = scenario.occlusion_level(i, frame);
            let occlusion = OcclusionState::try_from(level)?;
            if dropped || occlusion == OcclusionState::FullyOccluded {
                continue;
            }
            let w = model.visibility[level as usize];
            let observed: Vec<f64> = (0..model.dim)
                .map(|k| w * bases[i][k] + (1.0 - w) * distractor[k] + e_noise[k])
                .collect();
            let mut seen = bbox;
            seen.x += dx;
            seen.y += dy;
            dets.push(Detection::new(seen, score, category).with_embedding(normalized_f32(&observed), occlusion));
        }

        if let Some(p) = &fp_count {
            let n = p.sample(&mut fp_rng) as usize;
            let [x0, x1, y0, y1] = noise.fp_region;
            for _ in 0..n {
                let token = fp_categories[fp_rng.random_range(0..fp_categories.len())];
                let x = uniform(&mut fp_rng, [x0, x1]);
                let y = uniform(&mut fp_rng, [y0, y1]);
                let yaw = fp_rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let score = uniform(&mut fp_rng, noise.fp_score);
                let emb = unit_normal(&mut fp_rng, model.dim);
                let bbox = Box3D::new([x, y, 0.0], default_dims(token), yaw)?;
                dets.push(
                    Detection::new(bbox, score, table.id(token)?)
                        .with_embedding(normalized_f32(&emb), OcclusionState::FullyVisible),
                );
            }
        }
        sort_canonical(dets);
    }

    Ok(SyntheticData {
        categories: table,
        detections,
        ground_truth,
        identities: scenario.objects.len(),
    })
}
