//! Built-in scenarios. Each one isolates a failure mode the fused tracker is
//! meant to handle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{EmbeddingModel, NoiseModel, OcclusionEvent, Scenario, ScriptedObject, Script};

fn car(birth: u64, death: u64, start: [f64; 3], script: Script) -> ScriptedObject {
    ScriptedObject {
        category: "Car".into(),
        birth,
        death,
        start,
        dims: None,
        yaw: None,
        script,
    }
}

fn base(name: &str, frames: u64, objects: Vec<ScriptedObject>) -> Scenario {
    Scenario {
        name: name.into(),
        frames,
        dt: 0.1,
        categories: vec!["Car".into(), "Pedestrian".into(), "Cyclist".into()],
        objects,
        occlusions: Vec::new(),
        noise: NoiseModel::default(),
        embedding: EmbeddingModel::default(),
    }
}

/// Three cars in separate lanes at constant velocity; nothing goes wrong.
pub fn clean() -> Scenario {
    let objects = (0..3)
        .map(|k| {
            car(
                0,
                39,
                [0.0, 8.0 * k as f64, 0.0],
                Script::ConstantVelocity { velocity: [6.0 + k as f64, 0.0] },
            )
        })
        .collect();
    base("clean", 40, objects)
}

/// Cars that stop while hidden. Each stop is preceded by a stretch of heavy
/// occlusion, so the prediction overshoots when the car reappears and its
/// most recent embeddings are corrupted. Odd lanes see one corrupted frame
/// before the blackout, even lanes three.
pub fn occlusion_stress() -> Scenario {
    const LANES: usize = 4;
    const GO: u64 = 12;
    const STOP: u64 = 8;
    const HIDDEN: u64 = 4;
    const FRAMES: u64 = 80;
    let mut s = base("occlusion-stress", FRAMES, Vec::new());
    for lane in 0..LANES {
        s.objects.push(car(
            0,
            FRAMES - 1,
            [0.0 - 2.0 * lane as f64, 7.0 * lane as f64, 0.0],
            Script::StopAndGo {
                velocity: [10.0, 0.0],
                go_frames: GO,
                stop_frames: STOP,
            },
        ));
        let lead = if lane % 2 == 0 { 3 } else { 1 };
        let mut stop_at = GO;
        while stop_at + HIDDEN < FRAMES {
            s.occlusions.push(OcclusionEvent {
                object: lane,
                start: stop_at - lead,
                end: stop_at - 1,
                level: 2,
            });
            s.occlusions.push(OcclusionEvent {
                object: lane,
                start: stop_at,
                end: stop_at + HIDDEN - 1,
                level: 3,
            });
            stop_at += GO + STOP;
        }
    }
    s.noise.position_sigma = 0.05;
    s
}

/// Cars that alternate standing still with bursts at 25 m/s, so consecutive
/// detections jump further than a constant-velocity prediction reaches.
pub fn large_displacement() -> Scenario {
    let objects = (0..3)
        .map(|k| {
            car(
                0,
                59,
                [0.0, 10.0 * k as f64, 0.0],
                Script::StopAndGo {
                    velocity: [25.0, 0.0],
                    go_frames: 5,
                    stop_frames: 10,
                },
            )
        })
        .collect();
    let mut s = base("large-displacement", 60, objects);
    s.noise.position_sigma = 0.02;
    s
}

/// A cyclist emerges right beside a standing pedestrian and hides them for
/// a few frames, twice at separate spots. Without category gating the
/// pedestrian's track latches onto the cyclist and the pedestrian returns
/// under a new identity.
pub fn near_collision() -> Scenario {
    let mut s = base("near-collision", 50, Vec::new());
    for (k, y) in [0.0, 12.0].into_iter().enumerate() {
        let born = 12 + 10 * k as u64;
        s.objects.push(ScriptedObject {
            category: "Pedestrian".into(),
            birth: 0,
            death: 49,
            start: [0.0, y, 0.0],
            dims: None,
            yaw: Some(0.0),
            script: Script::ConstantVelocity { velocity: [0.0, 0.0] },
        });
        s.objects.push(ScriptedObject {
            category: "Cyclist".into(),
            birth: born,
            death: 49,
            start: [0.3, y, 0.0],
            dims: None,
            yaw: None,
            script: Script::ConstantVelocity { velocity: [3.0, 0.0] },
        });
        s.occlusions.push(OcclusionEvent {
            object: 2 * k,
            start: born,
            end: born + 4,
            level: 3,
        });
    }
    s.noise.position_sigma = 0.02;
    s
}

/// Mixed-category objects whose paths meet near one point at about the same
/// frame. Layout, speeds and categories are drawn from `seed`.
pub fn crossing(seed: u64) -> Scenario {
    const FRAMES: u64 = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c405);
    let mut s = base(&format!("crossing-{seed}"), FRAMES, Vec::new());
    let n = rng.random_range(3..=5);
    let categories = ["Car", "Pedestrian", "Cyclist"];
    for k in 0..n {
        // Always include at least one pedestrian and one cyclist.
        let category = match k {
            0 => "Pedestrian",
            1 => "Cyclist",
            _ => categories[rng.random_range(0..categories.len())],
        };
        let speed = match category {
            "Car" => rng.random_range(4.0..8.0),
            "Cyclist" => rng.random_range(2.5..4.5),
            _ => rng.random_range(1.0..2.0),
        };
        let heading: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let meet = rng.random_range(20..30) as f64 * s.dt;
        let offset = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
        let velocity = [speed * heading.cos(), speed * heading.sin()];
        s.objects.push(ScriptedObject {
            category: category.into(),
            birth: 0,
            death: FRAMES - 1,
            start: [offset[0] - velocity[0] * meet, offset[1] - velocity[1] * meet, 0.0],
            dims: None,
            yaw: None,
            script: Script::ConstantVelocity { velocity },
        });
    }
    s.noise.position_sigma = 0.1;
    s.noise.dropout = 0.05;
    s.noise.score = [0.6, 1.0];
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_scenarios_validate() {
        for s in [clean(), near_collision(), occlusion_stress(), large_displacement(), crossing(0), crossing(7)] {
            s.validate().unwrap();
        }
    }

    #[test]
    fn crossing_is_seeded() {
        assert_eq!(crossing(3), crossing(3));
        assert_ne!(crossing(3).objects, crossing(4).objects);
    }
}
