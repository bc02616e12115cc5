use std::collections::{BTreeMap, BTreeSet};

use fusetrack::geometry::iou3d;
use fusetrack::harness::{generate, stock, track_frames};
use fusetrack::tracker::run_sequence;
use fusetrack::{Box3D, CategoryId, Detection, OutputSource, Profile, Tracker, TrackerConfig};
use proptest::prelude::*;

fn car(x: f64, y: f64) -> Detection {
    Detection::new(Box3D::new([x, y, 0.0], [1.8, 4.5, 1.6], 0.0).unwrap(), 0.9, CategoryId(0))
}

/// Up to three cars moving along x with independent per-frame dropout.
fn arb_frames() -> impl Strategy<Value = Vec<Vec<Detection>>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), 3), 1..40).prop_map(|mask| {
        mask.iter()
            .enumerate()
            .map(|(f, seen)| {
                (0..3)
                    .filter(|&k| seen[k])
                    .map(|k| car(f as f64 * 0.5, k as f64 * 8.0))
                    .collect()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lifecycle_invariants_hold(frames in arb_frames()) {
        for cfg in [Profile::Kitti.tracker(), Profile::Nuscenes.tracker()] {
            let mut tracker = Tracker::new(cfg.clone()).unwrap();
            let mut predicted_run: BTreeMap<u64, u32> = BTreeMap::new();
            let mut seen_ids: BTreeSet<u64> = BTreeSet::new();
            for (f, dets) in frames.iter().enumerate() {
                let r = tracker.step(f as u64, dets).unwrap();
                let mut ids = BTreeSet::new();
                for o in &r.outputs {
                    prop_assert!(ids.insert(o.track_id), "duplicate id in a frame");
                    let run = predicted_run.entry(o.track_id).or_default();
                    match o.source {
                        OutputSource::Updated => *run = 0,
                        OutputSource::Predicted => *run += 1,
                    }
                    prop_assert!(*run <= cfg.max_predicted_emission);
                }
                for t in tracker.tracks() {
                    prop_assert!(t.misses_in_a_row <= cfg.max_age);
                }
                for id in &r.born {
                    prop_assert!(seen_ids.insert(*id), "id {} reused", id);
                }
                if let Some(thr) = cfg.output_nms_threshold {
                    for (i, a) in r.outputs.iter().enumerate() {
                        for b in &r.outputs[i + 1..] {
                            if a.category == b.category {
                                prop_assert!(iou3d(&a.bbox, &b.bbox) <= thr + 1e-12);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn replay_is_deterministic(frames in arb_frames()) {
        let cfg = Profile::Kitti.tracker();
        prop_assert_eq!(run_sequence(&frames, &cfg).unwrap(), run_sequence(&frames, &cfg).unwrap());
    }
}

#[test]
fn short_gap_keeps_the_identity() {
    let cfg = Profile::Synthetic.tracker();
    let mut frames: Vec<Vec<Detection>> = (0..10).map(|f| vec![car(f as f64 * 0.5, 0.0)]).collect();
    frames[4].clear();
    frames[5].clear();
    let results = run_sequence(&frames, &cfg).unwrap();
    let ids: BTreeSet<u64> = results
        .iter()
        .flat_map(|r| r.outputs.iter())
        .filter(|o| o.source == OutputSource::Updated)
        .map(|o| o.track_id)
        .collect();
    assert_eq!(ids.len(), 1);
}

#[test]
fn stationary_object_keeps_its_identity_under_kitti_thresholds() {
    let frames: Vec<Vec<Detection>> = (0..10).map(|f| if f == 4 { vec![] } else { vec![car(2.0, 1.0)] }).collect();
    let results = run_sequence(&frames, &TrackerConfig::default()).unwrap();
    let born: usize = results.iter().map(|r| r.born.len()).sum();
    assert_eq!(born, 1);
}

#[test]
fn frames_must_advance() {
    let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
    tracker.step(3, &[car(0.0, 0.0)]).unwrap();
    assert!(tracker.step(3, &[]).is_err());
}

#[test]
fn clean_scenario_keeps_one_track_per_object() {
    let data = generate(&stock::clean(), 0).unwrap();
    let results = track_frames(&data.detections, &Profile::Synthetic.tracker()).unwrap();
    let born: usize = results.iter().map(|r| r.born.len()).sum();
    assert_eq!(born, data.identities);
}
