use std::collections::BTreeSet;
use std::path::PathBuf;

use fusetrack::harness::{
    ablate, generate, run_pipeline, stock, Cell, Grid, Variant,
};
use fusetrack::{AssociationOrder, FeatureSelection, Profile, Scenario};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn lone_object(frames: u64) -> Scenario {
    let mut s = stock::clean();
    s.objects.truncate(1);
    s.objects[0].birth = 0;
    s.objects[0].death = frames - 1;
    s.frames = frames;
    s
}

#[test]
fn noiseless_object_is_seen_every_frame() {
    let data = generate(&lone_object(20), 0).unwrap();
    let dets: Vec<_> = data.detections.iter().flatten().collect();
    assert_eq!(dets.len(), 20);
    assert!(dets.iter().all(|d| d.score == 1.0));
}

#[test]
fn full_dropout_leaves_only_ground_truth() {
    let mut s = lone_object(20);
    s.noise.dropout = 1.0;
    let data = generate(&s, 0).unwrap();
    assert!(data.detections.iter().all(Vec::is_empty));
    assert_eq!(data.ground_truth.len(), 20);
}

#[test]
fn false_positives_are_reproducible() {
    let mut s = lone_object(30);
    s.noise.fp_rate = 2.0;
    assert_eq!(generate(&s, 9).unwrap().detections, generate(&s, 9).unwrap().detections);
    assert_ne!(generate(&s, 9).unwrap().detections, generate(&s, 10).unwrap().detections);
}

#[test]
fn identity_count_matches_the_script() {
    for s in [stock::clean(), stock::occlusion_stress(), stock::large_displacement(), stock::near_collision(), stock::crossing(5)] {
        let data = generate(&s, 1).unwrap();
        let ids: BTreeSet<u64> = data.ground_truth.iter().map(|g| g.gt_id).collect();
        assert_eq!(ids.len(), s.objects.len(), "{}", s.name);
        assert_eq!(data.identities, s.objects.len());
    }
}

#[test]
fn clean_scenario_is_perfect_in_every_cell() {
    let cfg = Profile::Synthetic;
    let rows = ablate(&[stock::clean()], &[0], &Grid::default(), &cfg.tracker(), &cfg.eval()).unwrap();
    assert_eq!(rows.len(), Grid::default().cells().len());
    for r in rows {
        assert!((r.summary.hota - 1.0).abs() < 1e-9, "{}", r.cell.label());
    }
}

#[test]
fn occlusion_reliable_features_reduce_switches() {
    let cfg = Profile::Synthetic;
    let ids = |variant| {
        (0..3)
            .map(|seed| {
                let cell = Cell::new(variant, FeatureSelection::Occ);
                run_pipeline(&stock::occlusion_stress(), seed, &cell, &cfg.tracker(), &cfg.eval()).unwrap().summary.ids
            })
            .sum::<usize>()
    };
    let (full, fused, motion) = (ids(Variant::ApMoOcc), ids(Variant::ApMo), ids(Variant::Mo));
    assert!(full <= fused && fused <= motion, "{full} {fused} {motion}");
    assert!(full < motion);
}

#[test]
fn gating_prevents_switches_near_collisions() {
    let cfg = Profile::Synthetic;
    let ids = |gating| {
        let cell = Cell { gating, ..Cell::new(Variant::ApMoOcc, FeatureSelection::Occ) };
        run_pipeline(&stock::near_collision(), 0, &cell, &cfg.tracker(), &cfg.eval()).unwrap().summary.ids
    };
    assert!(ids(true) < ids(false));
}

#[test]
fn ablation_is_independent_of_thread_count() {
    let cfg = Profile::Synthetic;
    let grid = Grid {
        variants: vec![Variant::Mo, Variant::ApMoOcc],
        strategies: vec![FeatureSelection::Occ, FeatureSelection::Ltf],
        orders: vec![AssociationOrder::MotionFirst, AssociationOrder::AppearanceFirst],
        gating: vec![true],
    };
    let scenarios = [stock::occlusion_stress(), stock::crossing(3)];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ablate(&scenarios, &[0, 1], &grid, &cfg.tracker(), &cfg.eval()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn checked_in_scenarios_match_the_builders() {
    for s in [stock::clean(), stock::occlusion_stress(), stock::large_displacement(), stock::near_collision()] {
        let path = scenario_dir().join(format!("{}.toml", s.name.replace('-', "_")));
        assert_eq!(Scenario::load(&path).unwrap(), s, "{}", path.display());
    }
}

#[test]
fn scenarios_survive_a_toml_round_trip() {
    for seed in 0..10 {
        let s = stock::crossing(seed);
        assert_eq!(Scenario::parse(&s.to_toml()).unwrap(), s);
    }
}
