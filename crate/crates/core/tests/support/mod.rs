//! Reference implementations used as oracles. They favor obviousness over
//! speed and share no code with the library beyond its data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

use fusetrack::metrics::{GtAnnotation, PredRecord};
use fusetrack::{Box3D, CategoryId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_box(rng: &mut ChaCha8Rng, spread: f64) -> Box3D {
    Box3D::new(
        [
            rng.random_range(-spread..=spread),
            rng.random_range(-spread..=spread),
            rng.random_range(-0.5..=0.5),
        ],
        [
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..5.0),
            rng.random_range(0.5..2.5),
        ],
        rng.random_range(-PI..PI),
    )
    .unwrap()
}

/// Footprint corners from first principles (length along the heading).
fn corners(b: &Box3D) -> [(f64, f64); 4] {
    let (s, c) = b.yaw.sin_cos();
    let mut out = [(0.0, 0.0); 4];
    for (k, (sl, sw)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)].into_iter().enumerate() {
        let (dl, dw) = (sl * b.l / 2.0, sw * b.w / 2.0);
        out[k] = (b.x + dl * c - dw * s, b.y + dl * s + dw * c);
    }
    out
}

pub fn inside_box(b: &Box3D, p: [f64; 3]) -> bool {
    let (s, c) = b.yaw.sin_cos();
    let (dx, dy) = (p[0] - b.x, p[1] - b.y);
    let along = dx * c + dy * s;
    let across = -dx * s + dy * c;
    along.abs() <= b.l / 2.0 && across.abs() <= b.w / 2.0 && (p[2] - b.z).abs() <= b.h / 2.0
}

/// A point lies strictly inside the convex hull of a finite set iff every
/// angular gap between the directions to the set is below pi.
pub fn inside_hull_2d(points: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut angles: Vec<f64> = points.iter().map(|q| (q.1 - p.1).atan2(q.0 - p.0)).collect();
    angles.sort_by(f64::total_cmp);
    let mut max_gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    max_gap < PI
}

fn bounds(boxes: &[&Box3D]) -> [(f64, f64); 3] {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for b in boxes {
        for (x, y) in corners(b) {
            lo[0] = lo[0].min(x);
            hi[0] = hi[0].max(x);
            lo[1] = lo[1].min(y);
            hi[1] = hi[1].max(y);
        }
        lo[2] = lo[2].min(b.z - b.h / 2.0);
        hi[2] = hi[2].max(b.z + b.h / 2.0);
    }
    [(lo[0], hi[0]), (lo[1], hi[1]), (lo[2], hi[2])]
}

fn sample(rng: &mut ChaCha8Rng, region: &[(f64, f64); 3]) -> [f64; 3] {
    region.map(|(lo, hi)| rng.random_range(lo..hi))
}

fn region_volume(region: &[(f64, f64); 3]) -> f64 {
    region.iter().map(|(lo, hi)| hi - lo).product()
}

/// Monte-Carlo intersection volume: uniform samples in the bounding box of
/// `a`, counted when inside both boxes.
pub fn mc_intersection(a: &Box3D, b: &Box3D, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let region = bounds(&[a]);
    let hits = (0..samples)
        .filter(|_| {
            let p = sample(rng, &region);
            inside_box(a, p) && inside_box(b, p)
        })
        .count();
    region_volume(&region) * hits as f64 / samples as f64
}

/// Monte-Carlo volume of (2D hull of both footprints) x (joint height span).
pub fn mc_hull(a: &Box3D, b: &Box3D, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let region = bounds(&[a, b]);
    let pts: Vec<(f64, f64)> = corners(a).into_iter().chain(corners(b)).collect();
    let hits = (0..samples)
        .filter(|_| {
            let p = sample(rng, &region);
            inside_hull_2d(&pts, (p[0], p[1]))
        })
        .count();
    region_volume(&region) * hits as f64 / samples as f64
}

/// Minimum total cost over all assignments of `min(rows, cols)` pairs.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, skips_left: usize, acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        if skips_left > 0 {
            rec(cost, row + 1, used, skips_left - 1, acc, best);
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                rec(cost, row + 1, used, skips_left, acc + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    let skips = rows.saturating_sub(cols);
    rec(cost, 0, &mut vec![false; cols], skips, 0.0, &mut best);
    best
}

/// Every partial injection from `0..rows` into `0..cols` restricted to
/// `allowed` pairs, maximizing the total of `weight`.
pub fn best_partial_matching(
    rows: usize,
    cols: usize,
    weight: &dyn Fn(usize, usize) -> Option<f64>,
) -> Vec<(usize, usize)> {
    fn rec(
        row: usize,
        rows: usize,
        used: &mut Vec<bool>,
        weight: &dyn Fn(usize, usize) -> Option<f64>,
        current: &mut Vec<(usize, usize)>,
        acc: f64,
        best: &mut (f64, Vec<(usize, usize)>),
    ) {
        if row == rows {
            if acc > best.0 {
                *best = (acc, current.clone());
            }
            return;
        }
        rec(row + 1, rows, used, weight, current, acc, best);
        for j in 0..used.len() {
            if used[j] {
                continue;
            }
            if let Some(w) = weight(row, j) {
                used[j] = true;
                current.push((row, j));
                rec(row + 1, rows, used, weight, current, acc + w, best);
                current.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (0.0, Vec::new());
    rec(0, rows, &mut vec![false; cols], weight, &mut Vec::new(), 0.0, &mut best);
    best.1
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveClear {
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub ids: usize,
    pub mota: f64,
    pub motp: f64,
    pub mt: f64,
    pub ml: f64,
}

fn frames(gts: &[GtAnnotation], preds: &[PredRecord]) -> BTreeSet<u64> {
    gts.iter().map(|g| g.frame).chain(preds.iter().map(|p| p.frame)).collect()
}

pub fn naive_clear(
    gts: &[GtAnnotation],
    preds: &[PredRecord],
    threshold: f64,
    sim: &dyn Fn(&Box3D, &Box3D) -> f64,
) -> NaiveClear {
    let (mut tp, mut fp, mut fn_count, mut ids) = (0, 0, 0, 0);
    let mut sim_sum = 0.0;
    let mut last: HashMap<u64, u64> = HashMap::new();
    let mut previous: HashMap<u64, u64> = HashMap::new();
    let mut tracked: HashMap<u64, usize> = HashMap::new();
    let mut span: BTreeMap<u64, usize> = BTreeMap::new();
    for f in frames(gts, preds) {
        let g: Vec<&GtAnnotation> = gts.iter().filter(|x| x.frame == f).collect();
        let p: Vec<&PredRecord> = preds.iter().filter(|x| x.frame == f).collect();
        for x in &g {
            *span.entry(x.gt_id).or_default() += 1;
        }
        let weight = |i: usize, j: usize| {
            let s = sim(&g[i].bbox, &p[j].bbox);
            if s >= threshold && s > 0.0 {
                let bonus = if previous.get(&g[i].gt_id) == Some(&p[j].pred_id) { 1000.0 } else { 0.0 };
                Some(s + bonus)
            } else {
                None
            }
        };
        let m = best_partial_matching(g.len(), p.len(), &weight);
        previous.clear();
        for &(i, j) in &m {
            let (gid, pid) = (g[i].gt_id, p[j].pred_id);
            if last.get(&gid).is_some_and(|&prev| prev != pid) {
                ids += 1;
            }
            last.insert(gid, pid);
            previous.insert(gid, pid);
            *tracked.entry(gid).or_default() += 1;
            sim_sum += sim(&g[i].bbox, &p[j].bbox);
        }
        tp += m.len();
        fp += p.len() - m.len();
        fn_count += g.len() - m.len();
    }
    let n = gts.len() as f64;
    let ratio = |id: &u64, s: &usize| *tracked.get(id).unwrap_or(&0) as f64 / *s as f64;
    NaiveClear {
        tp,
        fp,
        fn_count,
        ids,
        mota: 1.0 - (fp + fn_count + ids) as f64 / n,
        motp: if tp > 0 { sim_sum / tp as f64 } else { 0.0 },
        mt: span.iter().filter(|(i, s)| ratio(i, s) >= 0.8).count() as f64 / span.len() as f64,
        ml: span.iter().filter(|(i, s)| ratio(i, s) <= 0.2).count() as f64 / span.len() as f64,
    }
}

/// HOTA at one threshold straight from the definition: every true positive
/// `c` contributes `|TPA| / (|TPA| + |FNA| + |FPA|)`, with the three sets
/// enumerated explicitly.
pub fn naive_hota_at(
    gts: &[GtAnnotation],
    preds: &[PredRecord],
    alpha: f64,
    sim: &dyn Fn(&Box3D, &Box3D) -> f64,
) -> f64 {
    // (frame, gt_id, pred_id) of every TP.
    let mut tps: Vec<(u64, u64, u64)> = Vec::new();
    let (mut fn_count, mut fp) = (0usize, 0usize);
    for f in frames(gts, preds) {
        let g: Vec<&GtAnnotation> = gts.iter().filter(|x| x.frame == f).collect();
        let p: Vec<&PredRecord> = preds.iter().filter(|x| x.frame == f).collect();
        let weight = |i: usize, j: usize| {
            let s = sim(&g[i].bbox, &p[j].bbox);
            (s >= alpha && s > 0.0).then_some(s)
        };
        let m = best_partial_matching(g.len(), p.len(), &weight);
        for &(i, j) in &m {
            tps.push((f, g[i].gt_id, p[j].pred_id));
        }
        fn_count += g.len() - m.len();
        fp += p.len() - m.len();
    }
    let denom = tps.len() + fn_count + fp;
    if denom == 0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for &(_, g, p) in &tps {
        let tpa = tps.iter().filter(|t| t.1 == g && t.2 == p).count();
        // gt g present but not matched to p: either FN or matched elsewhere.
        let fna = gts.iter().filter(|x| x.gt_id == g).count() - tpa;
        let fpa = preds.iter().filter(|x| x.pred_id == p).count() - tpa;
        sum += tpa as f64 / (tpa + fna + fpa) as f64;
    }
    (sum / denom as f64).sqrt()
}

pub fn naive_hota(gts: &[GtAnnotation], preds: &[PredRecord], sim: &dyn Fn(&Box3D, &Box3D) -> f64) -> f64 {
    (1..=19).map(|k| naive_hota_at(gts, preds, k as f64 / 20.0, sim)).sum::<f64>() / 19.0
}

/// A small random sequence: up to `max_objects` drifting boxes over up to
/// `max_frames` frames, and predictions derived from them with jitter,
/// dropped frames, id swaps and false positives.
pub fn random_sequence(
    rng: &mut ChaCha8Rng,
    max_objects: usize,
    max_frames: u64,
) -> (Vec<GtAnnotation>, Vec<PredRecord>) {
    let n = rng.random_range(1..=max_objects);
    let frames = rng.random_range(1..=max_frames);
    let cat = CategoryId(0);
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    let starts: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let mut next_pred = 100u64;
    let mut pred_ids: Vec<u64> = (0..n as u64).map(|i| 10 + i).collect();
    for f in 0..frames {
        for (i, &(x, y, vx, vy)) in starts.iter().enumerate() {
            if rng.random_bool(0.1) {
                continue;
            }
            let t = f as f64;
            let bbox = Box3D::new([x + vx * t, y + vy * t, 0.0], [1.5, 3.0, 1.5], 0.3 * i as f64).unwrap();
            gts.push(GtAnnotation { frame: f, gt_id: i as u64, category: cat, bbox });
            if rng.random_bool(0.15) {
                continue;
            }
            if rng.random_bool(0.1) {
                pred_ids[i] = next_pred;
                next_pred += 1;
            }
            let mut pb = bbox;
            pb.x += rng.random_range(-0.8..0.8);
            pb.y += rng.random_range(-0.8..0.8);
            pb.yaw += rng.random_range(-0.3..0.3);
            preds.push(PredRecord { frame: f, pred_id: pred_ids[i], category: cat, bbox: pb, score: rng.random_range(0.1..1.0) });
        }
        if rng.random_bool(0.3) {
            let b = random_box(rng, 6.0);
            preds.push(PredRecord { frame: f, pred_id: rng.random_range(10..14), category: cat, bbox: b, score: rng.random_range(0.1..1.0) });
        }
        if n >= 2 && rng.random_bool(0.1) {
            pred_ids.swap(0, 1);
        }
    }
    if gts.is_empty() {
        let bbox = Box3D::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], 0.0).unwrap();
        gts.push(GtAnnotation { frame: 0, gt_id: 0, category: cat, bbox });
    }
    (gts, preds)
}
