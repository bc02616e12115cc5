//! Oriented 3D box algebra.
//!
//! Boxes rotate about the vertical axis only. Overlap is computed as the
//! bird's-eye-view polygon overlap times the vertical interval overlap, and
//! the enclosing hull used by gIoU is the 2D convex hull of both footprints
//! times the spanning vertical interval.

pub mod polygon;

use std::f64::consts::PI;

use crate::detection::{CategoryId, Detection};
use crate::error::{Error, Result};
use polygon::Point2;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// 7-DOF box: center `(x, y, z)`, width `w`, length `l` (along the heading),
/// height `h`, heading `yaw`, and an optional ground-plane velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub yaw: f64,
    pub velocity: Option<[f64; 2]>,
}

impl Box3D {
    /// Builds a validated box; `yaw` is wrapped into `(-pi, pi]`.
    pub fn new(center: [f64; 3], dims: [f64; 3], yaw: f64) -> Result<Self> {
        let [x, y, z] = center;
        let [w, l, h] = dims;
        let b = Self {
            x,
            y,
            z,
            w,
            l,
            h,
            yaw: wrap_angle(yaw),
            velocity: None,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn with_velocity(mut self, vx: f64, vy: f64) -> Self {
        self.velocity = Some([vx, vy]);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x, self.y, self.z, self.w, self.l, self.h, self.yaw]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidBox(format!("non-finite field in {self:?}")));
        }
        if !(self.w > 0.0 && self.l > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidBox(format!(
                "dimensions must be positive, got w={} l={} h={}",
                self.w, self.l, self.h
            )));
        }
        if let Some(v) = self.velocity {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidBox("non-finite velocity".into()));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.w * self.l * self.h
    }

    pub fn bottom(&self) -> f64 {
        self.z - 0.5 * self.h
    }

    pub fn top(&self) -> f64 {
        self.z + 0.5 * self.h
    }

    /// Footprint corners, counter-clockwise.
    pub fn bev_corners(&self) -> [Point2; 4] {
        let (s, c) = self.yaw.sin_cos();
        let hl = 0.5 * self.l;
        let hw = 0.5 * self.w;
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(dx, dy)| {
            Point2::new(self.x + c * dx - s * dy, self.y + s * dx + c * dy)
        })
    }

    /// Applies a planar rigid motion: rotate by `angle` about the origin, then
    /// translate by `(tx, ty)`.
    pub fn transformed(&self, angle: f64, tx: f64, ty: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let mut out = *self;
        out.x = c * self.x - s * self.y + tx;
        out.y = s * self.x + c * self.y + ty;
        out.yaw = wrap_angle(self.yaw + angle);
        out.velocity = self
            .velocity
            .map(|[vx, vy]| [c * vx - s * vy, s * vx + c * vy]);
        out
    }
}

pub fn volume(b: &Box3D) -> f64 {
    b.volume()
}

fn vertical_overlap(a: &Box3D, b: &Box3D) -> f64 {
    (a.top().min(b.top()) - a.bottom().max(b.bottom())).max(0.0)
}

pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let clipped = polygon::clip_convex(&a.bev_corners(), &b.bev_corners());
    let area = polygon::area(&clipped);
    if area < polygon::EPS {
        0.0
    } else {
        area
    }
}

pub fn intersection_volume(a: &Box3D, b: &Box3D) -> f64 {
    let dz = vertical_overlap(a, b);
    if dz <= 0.0 {
        return 0.0;
    }
    // Cheap reject on the circumscribed circles.
    let reach = 0.5 * (a.l.hypot(a.w) + b.l.hypot(b.w));
    if (a.x - b.x).hypot(a.y - b.y) > reach {
        return 0.0;
    }
    let v = bev_intersection_area(a, b) * dz;
    if v < polygon::EPS {
        0.0
    } else {
        v
    }
}

/// Volume of the enclosing hull: 2D convex hull of both footprints times the
/// vertical span of both boxes.
pub fn hull_volume(a: &Box3D, b: &Box3D) -> f64 {
    let mut pts = Vec::with_capacity(8);
    pts.extend_from_slice(&a.bev_corners());
    pts.extend_from_slice(&b.bev_corners());
    let span = a.top().max(b.top()) - a.bottom().min(b.bottom());
    polygon::area(&polygon::convex_hull(&pts)) * span
}

/// Intersection, union and hull volumes of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub intersection: f64,
    pub union: f64,
    pub hull: f64,
}

impl Overlap {
    pub fn of(a: &Box3D, b: &Box3D) -> Self {
        let intersection = intersection_volume(a, b);
        let union = a.volume() + b.volume() - intersection;
        // The hull contains both boxes; round-off must not push it below.
        let hull = hull_volume(a, b).max(union);
        Self {
            intersection,
            union,
            hull,
        }
    }

    pub fn iou(&self) -> f64 {
        self.intersection / self.union
    }

    pub fn giou(&self) -> f64 {
        self.iou() - (self.hull - self.union) / self.hull
    }
}

pub fn iou3d(a: &Box3D, b: &Box3D) -> f64 {
    let inter = intersection_volume(a, b);
    if inter == 0.0 {
        return 0.0;
    }
    inter / (a.volume() + b.volume() - inter)
}

/// Generalized IoU in `(-1, 1]`.
pub fn giou3d(a: &Box3D, b: &Box3D) -> f64 {
    Overlap::of(a, b).giou()
}

/// Greedy class-aware suppression over items already ranked by priority.
/// An item is dropped when its IoU with a kept item of the same category
/// exceeds `threshold`. Returns the kept indices in rank order.
pub fn suppress_ranked<'a, T, F>(ranked: &'a [T], threshold: f64, parts: F) -> Vec<usize>
where
    F: Fn(&'a T) -> (&'a Box3D, CategoryId),
{
    let mut kept: Vec<usize> = Vec::new();
    for (i, item) in ranked.iter().enumerate() {
        let (bbox, cat) = parts(item);
        let suppressed = kept.iter().any(|&k| {
            let (kb, kc) = parts(&ranked[k]);
            kc == cat && iou3d(kb, bbox) > threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    kept
}

/// Class-aware non-maximum suppression; survivors come back in descending
/// score order (input order among equal scores).
pub fn nms(dets: &[Detection], threshold: f64) -> Vec<Detection> {
    let mut ranked: Vec<&Detection> = dets.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    suppress_ranked(&ranked, threshold, |d| (&d.bbox, d.category))
        .into_iter()
        .map(|i| ranked[i].clone())
        .collect()
}
