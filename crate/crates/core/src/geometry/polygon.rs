//! Planar convex polygon helpers used by the bird's-eye-view box overlap.

/// Edges shorter than this, and points closer than this to a clip line, are
/// treated as degenerate.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

/// z-component of `(b - a) x (c - a)`; positive when `c` lies left of `a -> b`.
pub fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    let u = b.sub(a);
    let v = c.sub(a);
    u.x * v.y - u.y * v.x
}

/// Unsigned shoelace area.
pub fn area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for (i, p) in poly.iter().enumerate() {
        let q = poly[(i + 1) % poly.len()];
        twice += p.x * q.y - q.x * p.y;
    }
    0.5 * twice.abs()
}

/// Clips the convex `subject` polygon against the convex, counter-clockwise
/// `clip` polygon by successive half-plane cuts.
pub fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut output = subject.to_vec();
    let mut input = Vec::with_capacity(subject.len() + clip.len());

    for (i, &a) in clip.iter().enumerate() {
        let b = clip[(i + 1) % clip.len()];
        if (b.x - a.x).hypot(b.y - a.y) < EPS {
            continue;
        }
        std::mem::swap(&mut input, &mut output);
        output.clear();
        if input.is_empty() {
            break;
        }

        let side = |p: Point2| cross(a, b, p);
        let mut prev = *input.last().unwrap();
        let mut prev_side = side(prev);
        for &cur in input.iter() {
            let cur_side = side(cur);
            let cur_in = cur_side >= -EPS;
            let prev_in = prev_side >= -EPS;
            if cur_in != prev_in {
                let t = prev_side / (prev_side - cur_side);
                output.push(Point2::new(
                    prev.x + t * (cur.x - prev.x),
                    prev.y + t * (cur.y - prev.y),
                ));
            }
            if cur_in {
                output.push(cur);
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    output
}

/// Andrew's monotone chain. Returns the hull counter-clockwise without
/// collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() < EPS && (a.y - b.y).abs() < EPS);
    if pts.len() < 3 {
        return pts;
    }

    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}
