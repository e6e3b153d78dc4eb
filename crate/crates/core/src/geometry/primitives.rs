use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn square(center: Point, side: f64) -> Self {
        let half = 0.5 * side;
        Self::new(Point::new(center.x - half, center.y - half), Point::new(center.x + half, center.y + half))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        self.min.midpoint(self.max)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.min,
            Point::new(self.max.x, self.min.y),
            self.max,
            Point::new(self.min.x, self.max.y),
        ]
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::new(
            Point::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            Point::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        )
    }

    /// Euclidean distance from `p` to the closed box (0 inside).
    pub fn dist_point(&self, p: Point) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }

    /// Distance from an interior point to the box boundary.
    pub fn inner_dist(&self, p: Point) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }

    /// Area of the intersection with another box.
    pub fn overlap_area(&self, other: &BBox) -> f64 {
        let w = self.max.x.min(other.max.x) - self.min.x.max(other.min.x);
        let h = self.max.y.min(other.max.y) - self.min.y.max(other.min.y);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }
}

pub fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Liang-Barsky clip test: does the closed segment meet the closed box?
fn segment_hits_box(a: Point, b: Point, bx: &BBox) -> bool {
    let d = b - a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let checks = [
        (-d.x, a.x - bx.min.x),
        (d.x, bx.max.x - a.x),
        (-d.y, a.y - bx.min.y),
        (d.y, bx.max.y - a.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// One piece of a domain boundary: a segment or a counterclockwise circular arc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPiece {
    Segment { a: Point, b: Point },
    /// Arc from angle `start` counterclockwise through `sweep` radians, `0 < sweep <= 2π`.
    Arc { center: Point, radius: f64, start: f64, sweep: f64 },
}

impl BoundaryPiece {
    pub fn circle(center: Point, radius: f64) -> Self {
        BoundaryPiece::Arc { center, radius, start: 0.0, sweep: TAU }
    }

    pub fn dist_point(&self, p: Point) -> f64 {
        match *self {
            BoundaryPiece::Segment { a, b } => point_segment_dist(p, a, b),
            BoundaryPiece::Arc { center, radius, start, sweep } => {
                let v = p - center;
                let rho = v.norm();
                if rho == 0.0 {
                    return radius;
                }
                if arc_covers(start, sweep, v.y.atan2(v.x)) {
                    (rho - radius).abs()
                } else {
                    let (e0, e1) = arc_endpoints(center, radius, start, sweep);
                    p.dist(e0).min(p.dist(e1))
                }
            }
        }
    }

    /// Exact set distance between the piece and a closed box (0 when they meet).
    pub fn dist_box(&self, bx: &BBox) -> f64 {
        match *self {
            BoundaryPiece::Segment { a, b } => {
                if segment_hits_box(a, b, bx) {
                    return 0.0;
                }
                let mut best = bx.dist_point(a).min(bx.dist_point(b));
                for c in bx.corners() {
                    best = best.min(point_segment_dist(c, a, b));
                }
                best
            }
            BoundaryPiece::Arc { center, radius, start, sweep } => {
                let on_arc = |theta: f64| center + Point::new(theta.cos(), theta.sin()) * radius;
                let (e0, e1) = arc_endpoints(center, radius, start, sweep);
                if bx.contains(e0) || bx.contains(e1) {
                    return 0.0;
                }
                // Circle crossing any box edge inside the arc's angular range.
                let corners = bx.corners();
                for k in 0..4 {
                    let (a, b) = (corners[k], corners[(k + 1) % 4]);
                    for q in circle_segment_intersections(center, radius, a, b) {
                        let v = q - center;
                        if arc_covers(start, sweep, v.y.atan2(v.x)) {
                            return 0.0;
                        }
                    }
                }
                // Critical points of θ ↦ dist(arc(θ), box): endpoints, rays through
                // corners (nearest box point is a corner) and axis extremes (nearest
                // box point lies on an edge).
                let mut best = bx.dist_point(e0).min(bx.dist_point(e1));
                let mut candidates: Vec<f64> = vec![0.0, 0.5 * PI, PI, 1.5 * PI];
                for c in corners {
                    let v = c - center;
                    if v.norm() > 0.0 {
                        let t = v.y.atan2(v.x);
                        candidates.push(t);
                        candidates.push(t + PI);
                    }
                }
                for t in candidates {
                    if arc_covers(start, sweep, t) {
                        best = best.min(bx.dist_point(on_arc(t)));
                    }
                }
                best
            }
        }
    }

    /// A dense polyline sampling of the piece with spacing at most `step`.
    pub fn sample(&self, step: f64) -> Vec<Point> {
        match *self {
            BoundaryPiece::Segment { a, b } => {
                let m = ((a.dist(b) / step).ceil() as usize).max(1);
                (0..=m).map(|k| a + (b - a) * (k as f64 / m as f64)).collect()
            }
            BoundaryPiece::Arc { center, radius, start, sweep } => {
                let m = ((radius * sweep / step).ceil() as usize).max(1);
                (0..=m)
                    .map(|k| {
                        let t = start + sweep * k as f64 / m as f64;
                        center + Point::new(t.cos(), t.sin()) * radius
                    })
                    .collect()
            }
        }
    }
}

fn arc_covers(start: f64, sweep: f64, theta: f64) -> bool {
    if sweep >= TAU {
        return true;
    }
    let rel = (theta - start).rem_euclid(TAU);
    rel <= sweep + 1e-15
}

fn arc_endpoints(center: Point, radius: f64, start: f64, sweep: f64) -> (Point, Point) {
    let e0 = center + Point::new(start.cos(), start.sin()) * radius;
    let end = start + sweep;
    let e1 = center + Point::new(end.cos(), end.sin()) * radius;
    (e0, e1)
}

fn circle_segment_intersections(center: Point, radius: f64, a: Point, b: Point) -> Vec<Point> {
    let d = b - a;
    let f = a - center;
    let qa = d.dot(d);
    let qb = 2.0 * f.dot(d);
    let qc = f.dot(f) - radius * radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if qa == 0.0 || disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)]
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .map(|t| a + d * t)
        .collect()
}

/// Area of the two-disk intersection (lens).
pub fn lens_area(r1: f64, r2: f64, center_dist: f64) -> f64 {
    let d = center_dist;
    if d >= r1 + r2 {
        return 0.0;
    }
    let (small, large) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if d <= large - small {
        return PI * small * small;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0);
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.sqrt()
}
