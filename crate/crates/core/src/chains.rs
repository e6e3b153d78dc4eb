//! Chains of balls joining the base point to a target along a discrete
//! quasihyperbolic geodesic, and the empirical constants of their properties.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{lens_area, Domain, Point};
use crate::quasihyperbolic::{QhGraph, QhTree};

#[derive(Clone, Debug, Serialize)]
pub struct BallChain {
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    /// Boundary distance of each centre.
    pub dists: Vec<f64>,
    pub target: Point,
    pub s: f64,
    pub m: f64,
}

impl BallChain {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "i,x,y,r")?;
        for (i, (c, r)) in self.centers.iter().zip(&self.radii).enumerate() {
            writeln!(out, "{i},{:.16e},{:.16e},{:.16e}", c.x, c.y, r)?;
        }
        Ok(())
    }
}

/// Smallest constants for which each chain property holds.
#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    /// `max |B_i ∪ B_{i+1}| / |B_i ∩ B_{i+1}|`.
    pub union_over_intersection: f64,
    /// `max d(x, B_i) / r_i^{1/s}`.
    pub distance_to_ball: f64,
    /// `min d(B_i, ∂Ω) / r_i`; must be at least `M`.
    pub boundary_clearance: f64,
    /// Largest number of balls sharing a point.
    pub max_overlap: usize,
    /// `max |x - x_i| / r_i^{1/s}`.
    pub center_distance: f64,
    /// The last ball is exactly `B(x, d(x)/(4M))`.
    pub terminal_identity: bool,
    /// `max_r #{i : r_i > r} / r^{(1-s)/s}` over dyadic `r`; only for `s > 1`.
    pub radius_count: Option<f64>,
    /// `(r, count)` for each dyadic `r` examined.
    pub radius_counts: Vec<(f64, usize)>,
    pub valid: bool,
}

fn radius_of(d: f64, m: f64) -> f64 {
    d / (4.0 * m)
}

/// Chain from the base point to `x` for the given exponent `s` and `M > 1`,
/// using a lattice geodesic at spacing `h_grid`.
pub fn build_chain(domain: &Domain, x: Point, s: f64, m: f64, h_grid: f64) -> Result<BallChain> {
    let graph = QhGraph::new(domain, h_grid)?;
    let tree = graph.tree(domain.x0())?;
    build_chain_in_tree(domain, &tree, x, s, m)
}

/// As [`build_chain`], reusing a shortest-path tree rooted at the base point.
pub fn build_chain_in_tree(domain: &Domain, tree: &QhTree<'_, '_>, x: Point, s: f64, m: f64) -> Result<BallChain> {
    if !(m > 1.0) {
        return Err(Error::Domain(format!("M > 1 required, got M = {m}")));
    }
    if !(s >= 1.0) {
        return Err(Error::Domain(format!("s >= 1 required, got s = {s}")));
    }
    let x0 = domain.x0();
    let d0 = domain.dist_to_boundary(x0);
    let dx = domain.dist_to_boundary(x);
    if !(dx > 0.0) {
        return Err(Error::Invalid(format!("target ({}, {}) is not interior", x.x, x.y)));
    }
    let mut chain = BallChain {
        centers: vec![x0],
        radii: vec![radius_of(d0, m)],
        dists: vec![d0],
        target: x,
        s,
        m,
    };
    if x == x0 {
        return Ok(chain);
    }
    let path = tree.path_points(x)?;
    let rx = radius_of(dx, m);

    // Cursor along the polyline: segment index and parameter.
    let (mut seg, mut t) = (0usize, 0.0f64);
    let point_at = |seg: usize, t: f64| path[seg] + (path[seg + 1] - path[seg]) * t;
    let admissible = |c: Point, rc: f64, p: Point, rp: f64| {
        p.dist(c) <= 0.5 * rc.min(rp) && rp <= 2.0 * rc && rc <= 2.0 * rp
    };
    loop {
        let c = *chain.centers.last().unwrap();
        let rc = *chain.radii.last().unwrap();
        if admissible(c, rc, x, rx) {
            if c != x {
                chain.centers.push(x);
                chain.radii.push(rx);
                chain.dists.push(dx);
            }
            return Ok(chain);
        }
        // March forward in small steps; keep the last admissible position.
        let step = rc / 16.0;
        let mut best: Option<(usize, f64, Point, f64, f64)> = None;
        let (mut ks, mut kt) = (seg, t);
        let mut at_end = false;
        while !at_end {
            let len = path[ks].dist(path[ks + 1]);
            let dt = if len > 0.0 { step / len } else { 1.0 };
            kt += dt;
            if kt >= 1.0 {
                if ks + 2 >= path.len() {
                    kt = 1.0;
                    at_end = true;
                } else {
                    ks += 1;
                    kt = 0.0;
                }
            }
            let p = point_at(ks, kt);
            let dp = domain.dist_to_boundary(p);
            let rp = radius_of(dp, m);
            if dp > 0.0 && admissible(c, rc, p, rp) {
                best = Some((ks, kt, p, rp, dp));
            } else if p.dist(c) > rc {
                break;
            }
        }
        let Some((bs, bt, p, rp, dp)) = best else {
            return Err(Error::Construction(format!(
                "chain stalled at ({}, {}) with radius {rc}",
                c.x, c.y
            )));
        };
        chain.centers.push(p);
        chain.radii.push(rp);
        chain.dists.push(dp);
        seg = bs;
        t = bt;
    }
}

pub fn verify_chain(chain: &BallChain, s: f64, m: f64) -> ChainReport {
    let k = chain.len();
    let x = chain.target;
    let inv_s = 1.0 / s;

    let mut union_over_intersection: f64 = if k > 1 { 0.0 } else { 1.0 };
    for i in 0..k.saturating_sub(1) {
        let (r1, r2) = (chain.radii[i], chain.radii[i + 1]);
        let lens = lens_area(r1, r2, chain.centers[i].dist(chain.centers[i + 1]));
        let union = PI * (r1 * r1 + r2 * r2) - lens;
        union_over_intersection = union_over_intersection.max(if lens > 0.0 { union / lens } else { f64::INFINITY });
    }

    let mut distance_to_ball: f64 = 0.0;
    let mut center_distance: f64 = 0.0;
    let mut boundary_clearance = f64::INFINITY;
    for i in 0..k {
        let r = chain.radii[i];
        let dist = x.dist(chain.centers[i]);
        distance_to_ball = distance_to_ball.max((dist - r).max(0.0) / r.powf(inv_s));
        center_distance = center_distance.max(dist / r.powf(inv_s));
        boundary_clearance = boundary_clearance.min((chain.dists[i] - r) / r);
    }

    let max_overlap = max_overlap(&chain.centers, &chain.radii);

    let last = k - 1;
    let terminal_identity = chain.centers[last] == x && chain.radii[last] == radius_of(chain.dists[last], m);

    let (radius_count, radius_counts) = if s > 1.0 {
        let lo = chain.radii.iter().copied().fold(f64::INFINITY, f64::min).log2().floor() as i32 - 1;
        let hi = chain.radii.iter().copied().fold(0.0, f64::max).log2().ceil() as i32;
        let counts: Vec<(f64, usize)> = (lo..=hi)
            .map(|e| {
                let r = (e as f64).exp2();
                (r, chain.radii.iter().filter(|&&ri| ri > r).count())
            })
            .collect();
        let c = counts
            .iter()
            .map(|&(r, n)| n as f64 / r.powf((1.0 - s) / s))
            .fold(0.0, f64::max);
        (Some(c), counts)
    } else {
        (None, Vec::new())
    };

    let valid = boundary_clearance >= m && terminal_identity && union_over_intersection.is_finite();
    ChainReport {
        union_over_intersection,
        distance_to_ball,
        boundary_clearance,
        max_overlap,
        center_distance,
        terminal_identity,
        radius_count,
        radius_counts,
        valid,
    }
}

/// Maximum depth of a union of closed disks. The maximum is attained at a
/// pairwise boundary intersection point or at a disk centre.
fn max_overlap(centers: &[Point], radii: &[f64]) -> usize {
    let depth = |p: Point| {
        centers
            .iter()
            .zip(radii)
            .filter(|(c, r)| p.dist(**c) <= **r * (1.0 + 1e-12))
            .count()
    };
    let mut best = 0;
    for &c in centers {
        best = best.max(depth(c));
    }
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let (c1, c2, r1, r2) = (centers[i], centers[j], radii[i], radii[j]);
            let d = c1.dist(c2);
            if d == 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
                continue;
            }
            let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
            let hh = (r1 * r1 - a * a).max(0.0).sqrt();
            let u = (c2 - c1) * (1.0 / d);
            let base = c1 + u * a;
            let perp = Point::new(-u.y, u.x);
            for p in [base + perp * hh, base - perp * hh] {
                best = best.max(depth(p));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_chain_at_base_point() {
        let d = Domain::unit_disk();
        let chain = build_chain(&d, d.x0(), 1.0, 2.0, 1.0 / 32.0).unwrap();
        assert_eq!(chain.len(), 1);
        let rep = verify_chain(&chain, 1.0, 2.0);
        assert!(rep.valid);
        assert_eq!(rep.max_overlap, 1);
        assert_eq!(rep.center_distance, 0.0);
        assert_eq!(rep.boundary_clearance, 7.0);
    }

    #[test]
    fn disk_chain_is_valid() {
        let d = Domain::unit_disk();
        let x = Point::new(0.9 * 0.6, 0.9 * 0.8);
        let chain = build_chain(&d, x, 1.0, 2.0, 1.0 / 128.0).unwrap();
        let rep = verify_chain(&chain, 1.0, 2.0);
        assert!(rep.valid, "{rep:?}");
        assert!(rep.boundary_clearance >= 2.0);
        for w in chain.centers.windows(2).zip(chain.radii.windows(2)) {
            let ((a, b), (ra, rb)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
            assert!(a.dist(b) <= 0.5 * ra.min(rb) + 1e-15);
            assert!(ra / rb <= 2.0 && rb / ra <= 2.0);
        }
        assert!(rep.max_overlap < 40, "{}", rep.max_overlap);
    }

    #[test]
    fn overlap_of_nested_disks() {
        let c = vec![Point::new(0.0, 0.0), Point::new(0.0, 0.0), Point::new(5.0, 0.0)];
        assert_eq!(max_overlap(&c, &[1.0, 2.0, 1.0]), 2);
        let c = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.8)];
        assert_eq!(max_overlap(&c, &[1.0, 1.0, 1.0]), 3);
    }
}
