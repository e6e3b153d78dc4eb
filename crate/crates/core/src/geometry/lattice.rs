use serde::Serialize;

use super::primitives::{BBox, Point};
use super::Domain;
use crate::error::{Error, Result};

const ABSENT: u32 = u32::MAX;

/// Interior nodes of a uniform lattice, kept when `d(x) >= h/2`.
///
/// Local lattice coordinates `(i, j)` run over `0..nx` and `0..ny`; the node
/// at `(i, j)` sits at `origin + ((i0 + i) h, (j0 + j) h)`. Nodes are ordered
/// row-major with `j` outer.
#[derive(Clone, Debug, Serialize)]
pub struct NodeSet {
    pub origin: Point,
    pub h: f64,
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
    #[serde(skip)]
    index: Vec<u32>,
    cells: Vec<(u32, u32)>,
    points: Vec<Point>,
    dist: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> Point {
        self.points[k]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Boundary distance of node `k`.
    pub fn dist(&self, k: usize) -> f64 {
        self.dist[k]
    }

    pub fn dists(&self) -> &[f64] {
        &self.dist
    }

    pub fn cell(&self, k: usize) -> (i64, i64) {
        let (i, j) = self.cells[k];
        (i as i64, j as i64)
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Node index at local lattice coordinates, if present.
    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return None;
        }
        let v = self.index[j as usize * self.nx + i as usize];
        (v != ABSENT).then_some(v as usize)
    }

    pub fn lattice_point(&self, i: i64, j: i64) -> Point {
        Point::new(
            self.origin.x + (self.i0 + i) as f64 * self.h,
            self.origin.y + (self.j0 + j) as f64 * self.h,
        )
    }

    /// Nearest node to `p` by lattice rounding, if that node is present.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let i = ((p.x - self.origin.x) / self.h).round() as i64 - self.i0;
        let j = ((p.y - self.origin.y) / self.h).round() as i64 - self.j0;
        self.index_of(i, j)
    }

    /// Index of the node closest to `p` over all nodes.
    pub fn nearest(&self, p: Point) -> usize {
        if let Some(k) = self.locate(p) {
            return k;
        }
        let mut best = (f64::INFINITY, 0);
        for (k, q) in self.points.iter().enumerate() {
            let d = q.dist(p);
            if d < best.0 {
                best = (d, k);
            }
        }
        best.1
    }

    pub fn total_area(&self) -> f64 {
        self.len() as f64 * self.cell_area()
    }
}

/// Lattice nodes anchored at the bounding-box corner with `d(x) >= h/2`.
pub fn sample_interior(domain: &Domain, h: f64) -> Result<NodeSet> {
    let b = domain.bbox();
    sample_window(domain, h, b.min, &b, |_| true)
}

/// Nodes of the lattice `origin + h Z^2` inside `window` with `d(x) >= h/2`
/// that also satisfy `keep`.
pub fn sample_window(
    domain: &Domain,
    h: f64,
    origin: Point,
    window: &BBox,
    keep: impl Fn(Point) -> bool,
) -> Result<NodeSet> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Invalid(format!("grid spacing must be positive, got {h}")));
    }
    let tol = 1e-9;
    let i0 = ((window.min.x - origin.x) / h - tol).ceil() as i64;
    let i1 = ((window.max.x - origin.x) / h + tol).floor() as i64;
    let j0 = ((window.min.y - origin.y) / h - tol).ceil() as i64;
    let j1 = ((window.max.y - origin.y) / h + tol).floor() as i64;
    if i1 < i0 || j1 < j0 {
        return Err(Error::Resolution(format!("no lattice points in window at h = {h}")));
    }
    let nx = (i1 - i0 + 1) as usize;
    let ny = (j1 - j0 + 1) as usize;
    if nx.checked_mul(ny).map_or(true, |n| n >= ABSENT as usize) {
        return Err(Error::Invalid(format!("lattice of {nx} x {ny} nodes is too large")));
    }
    let mut set = NodeSet {
        origin,
        h,
        i0,
        j0,
        nx,
        ny,
        index: vec![ABSENT; nx * ny],
        cells: Vec::new(),
        points: Vec::new(),
        dist: Vec::new(),
    };
    for j in 0..ny {
        for i in 0..nx {
            let p = set.lattice_point(i as i64, j as i64);
            let d = domain.dist_to_boundary(p);
            if d >= 0.5 * h && d > 0.0 && keep(p) {
                set.index[j * nx + i] = set.points.len() as u32;
                set.cells.push((i as u32, j as u32));
                set.points.push(p);
                set.dist.push(d);
            }
        }
    }
    if set.is_empty() {
        return Err(Error::Resolution(format!("no interior nodes at h = {h}")));
    }
    Ok(set)
}
