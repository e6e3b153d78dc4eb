//! Whitney decomposition by top-down dyadic subdivision.
//!
//! Cubes of generation `j` have side `2^-j / sqrt(2)`, so their diameter is
//! exactly `2^-j`. The lattice is anchored at the lower-left corner of the
//! domain's bounding box. A cube is accepted when
//! `diam Q <= dist(Q, ∂Ω) <= 4 diam Q`, with the set distance computed exactly
//! from the boundary pieces. Every point with `d(x) > 2 · 2^-j_max` is covered.

use std::io::Write;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BBox, Domain, Point};

/// Coverage constant: the union contains `{d(x) > COVERAGE_CONSTANT · 2^-j_max}`.
pub const COVERAGE_CONSTANT: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WhitneyCube {
    pub j: i32,
    pub ix: i64,
    pub iy: i64,
    pub center: Point,
    pub side: f64,
    /// `dist(Q, ∂Ω)` at construction time.
    pub dist: f64,
}

impl WhitneyCube {
    pub fn diam(&self) -> f64 {
        self.side * std::f64::consts::SQRT_2
    }

    pub fn bbox(&self) -> BBox {
        BBox::square(self.center, self.side)
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }
}

pub fn side_of(j: i32) -> f64 {
    (-j as f64).exp2() / std::f64::consts::SQRT_2
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    pub cubes: Vec<WhitneyCube>,
    /// Cubes sharing at least a boundary point, by index.
    pub adjacency: Vec<Vec<u32>>,
    pub q0: usize,
    pub j0: i32,
    pub j_max: i32,
    pub anchor: Point,
    pub domain_measure: f64,
    lookup: FxHashMap<(i32, i64, i64), u32>,
    boundary_distance: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyReport {
    pub cube_count: usize,
    pub violations: usize,
    pub overlaps: usize,
    pub covered_area: f64,
    pub coverage_deficit: f64,
    pub coverage_deficit_fraction: f64,
    pub max_generation_jump: i32,
    pub j_max: i32,
}

#[derive(Clone, Copy)]
struct Candidate {
    j: i32,
    ix: i64,
    iy: i64,
}

enum Fate {
    Accept(WhitneyCube),
    Split,
    Drop,
}

impl Candidate {
    fn children(self) -> [Candidate; 4] {
        let (x, y, j) = (2 * self.ix, 2 * self.iy, self.j + 1);
        [
            Candidate { j, ix: x, iy: y },
            Candidate { j, ix: x + 1, iy: y },
            Candidate { j, ix: x, iy: y + 1 },
            Candidate { j, ix: x + 1, iy: y + 1 },
        ]
    }
}

fn cube_box(anchor: Point, j: i32, ix: i64, iy: i64) -> BBox {
    let s = side_of(j);
    let min = Point::new(anchor.x + ix as f64 * s, anchor.y + iy as f64 * s);
    BBox::new(min, Point::new(min.x + s, min.y + s))
}

fn classify(domain: &Domain, anchor: Point, c: Candidate, j_max: i32) -> Fate {
    let b = cube_box(anchor, c.j, c.ix, c.iy);
    let diam = (-c.j as f64).exp2();
    let dist = domain.box_boundary_distance(&b);
    let can_split = c.j < j_max;
    if dist == 0.0 {
        return if can_split { Fate::Split } else { Fate::Drop };
    }
    if !domain.contains(b.center()) {
        return Fate::Drop;
    }
    if dist >= diam && dist <= 4.0 * diam {
        return Fate::Accept(WhitneyCube { j: c.j, ix: c.ix, iy: c.iy, center: b.center(), side: b.width(), dist });
    }
    if can_split {
        Fate::Split
    } else {
        Fate::Drop
    }
}

/// Decompose `domain` down to generation `j_max`.
pub fn decompose(domain: &Domain, j_max: i32) -> Result<WhitneyDecomposition> {
    let bbox = domain.bbox();
    let extent = bbox.width().max(bbox.height());
    let j0 = (-(std::f64::consts::SQRT_2 * extent).log2()).floor() as i32;
    if j_max < j0 {
        return Err(Error::Invalid(format!("j_max = {j_max} is below the root generation {j0}")));
    }
    let anchor = bbox.min;
    let mut cubes = Vec::new();
    let mut frontier = vec![Candidate { j: j0, ix: 0, iy: 0 }];
    while !frontier.is_empty() {
        let fates: Vec<(Candidate, Fate)> = frontier
            .par_iter()
            .map(|&c| (c, classify(domain, anchor, c, j_max)))
            .collect();
        let mut next = Vec::new();
        for (c, fate) in fates {
            match fate {
                Fate::Accept(q) => cubes.push(q),
                Fate::Split => next.extend(c.children()),
                Fate::Drop => {}
            }
        }
        frontier = next;
    }
    cubes.sort_by(|a, b| (a.j, a.iy, a.ix).cmp(&(b.j, b.iy, b.ix)));
    let lookup = cubes
        .iter()
        .enumerate()
        .map(|(k, q)| ((q.j, q.ix, q.iy), k as u32))
        .collect();
    let mut dec = WhitneyDecomposition {
        cubes,
        adjacency: Vec::new(),
        q0: 0,
        j0,
        j_max,
        anchor,
        domain_measure: domain.measure(),
        lookup,
        boundary_distance: None,
    };
    dec.q0 = dec.locate(domain.x0()).ok_or_else(|| {
        Error::Construction(format!(
            "no Whitney cube contains the base point at j_max = {j_max}; increase j_max"
        ))
    })?;
    dec.adjacency = dec.build_adjacency();
    Ok(dec)
}

impl WhitneyDecomposition {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Cube of the decomposition containing `p` (the finest-generation lookup wins
    /// only when no coarser cube contains `p`; ties on shared edges go to the
    /// cube with `p` in its half-open lower-left cell).
    pub fn locate(&self, p: Point) -> Option<usize> {
        for j in self.j0..=self.j_max {
            let s = side_of(j);
            let ix = ((p.x - self.anchor.x) / s).floor() as i64;
            let iy = ((p.y - self.anchor.y) / s).floor() as i64;
            if let Some(&k) = self.lookup.get(&(j, ix, iy)) {
                return Some(k as usize);
            }
        }
        None
    }

    /// Append a cube without checks, for testing the verifier.
    pub fn insert_unchecked(&mut self, cube: WhitneyCube) {
        self.cubes.push(cube);
        self.adjacency.push(Vec::new());
        self.boundary_distance = None;
    }

    fn build_adjacency(&self) -> Vec<Vec<u32>> {
        let fine = side_of(self.j_max);
        let eps = 1e-3 * fine;
        (0..self.cubes.len())
            .into_par_iter()
            .map(|k| {
                let b = self.cubes[k].bbox();
                let steps = ((b.width() / fine).round() as usize).max(1);
                let mut probes = Vec::with_capacity(4 * steps + 4);
                for t in 0..steps {
                    let u = (t as f64 + 0.5) / steps as f64;
                    let x = b.min.x + u * b.width();
                    let y = b.min.y + u * b.height();
                    probes.push(Point::new(x, b.min.y - eps));
                    probes.push(Point::new(x, b.max.y + eps));
                    probes.push(Point::new(b.min.x - eps, y));
                    probes.push(Point::new(b.max.x + eps, y));
                }
                for c in b.corners() {
                    let dx = if c.x > b.center().x { eps } else { -eps };
                    let dy = if c.y > b.center().y { eps } else { -eps };
                    probes.push(Point::new(c.x + dx, c.y + dy));
                }
                let mut adj: Vec<u32> = probes
                    .into_iter()
                    .filter_map(|p| self.locate(p))
                    .filter(|&m| m != k)
                    .map(|m| m as u32)
                    .collect();
                adj.sort_unstable();
                adj.dedup();
                adj
            })
            .collect()
    }

    /// Exact boundary distances of all cubes, recomputed from the domain.
    pub fn recompute_distances(&mut self, domain: &Domain) {
        let d = self.cubes.par_iter().map(|q| domain.box_boundary_distance(&q.bbox())).collect();
        self.boundary_distance = Some(d);
    }

    pub fn verify(&self, domain: &Domain) -> WhitneyReport {
        let violations = self
            .cubes
            .par_iter()
            .filter(|q| {
                let b = q.bbox();
                let dist = domain.box_boundary_distance(&b);
                let diam = q.diam();
                let tol = 1e-12 * diam;
                !(dist + tol >= diam && dist <= 4.0 * diam + tol && domain.contains(q.center))
            })
            .count();
        let overlaps = count_overlaps(&self.cubes);
        let covered_area: f64 = self.cubes.iter().map(WhitneyCube::area).sum();
        let deficit = (self.domain_measure - covered_area).max(0.0);
        let max_generation_jump = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(k, adj)| adj.iter().map(move |&m| (k, m as usize)))
            .map(|(k, m)| (self.cubes[k].j - self.cubes[m].j).abs())
            .max()
            .unwrap_or(0);
        WhitneyReport {
            cube_count: self.cubes.len(),
            violations,
            overlaps,
            covered_area,
            coverage_deficit: deficit,
            coverage_deficit_fraction: deficit / self.domain_measure,
            max_generation_jump,
            j_max: self.j_max,
        }
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "j,ix,iy,diam,dist")?;
        for (k, q) in self.cubes.iter().enumerate() {
            let dist = self.boundary_distance.as_ref().map_or(q.dist, |d| d[k]);
            writeln!(out, "{},{},{},{:.16e},{:.16e}", q.j, q.ix, q.iy, q.diam(), dist)?;
        }
        Ok(())
    }
}

/// Pairs of cubes whose interiors intersect, found by a sweep over `min.x`.
fn count_overlaps(cubes: &[WhitneyCube]) -> usize {
    let mut boxes: Vec<BBox> = cubes.iter().map(WhitneyCube::bbox).collect();
    boxes.sort_by(|a, b| a.min.x.total_cmp(&b.min.x));
    let mut active: Vec<BBox> = Vec::new();
    let mut count = 0;
    for b in boxes {
        let tol = 1e-9 * b.width();
        active.retain(|a| a.max.x > b.min.x + tol);
        for a in &active {
            let w = a.max.x.min(b.max.x) - a.min.x.max(b.min.x);
            let h = a.max.y.min(b.max.y) - a.min.y.max(b.min.y);
            let t = tol.min(1e-9 * a.width());
            if w > t && h > t {
                count += 1;
            }
        }
        active.push(b);
    }
    count
}
