use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::graph::QhGraph;
use crate::error::{Error, Result};
use crate::exponents::ExponentParams;
use crate::fit::{log_log, LineFit};
use crate::geometry::{Domain, Point};
use crate::whitney::{side_of, WhitneyDecomposition};

/// Past and shadow of one Whitney cube.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowRecord {
    /// Cubes met by the discrete geodesic from `x0` to the cube centre.
    pub past: Vec<u32>,
    /// Cubes whose past contains this cube.
    pub shadow: Vec<u32>,
    pub shadow_diam: f64,
    /// The geodesic to this cube could not be formed.
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct Shadows {
    pub records: Vec<ShadowRecord>,
    pub q0: usize,
}

/// Dense map from finest-generation cells to cube indices.
struct CellIndex {
    anchor: Point,
    side: f64,
    nx: i64,
    ny: i64,
    cells: Vec<u32>,
}

impl CellIndex {
    fn new(dec: &WhitneyDecomposition) -> Self {
        let side = side_of(dec.j_max);
        let (mut nx, mut ny) = (0i64, 0i64);
        for q in &dec.cubes {
            let scale = 1i64 << (dec.j_max - q.j);
            nx = nx.max((q.ix + 1) * scale);
            ny = ny.max((q.iy + 1) * scale);
        }
        let mut cells = vec![u32::MAX; (nx * ny) as usize];
        for (k, q) in dec.cubes.iter().enumerate() {
            let scale = 1i64 << (dec.j_max - q.j);
            for iy in q.iy * scale..(q.iy + 1) * scale {
                for ix in q.ix * scale..(q.ix + 1) * scale {
                    cells[(iy * nx + ix) as usize] = k as u32;
                }
            }
        }
        Self { anchor: dec.anchor, side, nx, ny, cells }
    }

    fn locate(&self, p: Point) -> Option<u32> {
        let ix = ((p.x - self.anchor.x) / self.side).floor() as i64;
        let iy = ((p.y - self.anchor.y) / self.side).floor() as i64;
        if ix < 0 || iy < 0 || ix >= self.nx || iy >= self.ny {
            return None;
        }
        let v = self.cells[(iy * self.nx + ix) as usize];
        (v != u32::MAX).then_some(v)
    }
}

/// Pasts from the geodesics of one shortest-path tree rooted at `x0`; shadows by inversion.
pub fn shadows(dec: &WhitneyDecomposition, domain: &Domain, h_grid: f64) -> Result<Shadows> {
    let graph = QhGraph::new(domain, h_grid)?;
    let tree = graph.tree(domain.x0())?;
    let index = CellIndex::new(dec);
    let step = 0.5 * index.side;
    let q0 = dec.q0 as u32;

    let pasts: Vec<Option<Vec<u32>>> = dec
        .cubes
        .par_iter()
        .enumerate()
        .map(|(k, q)| {
            let path = tree.path_points(q.center).ok()?;
            let mut past = vec![k as u32, q0];
            for w in path.windows(2) {
                let len = w[0].dist(w[1]);
                let m = ((len / step).ceil() as usize).max(1);
                for t in 0..=m {
                    let p = w[0] + (w[1] - w[0]) * (t as f64 / m as f64);
                    if let Some(c) = index.locate(p) {
                        past.push(c);
                    }
                }
            }
            past.sort_unstable();
            past.dedup();
            Some(past)
        })
        .collect();

    let mut shadow_lists: Vec<Vec<u32>> = vec![Vec::new(); dec.len()];
    for (k, past) in pasts.iter().enumerate() {
        if let Some(past) = past {
            for &c in past {
                shadow_lists[c as usize].push(k as u32);
            }
        }
    }
    let records = pasts
        .into_par_iter()
        .zip(shadow_lists.into_par_iter())
        .map(|(past, shadow)| {
            let flagged = past.is_none();
            let shadow_diam = union_diameter(dec, &shadow);
            ShadowRecord { past: past.unwrap_or_default(), shadow, shadow_diam, flagged }
        })
        .collect();
    Ok(Shadows { records, q0: dec.q0 })
}

/// Diameter of a union of cubes, via the convex hull of their corners.
fn union_diameter(dec: &WhitneyDecomposition, members: &[u32]) -> f64 {
    let mut pts: Vec<Point> = members
        .iter()
        .flat_map(|&m| dec.cubes[m as usize].bbox().corners())
        .collect();
    let hull = convex_hull(&mut pts);
    let mut best = 0.0_f64;
    for i in 0..hull.len() {
        for j in (i + 1)..hull.len() {
            best = best.max(hull[i].dist(hull[j]));
        }
    }
    best
}

fn convex_hull(pts: &mut [Point]) -> Vec<Point> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    if pts.len() < 3 {
        return pts.to_vec();
    }
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

impl Shadows {
    /// `max_{Q1} Σ_{Q ∈ P(Q1)} |Q|^eps` over unflagged cubes.
    pub fn past_sum_max(&self, dec: &WhitneyDecomposition, eps: f64) -> f64 {
        self.records
            .iter()
            .filter(|r| !r.flagged)
            .map(|r| r.past.iter().map(|&c| dec.cubes[c as usize].area().powf(eps)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn flagged_count(&self) -> usize {
        self.records.iter().filter(|r| r.flagged).count()
    }

    /// Columns `diam_q, past_size, shadow_diam, shadow_size`.
    pub fn write_csv(&self, dec: &WhitneyDecomposition, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "diam_q,past_size,shadow_diam,shadow_size")?;
        for (q, r) in dec.cubes.iter().zip(&self.records) {
            writeln!(out, "{:.16e},{},{:.16e},{}", q.diam(), r.past.len(), r.shadow_diam, r.shadow.len())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowScaling {
    pub fit: LineFit,
    pub cubes: usize,
    pub generations: usize,
}

/// Log-log slope of `diam S(Q)` against `diam Q`; on mushroom domains only cubes
/// centred inside a stem enter the fit.
pub fn shadow_scaling_fit(shadows: &Shadows, dec: &WhitneyDecomposition, domain: &Domain) -> Result<ShadowScaling> {
    let stems: Option<Vec<_>> = domain.mushrooms().map(|m| m.mushrooms.iter().map(|m| m.stem).collect());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut gens: Vec<i32> = Vec::new();
    for (q, r) in dec.cubes.iter().zip(&shadows.records) {
        if r.flagged {
            continue;
        }
        if let Some(stems) = &stems {
            if !stems.iter().any(|s| s.contains(q.center)) {
                continue;
            }
        }
        xs.push(q.diam());
        ys.push(r.shadow_diam);
        gens.push(q.j);
    }
    gens.sort_unstable();
    gens.dedup();
    if xs.len() < 10 || gens.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} cubes over {} generations; at least 10 cubes over 3 generations required",
            xs.len(),
            gens.len()
        )));
    }
    Ok(ShadowScaling { fit: log_log(&xs, &ys)?, cubes: xs.len(), generations: gens.len() })
}

/// Ratio of the two sides of the shadow-sum bound for a union `E` of cubes:
/// `Σ_Q |S(Q) ∩ E|^{p'} |Q|^{-(n - pδ)/(n(p - 1))}` over `|E|^{p'(q - 1)/q}`,
/// with `p' = p/(p - 1)`. Empty `E` gives 0.
pub fn shadow_sum_check(
    dec: &WhitneyDecomposition,
    shadows: &Shadows,
    e: &[usize],
    params: &ExponentParams,
) -> Result<f64> {
    if params.p <= 1.0 {
        return Err(Error::Domain(format!("p > 1 required, got p = {}", params.p)));
    }
    if e.is_empty() {
        return Ok(0.0);
    }
    let mut in_e = vec![false; dec.len()];
    for &k in e {
        *in_e.get_mut(k).ok_or_else(|| Error::Invalid(format!("cube index {k} out of range")))? = true;
    }
    let n = params.dim();
    let conj = params.p / (params.p - 1.0);
    let weight_exp = -(n - params.p * params.delta) / (n * (params.p - 1.0));
    let lhs: f64 = dec
        .cubes
        .iter()
        .zip(&shadows.records)
        .filter(|(_, r)| !r.flagged)
        .map(|(q, r)| {
            let meet: f64 = r
                .shadow
                .iter()
                .filter(|&&c| in_e[c as usize])
                .map(|&c| dec.cubes[c as usize].area())
                .sum();
            if meet > 0.0 {
                meet.powf(conj) * q.area().powf(weight_exp)
            } else {
                0.0
            }
        })
        .sum();
    let measure: f64 = e.iter().map(|&k| dec.cubes[k].area()).sum();
    let rhs = measure.powf(conj * (params.q - 1.0) / params.q);
    Ok(lhs / rhs)
}
