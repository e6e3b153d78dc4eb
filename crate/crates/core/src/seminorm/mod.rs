//! Grid functions, the localized fractional energy density `g_u`, L^q
//! deviations, mushroom test functions, truncations and Riesz potentials.
//!
//! Quadrature is the node-centred midpoint rule with cell weight `h^2`. The
//! node's own cell is replaced by the exact integral of the linearized
//! integrand `|∇u(x)·w|^p |w|^{-n-pδ}` over the disk `|w| < min(h/2, τ d(x))`.

mod riesz;
mod truncation;

pub use riesz::{riesz_at, riesz_potential, weak_type_ratio};
pub use truncation::{truncate, truncation_bounds_check, TruncationReport};

use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::exponents::ExponentParams;
use crate::geometry::{Domain, NodeSet, Point};

#[derive(Clone, Debug)]
pub struct GridFunction {
    pub nodes: Arc<NodeSet>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Arc<NodeSet>, values: Vec<f64>) -> Result<Self> {
        if values.len() != nodes.len() {
            return Err(Error::Invalid(format!("{} values for {} nodes", values.len(), nodes.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value at node {k}")));
        }
        Ok(Self { nodes, values })
    }

    pub fn from_fn(nodes: Arc<NodeSet>, f: impl Fn(Point) -> f64) -> Self {
        let values = nodes.points().iter().map(|&p| f(p)).collect();
        Self { nodes, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { nodes: Arc::clone(&self.nodes), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `∫ |f|` by the midpoint rule.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.nodes.cell_area()
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x,y,value")?;
        for (p, v) in self.nodes.points().iter().zip(&self.values) {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", p.x, p.y, v)?;
        }
        Ok(())
    }

    /// Read `x,y,value` rows onto an existing node set; every node must be given once.
    pub fn read_csv(nodes: Arc<NodeSet>, input: impl BufRead) -> Result<Self> {
        let mut values = vec![f64::NAN; nodes.len()];
        for (line_no, line) in input.lines().enumerate().skip(1) {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Invalid(format!("line {}: {e}", line_no + 1)))?;
            if fields.len() != 3 {
                return Err(Error::Invalid(format!("line {}: expected 3 fields", line_no + 1)));
            }
            let k = nodes
                .locate(Point::new(fields[0], fields[1]))
                .ok_or_else(|| Error::Invalid(format!("line {}: point is not a node", line_no + 1)))?;
            values[k] = fields[2];
        }
        Self::new(nodes, values)
    }
}

/// `∫_0^{2π} |cos θ|^p dθ`.
pub fn angular_moment(p: f64) -> f64 {
    2.0 * std::f64::consts::PI.sqrt() * gamma(0.5 * (p + 1.0)) / gamma(0.5 * p + 1.0)
}

fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}

/// Per-node energy densities and their integral.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub g: Vec<f64>,
    /// Integral of the near-diagonal correction alone.
    pub correction: f64,
    pub correction_share: f64,
}

/// Precomputed lattice offsets, kernel weights and pruning tables for one
/// grid function and exponent set.
struct Stencil<'a> {
    u: &'a GridFunction,
    params: &'a ExponentParams,
    /// `(di, dj, m2)` sorted by `m2 = di^2 + dj^2`.
    offsets: Vec<(i32, i32, u32)>,
    /// Pair weight `h^n |x - y|^{-n-pδ}` indexed by `m2`.
    kernel: Vec<f64>,
    /// Integral images of nodes with a differing 4-neighbour and of absent lattice points.
    variation: Vec<u32>,
    absent: Vec<u32>,
    moment: f64,
    /// Frequent exact values and, for each, the nodes holding a different value.
    plateaus: Vec<(u64, Vec<u32>)>,
}

impl<'a> Stencil<'a> {
    fn new(u: &'a GridFunction, params: &'a ExponentParams) -> Self {
        let nodes = &*u.nodes;
        let h = nodes.h;
        let r_max = nodes.dists().iter().copied().fold(0.0, f64::max) * params.tau / h;
        let m2_max = (r_max * r_max).ceil() as i64;
        let span = r_max.ceil() as i32;
        let mut offsets = Vec::new();
        for dj in -span..=span {
            for di in -span..=span {
                let m2 = (di as i64 * di as i64 + dj as i64 * dj as i64) as u32;
                if m2 > 0 && (m2 as i64) <= m2_max {
                    offsets.push((di, dj, m2));
                }
            }
        }
        offsets.sort_by_key(|&(di, dj, m2)| (m2, dj, di));
        let n = params.dim();
        let expo = -(n + params.p * params.delta);
        let kernel = (0..=m2_max.max(0) as usize)
            .map(|m2| if m2 == 0 { 0.0 } else { h.powf(n) * (h * (m2 as f64).sqrt()).powf(expo) })
            .collect();

        let (nx, ny) = (nodes.nx, nodes.ny);
        let mut var = vec![0u32; nx * ny];
        let mut abs = vec![0u32; nx * ny];
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                let cell = j as usize * nx + i as usize;
                match nodes.index_of(i, j) {
                    None => abs[cell] = 1,
                    Some(k) => {
                        let differs = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(di, dj)| {
                            nodes.index_of(i + di, j + dj).is_some_and(|m| u.values[m] != u.values[k])
                        });
                        var[cell] = differs as u32;
                    }
                }
            }
        }
        Self {
            u,
            params,
            offsets,
            kernel,
            variation: integral_image(&var, nx, ny),
            absent: integral_image(&abs, nx, ny),
            moment: angular_moment(params.p),
            plateaus: plateaus(&u.values),
        }
    }

    fn square_is_flat(&self, i: i64, j: i64, half: i64) -> bool {
        let nodes = &*self.u.nodes;
        let (nx, ny) = (nodes.nx as i64, nodes.ny as i64);
        let (i0, i1, j0, j1) = (i - half, i + half, j - half, j + half);
        if i0 < 0 || j0 < 0 || i1 >= nx || j1 >= ny {
            return false;
        }
        box_sum(&self.variation, nodes.nx, i0, i1, j0, j1) == 0 && box_sum(&self.absent, nodes.nx, i0, i1, j0, j1) == 0
    }

    fn gradient(&self, i: i64, j: i64, k: usize) -> (f64, f64) {
        let nodes = &*self.u.nodes;
        let v = &self.u.values;
        let h = nodes.h;
        let d = |plus: Option<usize>, minus: Option<usize>| match (plus, minus) {
            (Some(a), Some(b)) => (v[a] - v[b]) / (2.0 * h),
            (Some(a), None) => (v[a] - v[k]) / h,
            (None, Some(b)) => (v[k] - v[b]) / h,
            (None, None) => 0.0,
        };
        (
            d(nodes.index_of(i + 1, j), nodes.index_of(i - 1, j)),
            d(nodes.index_of(i, j + 1), nodes.index_of(i, j - 1)),
        )
    }

    /// `(g_u(x_k), correction part)`.
    fn density(&self, k: usize) -> (f64, f64) {
        let nodes = &*self.u.nodes;
        let p = self.params.p;
        let h = nodes.h;
        let radius = self.params.tau * nodes.dist(k);
        let rc = radius / h;
        let (i, j) = nodes.cell(k);
        if self.square_is_flat(i, j, (rc.ceil() as i64).max(1)) {
            return (0.0, 0.0);
        }
        let uk = self.u.values[k];
        let limit = rc * rc;
        let reach = self.offsets.partition_point(|o| (o.2 as f64) < limit);
        let others = self.plateaus.iter().find(|(bits, _)| *bits == uk.to_bits()).map(|(_, d)| d);
        let mut sum = 0.0;
        match others {
            Some(others) if others.len() < reach => {
                for &m in others {
                    let (a, b) = nodes.cell(m as usize);
                    let m2 = ((a - i) * (a - i) + (b - j) * (b - j)) as f64;
                    if m2 < limit {
                        sum += pow_abs(uk - self.u.values[m as usize], p) * self.kernel[m2 as usize];
                    }
                }
            }
            _ => {
                for &(di, dj, m2) in &self.offsets[..reach] {
                    if let Some(m) = nodes.index_of(i + di as i64, j + dj as i64) {
                        let diff = uk - self.u.values[m];
                        if diff != 0.0 {
                            sum += pow_abs(diff, p) * self.kernel[m2 as usize];
                        }
                    }
                }
            }
        }
        let (gx, gy) = self.gradient(i, j, k);
        let grad = gx.hypot(gy);
        let rho = (0.5 * h).min(radius);
        let e = p * (1.0 - self.params.delta);
        let corr = if grad > 0.0 { pow_abs(grad, p) * self.moment * rho.powf(e) / e } else { 0.0 };
        (sum + corr, corr)
    }
}

/// Values shared by at least a sixteenth of the nodes, with the complement of each.
fn plateaus(values: &[f64]) -> Vec<(u64, Vec<u32>)> {
    let mut counts: rustc_hash::FxHashMap<u64, usize> = Default::default();
    for v in values {
        *counts.entry(v.to_bits()).or_default() += 1;
    }
    let threshold = (values.len() / 16).max(64);
    let mut frequent: Vec<u64> = counts.into_iter().filter(|&(_, c)| c >= threshold).map(|(b, _)| b).collect();
    frequent.sort_unstable();
    frequent
        .into_iter()
        .map(|bits| {
            let others = (0..values.len() as u32).filter(|&m| values[m as usize].to_bits() != bits).collect();
            (bits, others)
        })
        .collect()
}

fn integral_image(a: &[u32], nx: usize, ny: usize) -> Vec<u32> {
    let w = nx + 1;
    let mut s = vec![0u32; w * (ny + 1)];
    for j in 0..ny {
        let mut row = 0u32;
        for i in 0..nx {
            row += a[j * nx + i];
            s[(j + 1) * w + i + 1] = s[j * w + i + 1] + row;
        }
    }
    s
}

fn box_sum(s: &[u32], nx: usize, i0: i64, i1: i64, j0: i64, j1: i64) -> u32 {
    let w = nx + 1;
    let at = |i: i64, j: i64| s[j as usize * w + i as usize];
    at(i1 + 1, j1 + 1) + at(i0, j0) - at(i0, j1 + 1) - at(i1 + 1, j0)
}

/// `g_u` at node `k`.
pub fn g_u_pointwise(u: &GridFunction, k: usize, params: &ExponentParams) -> Result<f64> {
    if k >= u.len() {
        return Err(Error::Invalid(format!("node {k} out of range ({} nodes)", u.len())));
    }
    Ok(Stencil::new(u, params).density(k).0)
}

/// `∫_Ω g_u` as the ordered sum of node densities times `h^n`.
pub fn fractional_energy(u: &GridFunction, params: &ExponentParams) -> EnergyBreakdown {
    let stencil = Stencil::new(u, params);
    let parts: Vec<(f64, f64)> = (0..u.len()).into_par_iter().map(|k| stencil.density(k)).collect();
    let w = u.nodes.cell_area();
    let mut total = 0.0;
    let mut correction = 0.0;
    for &(g, c) in &parts {
        total += g;
        correction += c;
    }
    total *= w;
    correction *= w;
    let correction_share = if total > 0.0 { correction / total } else { 0.0 };
    EnergyBreakdown { total, g: parts.into_iter().map(|(g, _)| g).collect(), correction, correction_share }
}

/// `Σ |u - ū|^q h^n` with `ū` the discrete mean.
pub fn lq_deviation(u: &GridFunction, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("q >= 1 required, got q = {q}")));
    }
    let mean = u.mean();
    Ok(u.values.iter().map(|v| pow_abs(v - mean, q)).sum::<f64>() * u.nodes.cell_area())
}

/// Test function of mushroom `i` on the given nodes.
pub fn mushroom_test_function(domain: &Domain, i: usize, nodes: Arc<NodeSet>) -> Result<GridFunction> {
    let m = domain
        .mushrooms()
        .ok_or_else(|| Error::Invalid("domain has no mushrooms".into()))?;
    let cap = m
        .mushrooms
        .get(i)
        .ok_or_else(|| Error::Invalid(format!("mushroom index {i} out of range ({} mushrooms)", m.mushrooms.len())))?;
    Ok(GridFunction::from_fn(nodes, |p| cap.test_value(p)))
}
