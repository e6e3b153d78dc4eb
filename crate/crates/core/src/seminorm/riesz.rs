use rayon::prelude::*;

use super::GridFunction;
use crate::error::{Error, Result};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `∫_{[-h/2, h/2]^2} |w|^{δ-2} dw`.
fn self_cell_weight(h: f64, delta: f64) -> f64 {
    let angular = simpson(|t| t.cos().powf(-delta), 0.0, std::f64::consts::FRAC_PI_4, 512);
    8.0 / delta * (0.5 * h).powf(delta) * angular
}

struct RieszKernel {
    nx: usize,
    /// `h^2 |(di, dj) h|^{δ-2}` indexed by `|dj| * nx + |di|`; the origin holds the self-cell weight.
    table: Vec<f64>,
}

impl RieszKernel {
    fn new(f: &GridFunction, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 2.0) {
            return Err(Error::Domain(format!("0 < δ < 2 required, got δ = {delta}")));
        }
        let nodes = &*f.nodes;
        let h = nodes.h;
        let (nx, ny) = (nodes.nx, nodes.ny);
        let mut table = vec![0.0; nx * ny];
        for dj in 0..ny {
            for di in 0..nx {
                let r = h * ((di * di + dj * dj) as f64).sqrt();
                table[dj * nx + di] = if r > 0.0 { h * h * r.powf(delta - 2.0) } else { self_cell_weight(h, delta) };
            }
        }
        Ok(Self { nx, table })
    }

    fn eval(&self, f: &GridFunction, k: usize) -> f64 {
        let nodes = &*f.nodes;
        let (i, j) = nodes.cell(k);
        let mut sum = 0.0;
        for (m, &v) in f.values.iter().enumerate() {
            if v != 0.0 {
                let (a, b) = nodes.cell(m);
                sum += v * self.table[(b - j).unsigned_abs() as usize * self.nx + (a - i).unsigned_abs() as usize];
            }
        }
        sum
    }
}

/// `I_δ f(x) = ∫ f(y) |x - y|^{δ-n} dy` at every node, with the singular cell integrated exactly.
pub fn riesz_potential(f: &GridFunction, delta: f64) -> Result<GridFunction> {
    let kernel = RieszKernel::new(f, delta)?;
    let values = (0..f.len()).into_par_iter().map(|k| kernel.eval(f, k)).collect();
    Ok(GridFunction { nodes: f.nodes.clone(), values })
}

/// `I_δ f` at node `k` only.
pub fn riesz_at(f: &GridFunction, delta: f64, k: usize) -> Result<f64> {
    if k >= f.len() {
        return Err(Error::Invalid(format!("node {k} out of range ({} nodes)", f.len())));
    }
    Ok(RieszKernel::new(f, delta)?.eval(f, k))
}

/// `sup_t |{|I_δ f| > t}| t^{n/(n-δ)} / ‖f‖_1^{n/(n-δ)}` over a log-spaced grid of 256 levels.
pub fn weak_type_ratio(f: &GridFunction, delta: f64) -> Result<f64> {
    let norm = f.l1_norm();
    if !(norm > 0.0) {
        return Err(Error::Invalid("weak-type ratio needs a nonzero function".into()));
    }
    let pot = riesz_potential(f, delta)?;
    let mut mags: Vec<f64> = pot.values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    mags.sort_by(f64::total_cmp);
    let (lo, hi) = (mags[0], mags[mags.len() - 1]);
    let expo = 2.0 / (2.0 - delta);
    let cell = f.nodes.cell_area();
    let levels = 256;
    let mut best: f64 = 0.0;
    for l in 0..levels {
        let t = if hi > lo { lo * (hi / lo).powf(l as f64 / levels as f64) } else { 0.5 * lo };
        let above = mags.len() - mags.partition_point(|&v| v <= t);
        best = best.max(above as f64 * cell * t.powf(expo));
    }
    Ok(best / norm.powf(expo))
}
