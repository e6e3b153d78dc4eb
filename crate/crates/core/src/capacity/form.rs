use rayon::prelude::*;

use crate::exponents::ExponentParams;
use crate::geometry::NodeSet;
use crate::seminorm::angular_moment;

/// Finite-difference gradient component: up to two `(node, coefficient)` entries.
#[derive(Clone, Copy, Debug, Default)]
struct Diff {
    len: u8,
    at: [(u32, f64); 2],
}

impl Diff {
    fn eval(&self, u: &[f64]) -> f64 {
        self.at[..self.len as usize].iter().map(|&(k, c)| c * u[k as usize]).sum()
    }
}

#[derive(Clone, Debug)]
struct GradTerm {
    weight: f64,
    dx: Diff,
    dy: Diff,
}

/// The discrete energy `Σ_k h^n g_u(x_k)` written out as explicit pair and
/// gradient terms, so that it can be differentiated and, for `p = 2`,
/// assembled into a matrix.
#[derive(Clone, Debug)]
pub struct EnergyForm {
    pub p: f64,
    n: usize,
    /// Outgoing pairs `(m, weight)` of each node, CSR layout.
    out_ptr: Vec<usize>,
    out: Vec<(u32, f64)>,
    /// Incoming pairs `(k, weight)` of each node.
    in_ptr: Vec<usize>,
    inc: Vec<(u32, f64)>,
    grads: Vec<GradTerm>,
}

fn pow_abs(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v * v
    } else {
        v.abs().powf(p)
    }
}

/// `d/dv |v|^p`.
fn dpow(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        2.0 * v
    } else if v == 0.0 {
        0.0
    } else {
        p * v.abs().powf(p - 1.0) * v.signum()
    }
}

impl EnergyForm {
    pub fn new(nodes: &NodeSet, params: &ExponentParams) -> Self {
        let n = nodes.len();
        let h = nodes.h;
        let cell = nodes.cell_area();
        let dim = params.dim();
        let expo = -(dim + params.p * params.delta);
        let e = params.p * (1.0 - params.delta);
        let moment = angular_moment(params.p);

        let rows: Vec<(Vec<(u32, f64)>, GradTerm)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let (i, j) = nodes.cell(k);
                let radius = params.tau * nodes.dist(k);
                let rc = radius / h;
                let span = rc.ceil() as i64;
                let xk = nodes.point(k);
                let mut row = Vec::new();
                for dj in -span..=span {
                    for di in -span..=span {
                        let m2 = (di * di + dj * dj) as f64;
                        if m2 == 0.0 || m2 >= rc * rc {
                            continue;
                        }
                        if let Some(m) = nodes.index_of(i + di, j + dj) {
                            let w = cell * cell * xk.dist(nodes.point(m)).powf(expo);
                            row.push((m as u32, w));
                        }
                    }
                }
                let diff = |plus: Option<usize>, minus: Option<usize>| {
                    let mut d = Diff::default();
                    let mut push = |m: usize, c: f64| {
                        d.at[d.len as usize] = (m as u32, c);
                        d.len += 1;
                    };
                    match (plus, minus) {
                        (Some(a), Some(b)) => {
                            push(a, 0.5 / h);
                            push(b, -0.5 / h);
                        }
                        (Some(a), None) => {
                            push(a, 1.0 / h);
                            push(k, -1.0 / h);
                        }
                        (None, Some(b)) => {
                            push(k, 1.0 / h);
                            push(b, -1.0 / h);
                        }
                        (None, None) => {}
                    }
                    d
                };
                let rho = (0.5 * h).min(radius);
                let grad = GradTerm {
                    weight: cell * moment * rho.powf(e) / e,
                    dx: diff(nodes.index_of(i + 1, j), nodes.index_of(i - 1, j)),
                    dy: diff(nodes.index_of(i, j + 1), nodes.index_of(i, j - 1)),
                };
                (row, grad)
            })
            .collect();

        let mut out_ptr = vec![0];
        let mut out = Vec::new();
        let mut grads = Vec::with_capacity(n);
        let mut in_lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (k, (row, grad)) in rows.into_iter().enumerate() {
            for &(m, w) in &row {
                in_lists[m as usize].push((k as u32, w));
            }
            out.extend(row);
            out_ptr.push(out.len());
            grads.push(grad);
        }
        let mut in_ptr = vec![0];
        let mut inc = Vec::with_capacity(out.len());
        for l in in_lists {
            inc.extend(l);
            in_ptr.push(inc.len());
        }
        Self { p: params.p, n, out_ptr, out, in_ptr, inc, grads }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn node_energy(&self, u: &[f64], k: usize) -> f64 {
        let p = self.p;
        let uk = u[k];
        let pairs: f64 = self.out[self.out_ptr[k]..self.out_ptr[k + 1]]
            .iter()
            .map(|&(m, w)| w * pow_abs(uk - u[m as usize], p))
            .sum();
        let g = &self.grads[k];
        let (gx, gy) = (g.dx.eval(u), g.dy.eval(u));
        let norm2 = gx * gx + gy * gy;
        let corr = if norm2 > 0.0 { g.weight * if p == 2.0 { norm2 } else { norm2.powf(0.5 * p) } } else { 0.0 };
        pairs + corr
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let parts: Vec<f64> = (0..self.n).into_par_iter().map(|k| self.node_energy(u, k)).collect();
        parts.iter().sum()
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut grad: Vec<f64> = (0..self.n)
            .into_par_iter()
            .map(|i| {
                let ui = u[i];
                let outgoing: f64 = self.out[self.out_ptr[i]..self.out_ptr[i + 1]]
                    .iter()
                    .map(|&(m, w)| w * dpow(ui - u[m as usize], p))
                    .sum();
                let incoming: f64 = self.inc[self.in_ptr[i]..self.in_ptr[i + 1]]
                    .iter()
                    .map(|&(k, w)| w * dpow(u[k as usize] - ui, p))
                    .sum();
                outgoing - incoming
            })
            .collect();
        for g in &self.grads {
            let (gx, gy) = (g.dx.eval(u), g.dy.eval(u));
            let norm2 = gx * gx + gy * gy;
            if norm2 == 0.0 {
                continue;
            }
            let scale = g.weight * p * if p == 2.0 { 1.0 } else { norm2.powf(0.5 * p - 1.0) };
            for &(m, c) in &g.dx.at[..g.dx.len as usize] {
                grad[m as usize] += scale * gx * c;
            }
            for &(m, c) in &g.dy.at[..g.dy.len as usize] {
                grad[m as usize] += scale * gy * c;
            }
        }
        grad
    }

    /// Diagonal of the `p = 2` quadratic form.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (k, dk) in d.iter_mut().enumerate() {
            *dk += self.out[self.out_ptr[k]..self.out_ptr[k + 1]].iter().map(|&(_, w)| w).sum::<f64>();
            *dk += self.inc[self.in_ptr[k]..self.in_ptr[k + 1]].iter().map(|&(_, w)| w).sum::<f64>();
        }
        for g in &self.grads {
            for diff in [&g.dx, &g.dy] {
                for &(m, c) in &diff.at[..diff.len as usize] {
                    d[m as usize] += g.weight * c * c;
                }
            }
        }
        d
    }

    /// Triplets `(row, col, value)` of the symmetric matrix `Q` with `E(u) = uᵀ Q u` at `p = 2`.
    pub fn quadratic_triplets(&self) -> Vec<(u32, u32, f64)> {
        let mut t = Vec::with_capacity(4 * self.out.len() + 8 * self.n);
        for k in 0..self.n {
            for &(m, w) in &self.out[self.out_ptr[k]..self.out_ptr[k + 1]] {
                let k = k as u32;
                t.push((k, k, w));
                t.push((m, m, w));
                t.push((k, m, -w));
                t.push((m, k, -w));
            }
        }
        for g in &self.grads {
            for diff in [&g.dx, &g.dy] {
                let at = &diff.at[..diff.len as usize];
                for &(a, ca) in at {
                    for &(b, cb) in at {
                        t.push((a, b, g.weight * ca * cb));
                    }
                }
            }
        }
        t.sort_unstable_by_key(|&(a, b, _)| (a, b));
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(t.len() / 2);
        for (a, b, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == a && last.1 == b => last.2 += v,
                _ => merged.push((a, b, v)),
            }
        }
        merged
    }
}

/// Symmetric sparse matrix in CSR layout.
#[derive(Clone, Debug)]
pub(crate) struct Csr {
    ptr: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl Csr {
    pub fn from_sorted(n: usize, t: &[(u32, u32, f64)]) -> Self {
        let mut ptr = vec![0; n + 1];
        for &(a, _, _) in t {
            ptr[a as usize + 1] += 1;
        }
        for i in 0..n {
            ptr[i + 1] += ptr[i];
        }
        Self { ptr, idx: t.iter().map(|e| e.1).collect(), val: t.iter().map(|e| e.2).collect() }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = (self.ptr[i]..self.ptr[i + 1]).map(|e| self.val[e] * x[self.idx[e] as usize]).sum();
        });
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.ptr[i]..self.ptr[i + 1]).map(move |e| (self.idx[e] as usize, self.val[e]))
    }
}
