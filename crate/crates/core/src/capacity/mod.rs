//! Discrete relative capacity of a target set with respect to a base ball,
//! and empirical Sobolev-Poincaré constants.
//!
//! The admissible class is `{u : u = 0 on B₀, u >= 1 on A}` on grid nodes.
//! Minimizers take values in `[0, 1]`, so the problem is posed on that box.
//! For `p = 2` the energy is a quadratic form and its stationarity system is
//! solved by conjugate gradients; otherwise, and as a cross-check at `p = 2`,
//! a diagonally scaled projected gradient method is used.

mod form;

pub use form::EnergyForm;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentParams;
use crate::geometry::{Domain, NodeSet, Point};
use crate::seminorm::{fractional_energy, lq_deviation, GridFunction};
use form::Csr;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "SolverSettings::default_tol")]
    pub tol: f64,
    #[serde(default = "SolverSettings::default_max_iter")]
    pub max_iter: usize,
    pub seed: u64,
}

impl SolverSettings {
    fn default_tol() -> f64 {
        1e-8
    }

    fn default_max_iter() -> usize {
        100_000
    }

    pub fn with_seed(seed: u64) -> Self {
        Self { tol: Self::default_tol(), max_iter: Self::default_max_iter(), seed }
    }
}

#[derive(Clone, Debug)]
pub struct CapacityProblem {
    pub nodes: Arc<NodeSet>,
    pub params: ExponentParams,
    pub base_center: Point,
    pub base_radius: f64,
    /// Nodes of `B₀`.
    pub base: Vec<usize>,
    /// Nodes of `A`.
    pub target: Vec<usize>,
    pub solver: SolverSettings,
}

impl CapacityProblem {
    /// Problem with base ball `B(center, radius)`; `target` lists node indices.
    pub fn new(
        nodes: Arc<NodeSet>,
        params: ExponentParams,
        base_center: Point,
        base_radius: f64,
        target: Vec<usize>,
        solver: SolverSettings,
    ) -> Result<Self> {
        let base: Vec<usize> = (0..nodes.len()).filter(|&k| nodes.point(k).dist(base_center) < base_radius).collect();
        if base.is_empty() {
            return Err(Error::Invalid("base ball contains no nodes".into()));
        }
        if target.is_empty() {
            return Err(Error::Invalid("target set is empty".into()));
        }
        let mut target = target;
        target.sort_unstable();
        target.dedup();
        if let Some(&k) = target.iter().find(|&&k| k >= nodes.len()) {
            return Err(Error::Invalid(format!("target node {k} out of range")));
        }
        if let Some(&k) = target.iter().find(|k| base.binary_search(k).is_ok()) {
            return Err(Error::Invalid(format!("target node {k} lies in the base ball")));
        }
        Ok(Self { nodes, params, base_center, base_radius, base, target, solver })
    }

    /// Base ball `B(x₀, d(x₀)/8)`.
    pub fn with_default_base(
        domain: &Domain,
        nodes: Arc<NodeSet>,
        params: ExponentParams,
        target: Vec<usize>,
        solver: SolverSettings,
    ) -> Result<Self> {
        let x0 = domain.x0();
        Self::new(nodes, params, x0, domain.dist_to_boundary(x0) / 8.0, target, solver)
    }

    pub fn target_measure(&self) -> f64 {
        self.target.len() as f64 * self.nodes.cell_area()
    }

    pub fn base_measure(&self) -> f64 {
        self.base.len() as f64 * self.nodes.cell_area()
    }

    /// Per-node role: `Some(value)` for fixed nodes.
    fn fixed(&self) -> Vec<Option<f64>> {
        let mut f = vec![None; self.nodes.len()];
        for &k in &self.base {
            f[k] = Some(0.0);
        }
        for &k in &self.target {
            f[k] = Some(1.0);
        }
        f
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    #[serde(skip)]
    pub minimizer: GridFunction,
    pub method: &'static str,
    pub iterations: usize,
    pub residual: f64,
    /// Accepted iterates at which clamping to `[0, 1]` increased the energy.
    pub clamp_violations: usize,
}

/// Infimum of the discrete energy over the admissible class.
pub fn relative_capacity(prob: &CapacityProblem) -> Result<CapacityResult> {
    if prob.params.p == 2.0 {
        linear_capacity(prob)
    } else {
        projected_gradient_capacity(prob)
    }
}

/// Jacobi-preconditioned conjugate gradients on the free-node block of the
/// `p = 2` stationarity system.
pub fn linear_capacity(prob: &CapacityProblem) -> Result<CapacityResult> {
    if prob.params.p != 2.0 {
        return Err(Error::Domain(format!("linear solve needs p = 2, got p = {}", prob.params.p)));
    }
    let form = EnergyForm::new(&prob.nodes, &prob.params);
    let q = Csr::from_sorted(form.len(), &form.quadratic_triplets());
    let fixed = prob.fixed();
    let n = form.len();
    let mut u: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();

    // Right-hand side -Q_FA 1 restricted to free nodes.
    let mut qu = vec![0.0; n];
    q.mul(&u, &mut qu);
    let free = |k: usize| fixed[k].is_none();
    let mut r: Vec<f64> = (0..n).map(|k| if free(k) { -qu[k] } else { 0.0 }).collect();
    let diag: Vec<f64> = (0..n).map(|k| q.row(k).find(|e| e.0 == k).map_or(1.0, |e| e.1)).collect();
    let b_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    let mut z: Vec<f64> = (0..n).map(|k| r[k] / diag[k]).collect();
    let mut d = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut qd = vec![0.0; n];
    let tol = 1e-13 * b_norm.max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    let mut res = b_norm;
    while res > tol {
        if iterations >= prob.solver.max_iter {
            return Err(Error::NonConvergence { iterations, residual: res / b_norm });
        }
        q.mul(&d, &mut qd);
        for k in 0..n {
            if !free(k) {
                qd[k] = 0.0;
            }
        }
        let alpha = rz / d.iter().zip(&qd).map(|(a, b)| a * b).sum::<f64>();
        for k in 0..n {
            x[k] += alpha * d[k];
            r[k] -= alpha * qd[k];
            z[k] = r[k] / diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            d[k] = z[k] + beta * d[k];
        }
        res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        iterations += 1;
    }
    for k in 0..n {
        if free(k) {
            u[k] = x[k].clamp(0.0, 1.0);
        }
    }
    let value = form.energy(&u);
    Ok(CapacityResult {
        value,
        minimizer: GridFunction::new(Arc::clone(&prob.nodes), u)?,
        method: "linear",
        iterations,
        residual: res / b_norm.max(f64::MIN_POSITIVE),
        clamp_violations: 0,
    })
}

/// Projected gradient on the box `[0, 1]` with diagonal scaling, Armijo
/// backtracking halving from a unit step, and a seeded random start. Stops
/// when the relative energy decrease of an accepted step falls below `tol`.
pub fn projected_gradient_capacity(prob: &CapacityProblem) -> Result<CapacityResult> {
    let form = EnergyForm::new(&prob.nodes, &prob.params);
    let fixed = prob.fixed();
    let n = form.len();
    let scale: Vec<f64> = form.diagonal().iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(prob.solver.seed);
    let mut u: Vec<f64> = fixed.iter().map(|f| f.unwrap_or_else(|| rng.gen::<f64>())).collect();
    let mut e = form.energy(&u);
    let mut clamp_violations = 0;
    let mut last_decrease = f64::INFINITY;
    for it in 0..prob.solver.max_iter {
        let g = form.gradient(&u);
        let mut alpha = 1.0;
        let accepted = loop {
            let raw: Vec<f64> = (0..n)
                .map(|k| if fixed[k].is_some() { u[k] } else { u[k] - alpha * scale[k] * g[k] })
                .collect();
            let trial: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            let slope: f64 = (0..n).map(|k| g[k] * (u[k] - trial[k])).sum();
            let et = form.energy(&trial);
            if et <= e - 1e-4 * slope || slope <= 0.0 {
                if form.energy(&raw) < et * (1.0 - 1e-12) {
                    clamp_violations += 1;
                }
                break Some((trial, et));
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                break None;
            }
        };
        let Some((trial, et)) = accepted else {
            break;
        };
        let decrease = (e - et) / e.max(f64::MIN_POSITIVE);
        u = trial;
        e = et;
        last_decrease = decrease;
        if decrease < prob.solver.tol {
            return Ok(CapacityResult {
                value: e,
                minimizer: GridFunction::new(Arc::clone(&prob.nodes), u)?,
                method: "projected-gradient",
                iterations: it + 1,
                residual: decrease,
                clamp_violations,
            });
        }
    }
    if last_decrease < prob.solver.tol {
        return Ok(CapacityResult {
            value: e,
            minimizer: GridFunction::new(Arc::clone(&prob.nodes), u)?,
            method: "projected-gradient",
            iterations: prob.solver.max_iter,
            residual: last_decrease,
            clamp_violations,
        });
    }
    Err(Error::NonConvergence { iterations: prob.solver.max_iter, residual: last_decrease })
}

/// Dense LU solve of the `p = 2` stationarity system; returns the energy of the clamped solution.
pub fn dense_capacity_oracle(prob: &CapacityProblem) -> Result<f64> {
    if prob.params.p != 2.0 {
        return Err(Error::Domain("dense oracle needs p = 2".into()));
    }
    let form = EnergyForm::new(&prob.nodes, &prob.params);
    let n = form.len();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (a, b, v) in form.quadratic_triplets() {
        q[(a as usize, b as usize)] += v;
    }
    let fixed = prob.fixed();
    let free: Vec<usize> = (0..n).filter(|&k| fixed[k].is_none()).collect();
    let mut u: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let m = free.len();
    let mut qff = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (a, &ka) in free.iter().enumerate() {
        for (b, &kb) in free.iter().enumerate() {
            qff[(a, b)] = q[(ka, kb)];
        }
        rhs[a] = -prob.target.iter().map(|&t| q[(ka, t)]).sum::<f64>();
    }
    let x = qff
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Construction("singular stationarity system".into()))?;
    for (a, &k) in free.iter().enumerate() {
        u[k] = x[a].clamp(0.0, 1.0);
    }
    Ok(form.energy(&u))
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityRow {
    pub target_size: usize,
    pub measure: f64,
    pub capacity: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityTable {
    pub rows: Vec<CapacityRow>,
    /// Empirical constant: the largest ratio.
    pub constant: f64,
}

/// `|A|^{p/q} / cap(A)` for each target set, reusing the base ball and solver of `prob`.
pub fn capacity_inequality_check(prob: &CapacityProblem, targets: &[Vec<usize>]) -> Result<CapacityTable> {
    let (p, q) = (prob.params.p, prob.params.q);
    if q < p {
        return Err(Error::Domain(format!("q >= p required, got p = {p}, q = {q}")));
    }
    let rows = targets
        .iter()
        .map(|a| {
            let sub = CapacityProblem::new(
                Arc::clone(&prob.nodes),
                prob.params,
                prob.base_center,
                prob.base_radius,
                a.clone(),
                prob.solver,
            )?;
            let cap = relative_capacity(&sub)?;
            let measure = sub.target_measure();
            Ok(CapacityRow {
                target_size: sub.target.len(),
                measure,
                capacity: cap.value,
                ratio: measure.powf(p / q) / cap.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(CapacityTable { rows, constant })
}

/// Seeded axis-aligned rectangles of lattice nodes with between `min_cells` and
/// `max_cells` nodes, disjoint from the base ball of `prob`.
pub fn random_target_rectangles(
    nodes: &NodeSet,
    base_center: Point,
    base_radius: f64,
    count: usize,
    min_cells: usize,
    max_cells: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if min_cells == 0 || min_cells > max_cells {
        return Err(Error::Invalid(format!("bad rectangle size range {min_cells}..={max_cells}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let side_max = max_cells as i64;
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Construction("no admissible target rectangle found".into()));
        }
        let w = rng.gen_range(1..=side_max);
        let hgt = rng.gen_range(1..=side_max);
        let cells = (w * hgt) as usize;
        if cells < min_cells || cells > max_cells || w > nodes.nx as i64 || hgt > nodes.ny as i64 {
            continue;
        }
        let i0 = rng.gen_range(0..=nodes.nx as i64 - w);
        let j0 = rng.gen_range(0..=nodes.ny as i64 - hgt);
        let mut set = Vec::with_capacity(cells);
        let mut ok = true;
        'fill: for j in j0..j0 + hgt {
            for i in i0..i0 + w {
                match nodes.index_of(i, j) {
                    Some(k) if nodes.point(k).dist(base_center) >= base_radius => set.push(k),
                    _ => {
                        ok = false;
                        break 'fill;
                    }
                }
            }
        }
        if ok {
            out.push(set);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayleighSettings {
    #[serde(default = "RayleighSettings::default_starts")]
    pub starts: usize,
    #[serde(default = "RayleighSettings::default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "RayleighSettings::default_tol")]
    pub tol: f64,
    pub seed: u64,
}

impl RayleighSettings {
    fn default_starts() -> usize {
        4
    }

    fn default_max_iter() -> usize {
        500
    }

    fn default_tol() -> f64 {
        1e-12
    }

    pub fn with_seed(seed: u64) -> Self {
        Self { starts: Self::default_starts(), max_iter: Self::default_max_iter(), tol: Self::default_tol(), seed }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpEstimate {
    /// Lower bound for the constant: the larger of the two routes below.
    pub value: f64,
    pub candidate_max: f64,
    pub candidate_index: usize,
    pub rayleigh: Option<f64>,
}

/// `max_u ‖u - ū‖_q^q / E(u)^{q/p}` over the candidates and, for `p = q = 2`,
/// over Rayleigh-quotient ascent from seeded random starts.
pub fn sp_constant_estimate(
    nodes: &Arc<NodeSet>,
    params: &ExponentParams,
    candidates: &[GridFunction],
    rayleigh: Option<RayleighSettings>,
) -> Result<SpEstimate> {
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for (i, u) in candidates.iter().enumerate() {
        let lhs = lq_deviation(u, params.q)?;
        let energy = fractional_energy(u, params).total;
        if lhs == 0.0 || energy == 0.0 {
            continue;
        }
        let quotient = lhs / energy.powf(params.q / params.p);
        if quotient > best.0 {
            best = (quotient, i);
        }
    }
    let ray = match rayleigh {
        Some(s) if params.p == 2.0 && params.q == 2.0 => Some(rayleigh_ascent(nodes, params, &s)?),
        _ => None,
    };
    if best.1 == usize::MAX && ray.is_none() {
        return Err(Error::InsufficientData("every candidate is constant".into()));
    }
    let candidate_max = best.0.max(0.0);
    Ok(SpEstimate {
        value: candidate_max.max(ray.unwrap_or(0.0)),
        candidate_max,
        candidate_index: best.1,
        rayleigh: ray,
    })
}

/// Inverse iteration `u ← Q⁺ (u - ū)` with mean removal: each step solves the
/// energy system, which is the energy-preconditioned gradient step of the
/// Rayleigh quotient `h^n ‖u - ū‖² / uᵀ Q u` taken with unit length.
fn rayleigh_ascent(nodes: &Arc<NodeSet>, params: &ExponentParams, s: &RayleighSettings) -> Result<f64> {
    let form = EnergyForm::new(nodes, params);
    let q = Csr::from_sorted(form.len(), &form.quadratic_triplets());
    let n = form.len();
    let cell = nodes.cell_area();
    let diag: Vec<f64> = (0..n).map(|k| q.row(k).find(|e| e.0 == k).map_or(0.0, |e| e.1)).collect();
    // Rank-one shift c·11ᵀ/n removes the constant null space without moving mean-zero solutions.
    let shift = diag.iter().sum::<f64>() / n as f64;
    let apply = |x: &[f64], y: &mut [f64]| {
        q.mul(x, y);
        let m = x.iter().sum::<f64>() / n as f64;
        for v in y.iter_mut() {
            *v += shift * m;
        }
    };
    let pre: Vec<f64> = diag.iter().map(|d| 1.0 / (d + shift / n as f64)).collect();
    let solve = |b: &[f64]| -> Result<Vec<f64>> {
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&pre).map(|(a, b)| a * b).collect();
        let mut d = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut qd = vec![0.0; n];
        for it in 0.. {
            let res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if res <= 1e-13 * b_norm {
                break;
            }
            if it >= 10 * n {
                return Err(Error::NonConvergence { iterations: it, residual: res / b_norm });
            }
            apply(&d, &mut qd);
            let alpha = rz / d.iter().zip(&qd).map(|(a, b)| a * b).sum::<f64>();
            for k in 0..n {
                x[k] += alpha * d[k];
                r[k] -= alpha * qd[k];
                z[k] = r[k] * pre[k];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                d[k] = z[k] + beta * d[k];
            }
        }
        Ok(x)
    };
    let center = |u: &mut Vec<f64>| {
        let m = u.iter().sum::<f64>() / n as f64;
        u.iter_mut().for_each(|v| *v -= m);
    };
    let quotient = |u: &[f64]| {
        let mut qu = vec![0.0; n];
        q.mul(u, &mut qu);
        let energy: f64 = u.iter().zip(&qu).map(|(a, b)| a * b).sum();
        cell * u.iter().map(|v| v * v).sum::<f64>() / energy
    };
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut best: f64 = 0.0;
    for _ in 0..s.starts.max(1) {
        let mut u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        center(&mut u);
        let mut r = quotient(&u);
        for _ in 0..s.max_iter {
            let mut next = solve(&u)?;
            center(&mut next);
            let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            next.iter_mut().for_each(|v| *v /= norm);
            let r_next = quotient(&next);
            u = next;
            let done = (r_next - r).abs() <= s.tol * r_next;
            r = r_next;
            if done {
                break;
            }
        }
        best = best.max(r);
    }
    Ok(best)
}

/// Largest generalized eigenvalue of `(h^n P, Q)` on mean-zero functions, by
/// Cholesky reduction of the shifted form and a dense symmetric eigensolver.
pub fn dense_sp_oracle(nodes: &NodeSet, params: &ExponentParams) -> Result<f64> {
    if params.p != 2.0 || params.q != 2.0 {
        return Err(Error::Domain("dense eigen oracle needs p = q = 2".into()));
    }
    let form = EnergyForm::new(nodes, params);
    let n = form.len();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (a, b, v) in form.quadratic_triplets() {
        q[(a as usize, b as usize)] += v;
    }
    let shift = q.diagonal().sum() / n as f64;
    q.add_scalar_mut(shift / n as f64);
    let chol = q.cholesky().ok_or_else(|| Error::Construction("energy form is not positive definite".into()))?;
    let l = chol.l();
    let mut proj = DMatrix::<f64>::from_element(n, n, -1.0 / n as f64);
    for i in 0..n {
        proj[(i, i)] += 1.0;
    }
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Construction("singular Cholesky factor".into()))?;
    let mut m = &linv * proj * linv.transpose();
    m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    Ok(nodes.cell_area() * eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_interior;

    fn grid(cells: usize) -> (Domain, Arc<NodeSet>) {
        let d = Domain::unit_square();
        let nodes = Arc::new(sample_interior(&d, 1.0 / cells as f64).unwrap());
        (d, nodes)
    }

    fn p2() -> ExponentParams {
        ExponentParams::new(2, 2.0, 2.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn adjacent_target_on_tiny_grid() {
        let (d, nodes) = grid(8);
        let base = nodes.locate(Point::new(0.4, 0.4)).unwrap();
        let prob = CapacityProblem::new(
            Arc::clone(&nodes),
            p2(),
            nodes.point(base),
            0.01,
            vec![nodes.locate(Point::new(0.65, 0.4)).unwrap()],
            SolverSettings::with_seed(1),
        )
        .unwrap();
        assert_eq!(prob.base, vec![base]);
        let lin = linear_capacity(&prob).unwrap();
        let dense = dense_capacity_oracle(&prob).unwrap();
        assert!((lin.value / dense - 1.0).abs() < 1e-10, "{} vs {dense}", lin.value);
        let _ = d;
    }

    #[test]
    fn monotone_in_target_and_base() {
        let (d, nodes) = grid(16);
        let s = SolverSettings::with_seed(3);
        let a1 = vec![nodes.locate(Point::new(0.8, 0.8)).unwrap()];
        let mut a2 = a1.clone();
        a2.push(nodes.locate(Point::new(0.85, 0.8)).unwrap());
        let mut a3 = a2.clone();
        a3.push(nodes.locate(Point::new(0.2, 0.8)).unwrap());
        let caps: Vec<f64> = [a1.clone(), a2, a3]
            .into_iter()
            .map(|a| relative_capacity(&CapacityProblem::with_default_base(&d, Arc::clone(&nodes), p2(), a, s).unwrap()).unwrap().value)
            .collect();
        assert!(caps[0] <= caps[1] && caps[1] <= caps[2], "{caps:?}");
        let x0 = d.x0();
        let b: Vec<f64> = [0.05, 0.1, 0.2]
            .iter()
            .map(|&r| relative_capacity(&CapacityProblem::new(Arc::clone(&nodes), p2(), x0, r, a1.clone(), s).unwrap()).unwrap().value)
            .collect();
        assert!(b[0] <= b[1] && b[1] <= b[2], "{b:?}");
    }

    #[test]
    fn minimizer_beats_manual_competitor() {
        let (d, nodes) = grid(16);
        let a = vec![nodes.locate(Point::new(0.9, 0.5)).unwrap()];
        let prob = CapacityProblem::with_default_base(&d, Arc::clone(&nodes), p2(), a.clone(), SolverSettings::with_seed(0)).unwrap();
        let cap = relative_capacity(&prob).unwrap();
        let x0 = d.x0();
        let r0 = prob.base_radius;
        let guess = GridFunction::from_fn(Arc::clone(&nodes), |p| ((p.dist(x0) - r0) / (0.4 - r0)).clamp(0.0, 1.0));
        let mut v = guess.values.clone();
        for &k in &a {
            v[k] = 1.0;
        }
        for &k in &prob.base {
            v[k] = 0.0;
        }
        let form = EnergyForm::new(&nodes, &prob.params);
        assert!(cap.value <= form.energy(&v));
        assert!(cap.minimizer.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn projected_gradient_agrees_with_linear_solve() {
        let (d, nodes) = grid(12);
        let a = vec![nodes.locate(Point::new(0.9, 0.9)).unwrap(), nodes.locate(Point::new(0.1, 0.9)).unwrap()];
        let mut s = SolverSettings::with_seed(5);
        s.tol = 1e-12;
        let prob = CapacityProblem::with_default_base(&d, nodes, p2(), a, s).unwrap();
        let pg = projected_gradient_capacity(&prob).unwrap();
        let dense = dense_capacity_oracle(&prob).unwrap();
        assert!((pg.value / dense - 1.0).abs() < 1e-6, "{} vs {dense}", pg.value);
        assert_eq!(pg.clamp_violations, 0);
    }

    #[test]
    fn p_three_capacity_is_monotone() {
        let (d, nodes) = grid(12);
        let params = ExponentParams::new(2, 3.0, 3.0, 0.5, 0.5).unwrap();
        let a1 = vec![nodes.locate(Point::new(0.9, 0.9)).unwrap()];
        let mut a2 = a1.clone();
        a2.push(nodes.locate(Point::new(0.1, 0.1)).unwrap());
        let s = SolverSettings::with_seed(2);
        let c1 = relative_capacity(&CapacityProblem::with_default_base(&d, Arc::clone(&nodes), params, a1, s).unwrap()).unwrap();
        let c2 = relative_capacity(&CapacityProblem::with_default_base(&d, nodes, params, a2, s).unwrap()).unwrap();
        assert_eq!(c1.method, "projected-gradient");
        assert!(c1.value <= c2.value * (1.0 + 1e-6), "{} {}", c1.value, c2.value);
    }

    #[test]
    fn rayleigh_matches_dense_eigen() {
        let (_, nodes) = grid(16);
        let est = sp_constant_estimate(&nodes, &p2(), &[], Some(RayleighSettings::with_seed(11))).unwrap();
        let dense = dense_sp_oracle(&nodes, &p2()).unwrap();
        let r = est.rayleigh.unwrap();
        assert!((r / dense - 1.0).abs() < 1e-4, "{r} vs {dense}");
    }

    #[test]
    fn single_candidate_quotient() {
        let (_, nodes) = grid(16);
        let u = GridFunction::from_fn(Arc::clone(&nodes), |p| p.x);
        let est = sp_constant_estimate(&nodes, &p2(), &[u.clone()], None).unwrap();
        let direct = lq_deviation(&u, 2.0).unwrap() / fractional_energy(&u, &p2()).total;
        assert_eq!(est.value, direct);
        let c = GridFunction::from_fn(Arc::clone(&nodes), |_| 1.0);
        assert!(sp_constant_estimate(&nodes, &p2(), &[c], None).is_err());
    }
}
