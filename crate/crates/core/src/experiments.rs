//! Sharpness sweeps over mushroom families, log-log exponent fits, verdicts
//! on whether an inequality can hold, and the pointwise potential estimate.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{mushroom_energy_exponent, ExponentParams};
use crate::fit::{log_log, LineFit};
use crate::geometry::{sample_window, BBox, Domain, MushroomSpec, NodeSet, Point};
use crate::seminorm::{fractional_energy, mushroom_test_function, riesz_potential, GridFunction};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    /// Grid spacing as a multiple of `r^σ`; at most `1/8`.
    #[serde(default = "SweepOptions::default_spacing")]
    pub spacing: f64,
}

impl SweepOptions {
    fn default_spacing() -> f64 {
        0.125
    }
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { spacing: Self::default_spacing() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub h_grid: f64,
    pub nodes: usize,
    /// `∫_Ω |u - u_Ω|^q`.
    pub lhs: f64,
    /// `∫_Ω g_u`.
    pub energy: f64,
    /// `energy^{q/p}`.
    pub rhs: f64,
    /// `u_Ω`.
    pub mean: f64,
    pub correction_share: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub params: ExponentParams,
    pub sigma: f64,
    pub h: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "r,h_grid,nodes,lhs,energy,rhs,mean")?;
        for row in &self.rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                row.r, row.h_grid, row.nodes, row.lhs, row.energy, row.rhs, row.mean
            )?;
        }
        Ok(())
    }
}

/// Nodes of mushroom `i` together with a collar of the cube below its mouth,
/// `2ρ` deep and extending `2ρ` beyond each stem wall; the lattice is aligned
/// with the stem walls and the mouth.
pub fn mushroom_window_nodes(domain: &Domain, i: usize, h_grid: f64) -> Result<NodeSet> {
    let md = domain
        .mushrooms()
        .ok_or_else(|| Error::Invalid("domain has no mushrooms".into()))?;
    let m = *md
        .mushrooms
        .get(i)
        .ok_or_else(|| Error::Invalid(format!("mushroom index {i} out of range")))?;
    let top = md.side;
    let collar = BBox::new(
        Point::new((m.axis - 3.0 * m.rho).max(0.0), (top - 2.0 * m.rho).max(0.0)),
        Point::new((m.axis + 3.0 * m.rho).min(md.side), top),
    );
    let window = m.bbox().union(&collar);
    let origin = Point::new(m.axis - m.rho, top);
    sample_window(domain, h_grid, origin, &window, |p| m.contains_closed(p) || collar.contains(p))
}

fn sweep_row(domain: &Domain, index: usize, r: f64, params: &ExponentParams, h_grid: f64) -> Result<SweepRow> {
    let nodes = Arc::new(mushroom_window_nodes(domain, index, h_grid)?);
    let u = mushroom_test_function(domain, index, Arc::clone(&nodes))?;
    let cell = nodes.cell_area();
    let measure = domain.measure();
    let mean = u.values.iter().sum::<f64>() * cell / measure;
    let q = params.q;
    let inside: f64 = u.values.iter().map(|v| (v - mean).abs().powf(q)).sum::<f64>() * cell;
    let outside = (measure - nodes.total_area()).max(0.0) * mean.abs().powf(q);
    let lhs = inside + outside;
    let e = fractional_energy(&u, params);
    Ok(SweepRow {
        r,
        h_grid,
        nodes: nodes.len(),
        lhs,
        energy: e.total,
        rhs: e.total.powf(q / params.p),
        mean,
        correction_share: e.correction_share,
    })
}

/// Test-function quantities on each mushroom of radius in `r_list`, ordered by decreasing `r`.
pub fn sharpness_sweep(
    spec: &MushroomSpec,
    params: &ExponentParams,
    r_list: &[f64],
    options: SweepOptions,
) -> Result<SweepResult> {
    params.validate()?;
    if r_list.is_empty() {
        return Err(Error::Invalid("empty radius list".into()));
    }
    let domain = Domain::mushroom(spec)?;
    let md = domain.mushrooms().expect("mushroom domain");
    let mut jobs = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let index = md
            .mushrooms
            .iter()
            .position(|m| (m.r - r).abs() <= 1e-12 * r)
            .ok_or_else(|| Error::Invalid(format!("radius {r} is not a mushroom of the domain")))?;
        if !(options.spacing > 0.0 && options.spacing <= 0.125) {
            return Err(Error::Resolution(format!(
                "r = {r}: grid spacing {} r^sigma does not resolve the stem (at most r^sigma/8)",
                options.spacing
            )));
        }
        jobs.push((index, r, options.spacing * md.mushrooms[index].rho));
    }
    jobs.sort_by(|a, b| b.1.total_cmp(&a.1));
    if jobs.windows(2).any(|w| w[0].1 == w[1].1) {
        return Err(Error::Invalid("radius list has duplicates".into()));
    }
    let rows = jobs
        .par_iter()
        .map(|&(index, r, h_grid)| {
            sweep_row(&domain, index, r, params, h_grid).map_err(|e| match e {
                Error::Resolution(msg) => Error::Resolution(format!("r = {r}: {msg}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { params: *params, sigma: spec.sigma, h: spec.h, rows })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentFit {
    pub lhs: LineFit,
    pub energy: LineFit,
}

/// Least-squares slopes of `log lhs` and `log energy` against `log r`.
pub fn fit_exponents(result: &SweepResult) -> Result<ExponentFit> {
    let r: Vec<f64> = result.rows.iter().map(|x| x.r).collect();
    let lhs: Vec<f64> = result.rows.iter().map(|x| x.lhs).collect();
    let energy: Vec<f64> = result.rows.iter().map(|x| x.energy).collect();
    Ok(ExponentFit { lhs: log_log(&r, &lhs)?, energy: log_log(&r, &energy)? })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Violated,
    NotViolated,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub q: f64,
    pub verdict: Verdict,
    /// `slope_energy/p - slope_lhs/q`; positive means the left side decays more slowly.
    pub gap: f64,
    pub margin: f64,
    pub predicted_energy_slope: f64,
    pub energy_slope: f64,
    pub lhs_slope: f64,
    pub energy_slope_consistent: bool,
    pub lhs_slope_consistent: bool,
    /// `n p / slope_energy` from the fit.
    pub fitted_critical_q: f64,
}

/// Decide whether `(∫|u - u_Ω|^q)^{1/q} <= C (∫ g_u)^{1/p}` fails as `r → 0`.
/// The test function gives `lhs^{1/q} ~ r^{a/q}` and `energy^{1/p} ~ r^{b/p}`,
/// so the inequality is violated when `b/p > a/q`. The slope tolerance is
/// `m = max(0.2, 2 rms)` on each slope.
pub fn verdict(params: &ExponentParams, sigma: f64, h: f64, fit: &ExponentFit) -> VerdictReport {
    let (p, q) = (params.p, params.q);
    let m = 0.2f64.max(2.0 * fit.lhs.rms.max(fit.energy.rms));
    let gap = fit.energy.slope / p - fit.lhs.slope / q;
    let margin = m * (1.0 / p + 1.0 / q);
    let verdict = if gap > margin {
        Verdict::Violated
    } else if gap < -margin {
        Verdict::NotViolated
    } else {
        Verdict::Inconclusive
    };
    let predicted = mushroom_energy_exponent(params, sigma, h);
    VerdictReport {
        q,
        verdict,
        gap,
        margin,
        predicted_energy_slope: predicted,
        energy_slope: fit.energy.slope,
        lhs_slope: fit.lhs.slope,
        energy_slope_consistent: (fit.energy.slope - predicted).abs() <= m,
        lhs_slope_consistent: (fit.lhs.slope - params.dim()).abs() <= m,
        fitted_critical_q: params.dim() * p / fit.energy.slope,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialCheck {
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Nodes whose denominator exceeded the floor.
    pub counted: usize,
    pub base_mean: f64,
    /// Ratio per node; zero where the denominator is below the floor.
    #[serde(skip)]
    pub ratios: GridFunction,
}

/// `|u(x) - u_{B₀}| / I_δ(g_u^{1/p})(x)` over nodes whose denominator exceeds `floor`.
pub fn pointwise_potential_check(
    u: &GridFunction,
    params: &ExponentParams,
    base_center: Point,
    base_radius: f64,
    floor: f64,
) -> Result<PotentialCheck> {
    let nodes = &u.nodes;
    let base: Vec<usize> = (0..nodes.len()).filter(|&k| nodes.point(k).dist(base_center) < base_radius).collect();
    if base.is_empty() {
        return Err(Error::Invalid("base ball contains no nodes".into()));
    }
    let base_mean = base.iter().map(|&k| u.values[k]).sum::<f64>() / base.len() as f64;
    let numer: Vec<f64> = u.values.iter().map(|v| (v - base_mean).abs()).collect();
    if numer.iter().all(|&v| v == 0.0) {
        return Ok(PotentialCheck {
            max_ratio: 0.0,
            median_ratio: 0.0,
            counted: 0,
            base_mean,
            ratios: u.map(|_| 0.0),
        });
    }
    let energy = fractional_energy(u, params);
    let g = GridFunction { nodes: Arc::clone(nodes), values: energy.g.iter().map(|g| g.powf(1.0 / params.p)).collect() };
    let pot = riesz_potential(&g, params.delta)?;
    let mut ratios = vec![0.0; u.len()];
    let mut counted: Vec<f64> = Vec::new();
    for k in 0..u.len() {
        if pot.values[k] > floor {
            ratios[k] = numer[k] / pot.values[k];
            counted.push(ratios[k]);
        }
    }
    if counted.is_empty() {
        return Err(Error::InsufficientData(format!("no node has a potential above the floor {floor}")));
    }
    counted.sort_by(f64::total_cmp);
    let median_ratio = counted[counted.len() / 2];
    Ok(PotentialCheck {
        max_ratio: counted[counted.len() - 1],
        median_ratio,
        counted: counted.len(),
        base_mean,
        ratios: GridFunction { nodes: Arc::clone(nodes), values: ratios },
    })
}
