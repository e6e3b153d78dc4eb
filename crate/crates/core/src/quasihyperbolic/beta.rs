use serde::Serialize;

use super::graph::QhGraph;
use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::geometry::Domain;

/// Fitted boundary-condition exponent and additive constant.
#[derive(Clone, Debug, Serialize)]
pub struct QhbcEstimate {
    pub beta_hat: f64,
    pub slope: f64,
    pub c0_hat: f64,
    pub samples: usize,
    pub bins: usize,
}

const BINS: usize = 24;
const MIN_LOG_RATIO: f64 = 1.0;

/// Fit `k(x, x0) <= (1/β) log(d(x0)/d(x)) + C0` over lattice samples.
///
/// The scatter `(L, k)` with `L = log(d0/d)` is restricted to `L >= 1`, binned
/// into equal-width bins, and the slope is the least-squares line through the
/// per-bin maxima of `k`. `C0` is then the smallest intercept making the bound
/// hold at every sample, including those with `L < 1`.
pub fn estimate_qhbc_beta(domain: &Domain, h_grid: f64, sample_count: usize) -> Result<QhbcEstimate> {
    fit_envelope(&qhbc_samples(domain, h_grid, sample_count)?)
}

/// Evenly strided `(log(d0/d(x)), k(x, x0))` pairs over the settled lattice nodes.
pub fn qhbc_samples(domain: &Domain, h_grid: f64, sample_count: usize) -> Result<Vec<(f64, f64)>> {
    let graph = QhGraph::new(domain, h_grid)?;
    let x0 = domain.x0();
    let d0 = domain.dist_to_boundary(x0);
    let tree = graph.tree(x0)?;
    let settled: Vec<_> = tree.settled().into_iter().filter(|(p, _, _)| *p != x0).collect();
    let stride = (settled.len() / sample_count.max(1)).max(1);
    Ok(settled.iter().step_by(stride).take(sample_count).map(|&(_, d, k)| ((d0 / d).ln(), k)).collect())
}

/// Envelope fit on an explicit `(L, k)` scatter.
pub fn fit_envelope(samples: &[(f64, f64)]) -> Result<QhbcEstimate> {
    let usable: Vec<(f64, f64)> = samples.iter().copied().filter(|(l, _)| *l >= MIN_LOG_RATIO).collect();
    if usable.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} samples with log(d0/d) >= {MIN_LOG_RATIO}, at least 10 required",
            usable.len()
        )));
    }
    let l_max = usable.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (l_max - MIN_LOG_RATIO) / BINS as f64;
    let mut maxima = vec![(f64::NAN, f64::NEG_INFINITY); BINS];
    for &(l, k) in &usable {
        let b = if width > 0.0 { (((l - MIN_LOG_RATIO) / width) as usize).min(BINS - 1) } else { 0 };
        if k > maxima[b].1 {
            maxima[b] = (l, k);
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = maxima.into_iter().filter(|m| m.1.is_finite()).unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "samples span only {} bins of log(d0/d)",
            xs.len()
        )));
    }
    let line = least_squares(&xs, &ys)?;
    let slope = line.slope;
    let c0_hat = samples.iter().map(|&(l, k)| k - slope * l).fold(f64::NEG_INFINITY, f64::max);
    Ok(QhbcEstimate { beta_hat: 1.0 / slope, slope, c0_hat, samples: usable.len(), bins: xs.len() })
}
