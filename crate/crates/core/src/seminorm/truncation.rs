use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::GridFunction;
use crate::error::{Error, Result};

/// `v_j = min(2^j, max(0, v - 2^j))`.
pub fn truncate(v: &GridFunction, j: i32) -> GridFunction {
    let t = (j as f64).exp2();
    v.map(|x| (x - t).max(0.0).min(t))
}

/// Level of a positive value: the `k` with `2^k <= v < 2^{k+1}`.
fn level(v: f64) -> i32 {
    if v >= f64::MIN_POSITIVE {
        ((v.to_bits() >> 52) & 0x7ff) as i32 - 1023
    } else {
        v.log2().floor() as i32
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TruncationReport {
    pub trials: usize,
    /// `|v_k(y) - v_k(z)| > |v(y) - v(z)|`.
    pub contraction: usize,
    /// `y ∈ A_i`, `z ∈ A_j`, `j - 1 > i` but `|v(y) - v(z)| < 2^{j-2}`.
    pub separation: usize,
    /// `|v_k(y) - v_k(z)| > 4 · 2^{k+1-j} |v(y) - v(z)|` for some `i <= k <= j`.
    pub level_bound: usize,
    /// Nodes whose membership in `A_k = {v_{k-1} >= 2^{k-1}} \ {v_k >= 2^k}` disagrees with the level of `v`.
    pub partition: usize,
}

impl TruncationReport {
    pub fn violations(&self) -> usize {
        self.contraction + self.separation + self.level_bound + self.partition
    }
}

/// Randomized check of the truncation inequalities on `trials` node pairs of a
/// nonnegative function, together with an exhaustive check of the level-set partition.
pub fn truncation_bounds_check(v: &GridFunction, trials: usize, seed: u64) -> Result<TruncationReport> {
    if let Some(k) = v.values.iter().position(|x| *x < 0.0) {
        return Err(Error::Invalid(format!("truncation needs v >= 0; node {k} is negative")));
    }
    let positive: Vec<usize> = (0..v.len()).filter(|&k| v.values[k] > 0.0).collect();
    if positive.len() < 2 {
        return Err(Error::InsufficientData("fewer than two nodes with v > 0".into()));
    }
    let lo = positive.iter().map(|&k| level(v.values[k])).min().unwrap();
    let hi = positive.iter().map(|&k| level(v.values[k])).max().unwrap();
    let cut = |x: f64, j: i32| {
        let t = (j as f64).exp2();
        (x - t).max(0.0).min(t)
    };

    let mut rep = TruncationReport { trials, ..Default::default() };
    for &k in &positive {
        let x = v.values[k];
        for l in (lo - 1)..=(hi + 1) {
            let in_a = cut(x, l - 1) >= (l as f64 - 1.0).exp2() && cut(x, l) < (l as f64).exp2();
            if in_a != (level(x) == l) {
                rep.partition += 1;
            }
        }
    }

    // Pairs are drawn level by level: pick occupied levels i <= j, then y ∈ A_i, z ∈ A_j.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); (hi - lo + 1) as usize];
    for &k in &positive {
        buckets[(level(v.values[k]) - lo) as usize].push(k);
    }
    let occupied: Vec<usize> = (0..buckets.len()).filter(|&b| !buckets[b].is_empty()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut li = occupied[rng.gen_range(0..occupied.len())];
        let mut lj = occupied[rng.gen_range(0..occupied.len())];
        if li > lj {
            std::mem::swap(&mut li, &mut lj);
        }
        let y = v.values[buckets[li][rng.gen_range(0..buckets[li].len())]];
        let z = v.values[buckets[lj][rng.gen_range(0..buckets[lj].len())]];
        let (i, j) = (level(y), level(z));
        let diff = (z - y).abs();
        let k_any = rng.gen_range(lo - 1..=hi + 1);
        if (cut(y, k_any) - cut(z, k_any)).abs() > diff {
            rep.contraction += 1;
        }
        if j - 1 > i && diff < (j as f64 - 2.0).exp2() {
            rep.separation += 1;
        }
        for k in i..=j {
            let bound = 4.0 * (k as f64 + 1.0 - j as f64).exp2() * diff;
            if (cut(y, k) - cut(z, k)).abs() > bound * (1.0 + 1e-12) {
                rep.level_bound += 1;
                break;
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_interior, Domain};
    use std::sync::Arc;

    #[test]
    fn truncation_values() {
        let nodes = Arc::new(sample_interior(&Domain::unit_square(), 0.25).unwrap());
        let v = GridFunction::from_fn(nodes, |p| 8.0 * p.x);
        let t = truncate(&v, 1);
        for (x, y) in v.values.iter().zip(&t.values) {
            assert_eq!(*y, (x - 2.0).clamp(0.0, 2.0));
        }
    }

    #[test]
    fn multiscale_function_has_no_violations() {
        let nodes = Arc::new(sample_interior(&Domain::unit_square(), 1.0 / 64.0).unwrap());
        let v = GridFunction::from_fn(nodes, |p| (12.0 * p.x - 4.0).exp2() * (1.0 + p.y));
        let rep = truncation_bounds_check(&v, 20_000, 7).unwrap();
        assert_eq!(rep.violations(), 0, "{rep:?}");
    }
}
