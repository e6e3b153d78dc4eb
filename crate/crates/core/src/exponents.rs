//! Exponent parameters and the closed-form critical exponents.
//!
//! The inequality under study bounds `∫|u - u_Ω|^q` by the `q/p` power of the
//! localized fractional energy `∫ g_u`, where
//! `g_u(x) = ∫_{Ω ∩ B(x, τ d(x))} |u(x) - u(y)|^p / |x - y|^(n + pδ) dy`.
//! Everything here is plain `f64` arithmetic on those exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The tuple `(n, p, q, δ, τ)` governing the inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    pub tau: f64,
}

impl ExponentParams {
    pub fn new(n: usize, p: f64, q: f64, delta: f64, tau: f64) -> Result<Self> {
        let params = Self { n, p, q, delta, tau };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Domain(format!("n >= 2 required, got n = {}", self.n)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::Domain(format!("p >= 1 required, got p = {}", self.p)));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(Error::Domain(format!("1 <= q < inf required, got q = {}", self.q)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Domain(format!(
                "0 < delta < 1 required, got delta = {}",
                self.delta
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Domain(format!("tau > 0 required, got tau = {}", self.tau)));
        }
        Ok(())
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// `n - pδ`, the scaling exponent of the energy under dilations.
    pub fn energy_scaling(&self) -> f64 {
        self.dim() - self.p * self.delta
    }

    /// Fractional Sobolev conjugate `np / (n - pδ)`.
    pub fn sobolev_conjugate(&self) -> Result<f64> {
        self.require_subcritical()?;
        Ok(self.dim() * self.p / self.energy_scaling())
    }

    fn require_subcritical(&self) -> Result<()> {
        if !(self.p < self.dim() / self.delta) {
            return Err(Error::Domain(format!(
                "p < n/delta required, got p = {}, n/delta = {}",
                self.p,
                self.dim() / self.delta
            )));
        }
        Ok(())
    }
}

/// Geometric exponents of the domain families: s-John exponent, QHBC exponent
/// and the mushroom stem exponents (radius `r^sigma`, height `r^h`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryExponents {
    pub s: f64,
    pub beta: f64,
    pub sigma: f64,
    pub h: f64,
}

impl GeometryExponents {
    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 1.0) {
            return Err(Error::Domain(format!("s >= 1 required, got s = {}", self.s)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Domain(format!(
                "0 < beta <= 1 required, got beta = {}",
                self.beta
            )));
        }
        if !(self.sigma >= 1.0) {
            return Err(Error::Domain(format!("sigma >= 1 required, got sigma = {}", self.sigma)));
        }
        if !(self.h >= 1.0) {
            return Err(Error::Domain(format!("h >= 1 required, got h = {}", self.h)));
        }
        Ok(())
    }
}

/// Critical value together with the admissible half-open range `[p, critical)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QRange {
    pub lower: f64,
    pub critical: f64,
    pub empty: bool,
}

/// Open interval `(lower, upper)` with an emptiness flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenInterval {
    pub lower: f64,
    pub upper: f64,
    pub empty: bool,
}

/// Largest `q` (exclusive) for which s-John domains support the inequality:
/// `np / (s(n - pδ) + (s - 1)(p - 1))`.
pub fn critical_q_sjohn(params: &ExponentParams, s: f64) -> Result<f64> {
    params.require_subcritical()?;
    let n = params.dim();
    let scaling = params.energy_scaling();
    let s_max = n / scaling;
    if !(s >= 1.0 && s < s_max) {
        return Err(Error::Domain(format!(
            "1 <= s < n/(n - p*delta) required, got s = {s}, bound = {s_max}"
        )));
    }
    Ok(n * params.p / (s * scaling + (s - 1.0) * (params.p - 1.0)))
}

/// Critical `q` for the β-quasihyperbolic boundary condition:
/// `(2β/(1+β)) · np/(n - pδ)`. The range `[p, critical)` is flagged empty when
/// `critical <= p`.
pub fn critical_q_qhbc(params: &ExponentParams, beta: f64) -> Result<QRange> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("0 < beta <= 1 required, got beta = {beta}")));
    }
    let conjugate = params.sobolev_conjugate()?;
    let critical = qhbc_factor(beta) * conjugate;
    Ok(QRange { lower: params.p, critical, empty: critical <= params.p })
}

/// Admissible `p` interval `((n - n·2β/(1+β))/δ, n)` for the QHBC inequality.
pub fn admissible_p_range_qhbc(n: usize, delta: f64, beta: f64) -> Result<OpenInterval> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("0 < beta <= 1 required, got beta = {beta}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("0 < delta < 1 required, got delta = {delta}")));
    }
    let n = n as f64;
    let lower = (n - n * qhbc_factor(beta)) / delta;
    Ok(OpenInterval { lower, upper: n, empty: lower >= n })
}

/// `2β/(1+β)`, the shadow-size exponent of β-QHBC domains.
pub fn qhbc_factor(beta: f64) -> f64 {
    2.0 * beta / (1.0 + beta)
}

/// Predicted log-log slope of the raw energy `∫ g_u` of the mushroom test
/// function against mushroom size `r`: `σ(n - pδ) + (p - 1)(σ - h)`.
pub fn mushroom_energy_exponent(params: &ExponentParams, sigma: f64, h: f64) -> f64 {
    sigma * params.energy_scaling() + (params.p - 1.0) * (sigma - h)
}

/// QHBC exponent of a mushroom family with `σ = (1+β)/(2β)`, i.e. `β = 1/(2σ - 1)`.
pub fn mushroom_qhbc_beta(sigma: f64) -> f64 {
    1.0 / (2.0 * sigma - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} != {b}");
    }

    fn params(p: f64, q: f64) -> ExponentParams {
        ExponentParams::new(2, p, q, 0.5, 0.5).unwrap()
    }

    #[test]
    fn sjohn_examples() {
        assert_close(critical_q_sjohn(&params(2.0, 2.0), 1.0).unwrap(), 4.0);
        assert_close(critical_q_sjohn(&params(1.0, 1.0), 1.0).unwrap(), 4.0 / 3.0);
        assert_close(critical_q_sjohn(&params(2.0, 2.0), 1.5).unwrap(), 2.0);
    }

    #[test]
    fn sjohn_rejects_large_s() {
        let err = critical_q_sjohn(&params(2.0, 2.0), 2.0).unwrap_err();
        assert!(err.to_string().contains("s <"), "{err}");
        let supercritical = ExponentParams { n: 2, p: 5.0, q: 5.0, delta: 0.5, tau: 0.5 };
        let err = critical_q_sjohn(&supercritical, 1.0).unwrap_err();
        assert!(err.to_string().contains("p < n/delta"), "{err}");
    }

    #[test]
    fn qhbc_examples() {
        let r = critical_q_qhbc(&params(2.0, 2.0), 1.0).unwrap();
        assert_close(r.critical, 4.0);
        assert!(!r.empty);
        let r = critical_q_qhbc(&params(2.0, 2.0), 1.0 / 3.0).unwrap();
        assert_close(r.critical, 2.0);
        let r = critical_q_qhbc(&params(1.0, 1.0), 0.6).unwrap();
        assert_close(r.critical, 1.0);
        assert!(r.empty);
        assert!(critical_q_qhbc(&params(2.0, 2.0), 1.5).is_err());
        assert!(critical_q_qhbc(&params(2.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn p_range_examples() {
        let r = admissible_p_range_qhbc(2, 0.5, 1.0).unwrap();
        assert_close(r.lower, 0.0);
        assert_close(r.upper, 2.0);
        assert!(!r.empty);
        let r = admissible_p_range_qhbc(2, 0.5, 0.6).unwrap();
        assert_close(r.lower, 1.0);
        assert!(!r.empty);
        let r = admissible_p_range_qhbc(2, 0.5, 1.0 / 3.0).unwrap();
        assert_close(r.lower, 2.0);
        assert!(r.empty);
    }

    #[test]
    fn energy_exponent_examples() {
        assert_close(mushroom_energy_exponent(&params(2.0, 2.0), 1.5, 1.0), 2.0);
        assert_close(mushroom_energy_exponent(&params(2.0, 2.0), 2.0, 2.0), 2.0);
        let p = params(1.5, 2.0);
        assert_close(mushroom_energy_exponent(&p, 3.0, 3.0), 3.0 * p.energy_scaling());
    }

    #[test]
    fn beta_of_sigma() {
        assert_close(mushroom_qhbc_beta(2.0), 1.0 / 3.0);
        assert_close(mushroom_qhbc_beta(1.0), 1.0);
    }

    #[test]
    fn params_validation_names_constraint() {
        assert!(ExponentParams::new(2, 2.0, 0.5, 0.5, 0.5).unwrap_err().to_string().contains("1 <= q"));
        assert!(ExponentParams::new(2, 2.0, 1.5, 0.5, 0.5).is_ok());
        assert!(ExponentParams::new(2, 2.0, 2.0, 1.0, 0.5).unwrap_err().to_string().contains("delta"));
        assert!(ExponentParams::new(2, 2.0, 2.0, 0.5, 0.0).unwrap_err().to_string().contains("tau"));
        assert!(ExponentParams::new(1, 2.0, 2.0, 0.5, 0.5).is_err());
    }
}
