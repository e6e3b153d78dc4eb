//! Ordinary least squares on paired samples.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals.
    pub rms: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Invalid(format!("{} abscissae for {} ordinates", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points, at least 2 required", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(LineFit { slope, intercept, rms: (ss / n).sqrt() })
}

/// Least squares of `ln y` against `ln x`; all entries must be positive.
pub fn log_log(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Invalid(format!("log-log fit needs positive finite entries, got {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    least_squares(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let r: Vec<f64> = (2..7).map(|k| (-(k as f64)).exp2()).collect();
        let y: Vec<f64> = r.iter().map(|r| r.powi(3)).collect();
        let f = log_log(&r, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn two_points() {
        let f = log_log(&[1.0, 2.0], &[3.0, 12.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(log_log(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
