//! Log-log regression of the smoothing exponents.

use serde::{Deserialize, Serialize};

use super::RunLedger;
use crate::error::{Error, Result};

/// Least-squares line `log y = intercept + slope · log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch { expected: x.len(), actual: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientCoverage(format!("power-law fit needs 2 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientCoverage("power-law fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(PowerFit { slope, intercept, residual: (ss / n).sqrt(), points: lx.len() })
}

/// `N / ((m-1)N + 2p(1-s))`.
pub fn gamma_theory(dim: usize, m: f64, s: f64, p: f64) -> f64 {
    let n = dim as f64;
    n / ((m - 1.0) * n + 2.0 * p * (1.0 - s))
}

/// `2p(1-s) / ((m-1)N + 2p(1-s))`.
pub fn delta_theory(dim: usize, m: f64, s: f64, p: f64) -> f64 {
    let n = dim as f64;
    2.0 * p * (1.0 - s) / ((m - 1.0) * n + 2.0 * p * (1.0 - s))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingFit {
    pub gamma_hat: f64,
    pub delta_hat: Option<f64>,
    pub gamma_theory: f64,
    pub delta_theory: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub points: usize,
}

impl SmoothingFit {
    pub fn gamma_relative_error(&self) -> f64 {
        ((self.gamma_hat - self.gamma_theory) / self.gamma_theory).abs()
    }
}

/// Fits `‖u(t)‖∞ ~ t^{-γ}` over rows inside `window` once `‖u‖∞` has fallen
/// to a third of its initial value.
pub fn smoothing_fit(ledger: &RunLedger, dim: usize, s: f64, p: f64, window: (f64, f64)) -> Result<SmoothingFit> {
    let first = ledger
        .rows
        .first()
        .ok_or_else(|| Error::InsufficientCoverage("ledger has no rows".into()))?;
    let cap = first.linf / 3.0;
    let rows: Vec<_> = ledger
        .rows
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1 && r.t > 0.0 && r.linf <= cap)
        .collect();
    if rows.len() < 8 {
        return Err(Error::InsufficientCoverage(format!("{} rows in the self-similar window, need 8", rows.len())));
    }
    let (t0, t1) = (rows[0].t, rows[rows.len() - 1].t);
    if t1 / t0 < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InsufficientCoverage(format!("fit window [{t0}, {t1}] spans less than a decade")));
    }
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.linf).collect();
    let fit = fit_power_law(&t, &y)?;
    let m = ledger.nonlinearity.m;
    Ok(SmoothingFit {
        gamma_hat: -fit.slope,
        delta_hat: None,
        gamma_theory: gamma_theory(dim, m, s, p),
        delta_theory: delta_theory(dim, m, s, p),
        window: (t0, t1),
        residual: fit.residual,
        points: fit.points,
    })
}

/// Slope of `log ‖u(t)‖∞` against `log ‖u₀‖_p` across runs at a fixed time.
pub fn fit_mass_exponent(initial_norms: &[f64], linf: &[f64]) -> Result<PowerFit> {
    if initial_norms.len() < 3 {
        return Err(Error::InsufficientCoverage(format!(
            "mass exponent needs 3 runs, got {}",
            initial_norms.len()
        )));
    }
    fit_power_law(initial_norms, linf)
}
