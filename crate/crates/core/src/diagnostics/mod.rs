//! Pointwise diagnostics, the run ledger, energy checks and exponent fits.

mod ledger;
mod smoothing;

pub use ledger::{
    first_energy_report, linf_report, lp_energy_report, mass_report, second_energy_report, CheckResult, LedgerBuilder,
    LedgerRow, LedgerSettings, RunLedger,
};
pub use smoothing::{delta_theory, fit_mass_exponent, fit_power_law, gamma_theory, smoothing_fit, PowerFit, SmoothingFit};

use crate::error::{Error, Result};
use crate::fracops::{FracOperator, FracOperatorSpec, SymbolMode, SymbolTable};
use crate::grid::Field;

/// `Σ u dx^N`.
pub fn mass(field: &Field) -> f64 {
    field.values().iter().sum::<f64>() * field.grid().cell_volume()
}

/// `(Σ |u|^p dx^N)^{1/p}`, or `max |u|` for `p = ∞`.
pub fn lp_norm(field: &Field, p: f64) -> f64 {
    if p.is_infinite() {
        return field.values().iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    lp_integral(field, p).powf(1.0 / p)
}

/// `Σ |u|^p dx^N`.
pub fn lp_integral(field: &Field, p: f64) -> f64 {
    let vals = field.values();
    let s: f64 = if p == 1.0 {
        vals.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        vals.iter().map(|v| v * v).sum()
    } else {
        vals.iter().map(|v| v.abs().powf(p)).sum()
    };
    s * field.grid().cell_volume()
}

/// Largest `|x_i|` over cells with `u_i > threshold`; 0 if there are none.
pub fn support_radius(field: &Field, threshold: f64) -> f64 {
    let g = field.grid();
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold)
        .map(|(i, _)| g.radius(i))
        .fold(0.0, f64::max)
}

/// Smallest `u_i` over cells with `|x_i| >= r0`; `+∞` if there are none.
pub fn tail_min(field: &Field, r0: f64) -> f64 {
    let g = field.grid();
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| g.radius(*i) >= r0)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min)
}

/// Both sides of `∫ u^{q-1} L u ≥ (4(q-1)/q²) ‖L^{1/2} u^{q/2}‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl SvOutcome {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.slack >= -rel_tol * self.lhs.abs()
    }
}

/// Stroock–Varopoulos check for `L^s_ε`, or for `(-Δ)^s` when `epsilon = 0`.
pub fn stroock_varopoulos_check(field: &Field, q: f64, s: f64, epsilon: f64) -> Result<SvOutcome> {
    let grid = field.grid();
    let spec = if epsilon == 0.0 {
        FracOperatorSpec::exact(grid.dim(), s)?
    } else {
        FracOperatorSpec::new(grid.dim(), s, epsilon, SymbolMode::RegularizedSymbol)?
    };
    let op = FracOperator::new(grid, spec)?;
    stroock_varopoulos_with(field, q, op.symbol())
}

/// As [`stroock_varopoulos_check`] with a precomputed symbol.
pub fn stroock_varopoulos_with(field: &Field, q: f64, symbol: &SymbolTable) -> Result<SvOutcome> {
    if !(q > 1.0) {
        return Err(Error::InvalidArgument(format!("q must be > 1, got {q}")));
    }
    if field.min() < 0.0 {
        return Err(Error::InvalidArgument("Stroock–Varopoulos check needs a nonnegative field".into()));
    }
    let lu = symbol.apply(field)?;
    let psi = field.with_values(field.values().iter().map(|v| v.powf(q - 1.0)).collect())?;
    let lhs = psi.inner(&lu);
    let big = field.with_values(field.values().iter().map(|v| v.powf(q / 2.0)).collect())?;
    let rhs = 4.0 * (q - 1.0) / (q * q) * symbol.quadratic_form(&big)?;
    Ok(SvOutcome { lhs, rhs, slack: lhs - rhs })
}
