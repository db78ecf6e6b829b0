//! Nonlocal operators as Fourier multipliers: fractional Laplacian and its
//! inverse, half powers, the nonlocal gradient, the regularized operator
//! `L^s_ε` with kernel `C_{N,s} (|z|² + ε²)^{-(N+2s)/2}`, and the heat
//! semigroup.
//!
//! Every negative power sends the zero mode to 0.

mod battery;
mod regularized;

pub use battery::{run_check_ops, BatteryReport, OpCheck};
pub use regularized::{kernel_l1_norm, regularized_symbol, regularized_symbol_value, KernelTable};

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{transform, Field, Grid, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolMode {
    ExactSymbol,
    RegularizedSymbol,
    RegularizedKernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracOperatorSpec {
    pub s: f64,
    pub epsilon: f64,
    pub c_norm: f64,
    pub mode: SymbolMode,
}

/// `C_{N,s} = 4^s Γ(N/2 + s) / (π^{N/2} |Γ(-s)|)`.
pub fn normalization_constant(dim: usize, s: f64) -> f64 {
    let half_n = dim as f64 / 2.0;
    // |Γ(-s)| = Γ(1-s)/s on (0,1)
    let abs_gamma_neg = gamma(1.0 - s) / s;
    4f64.powf(s) * gamma(half_n + s) / (std::f64::consts::PI.powf(half_n) * abs_gamma_neg)
}

impl FracOperatorSpec {
    pub fn exact(dim: usize, s: f64) -> Result<Self> {
        FracOperatorSpec::new(dim, s, 0.0, SymbolMode::ExactSymbol)
    }

    pub fn new(dim: usize, s: f64, epsilon: f64, mode: SymbolMode) -> Result<Self> {
        let spec = FracOperatorSpec { s, epsilon, c_norm: normalization_constant(dim, s), mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidOperator(format!("s must lie in (0,1), got {}", self.s)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidOperator(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.c_norm > 0.0) {
            return Err(Error::InvalidOperator("normalization constant must be positive".into()));
        }
        match self.mode {
            SymbolMode::ExactSymbol if self.epsilon != 0.0 => Err(Error::InvalidOperator(
                "exact_symbol mode requires epsilon = 0".into(),
            )),
            SymbolMode::RegularizedSymbol | SymbolMode::RegularizedKernel if self.epsilon == 0.0 => {
                Err(Error::InvalidOperator("regularized modes require epsilon > 0".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Real even multiplier sampled at every grid frequency.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl SymbolTable {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(SymbolTable { grid, values })
    }

    /// `|ξ|^exponent`; the zero mode is 0 unless `exponent == 0`.
    pub fn power(grid: &Arc<Grid>, exponent: f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                if exponent == 0.0 {
                    1.0
                } else if k == 0 {
                    0.0
                } else {
                    grid.xi_norm(k).powf(exponent)
                }
            })
            .collect();
        SymbolTable { grid: grid.clone(), values }
    }

    /// `exp(-δ t |ξ|²)`.
    pub fn heat(grid: &Arc<Grid>, delta: f64, t: f64) -> Self {
        let values = (0..grid.len()).map(|k| (-delta * t * grid.xi_norm(k).powi(2)).exp()).collect();
        SymbolTable { grid: grid.clone(), values }
    }

    /// Regularized symbol of order `s` computed by quadrature.
    pub fn regularized(grid: &Arc<Grid>, s: f64, epsilon: f64) -> Result<Self> {
        regularized::symbol_table(grid, s, epsilon)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sqrt(&self) -> Self {
        let values = self.values.iter().map(|v| v.max(0.0).sqrt()).collect();
        SymbolTable { grid: self.grid.clone(), values }
    }

    /// Pointwise product.
    pub fn product(&self, other: &SymbolTable) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        SymbolTable { grid: self.grid.clone(), values }
    }

    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let values = self.values.iter().enumerate().map(|(k, &v)| f(k, v)).collect();
        SymbolTable { grid: self.grid.clone(), values }
    }

    pub fn apply(&self, field: &Field) -> Result<Field> {
        self.check(field)?;
        Ok(self.apply_spectrum(&transform(field)).to_field())
    }

    pub fn apply_spectrum(&self, spectrum: &Spectrum) -> Spectrum {
        spectrum.scaled(&self.values)
    }

    /// `⟨u, A u⟩` through Parseval.
    pub fn quadratic_form(&self, field: &Field) -> Result<f64> {
        self.check(field)?;
        Ok(transform(field).weighted_energy(&self.values))
    }

    fn check(&self, field: &Field) -> Result<()> {
        if field.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::SizeMismatch { expected: self.grid.len(), actual: field.values().len() });
        }
        Ok(())
    }
}

/// `i ξ_axis · radial(ξ)` with the Nyquist plane of `axis` and the zero mode
/// removed.
pub fn gradient_multiplier(grid: &Grid, axis: usize, radial: &[f64]) -> Vec<Complex64> {
    (0..grid.len())
        .map(|k| {
            if k == 0 || grid.is_nyquist(k, axis) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.wavevector(k)[axis] * radial[k])
            }
        })
        .collect()
}

fn check_order(s: f64, allow_one: bool) -> Result<()> {
    let ok = s > 0.0 && (s < 1.0 || (allow_one && s == 1.0));
    if !ok {
        return Err(Error::InvalidOperator(format!("order s = {s} outside the admissible range")));
    }
    Ok(())
}

fn check_axis(grid: &Grid, axis: usize) -> Result<()> {
    if axis >= grid.dim() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for dim {}", grid.dim())));
    }
    Ok(())
}

/// `(-Δ)^s u`; `s = 1` gives the spectral Laplacian with reversed sign.
pub fn apply_frac_laplacian(field: &Field, s: f64) -> Result<Field> {
    check_order(s, true)?;
    SymbolTable::power(field.grid(), 2.0 * s).apply(field)
}

/// `(-Δ)^{-s} u` with the zero mode removed. Undefined in 1D for `s >= 1/2`.
pub fn apply_inverse_frac_laplacian(field: &Field, s: f64) -> Result<Field> {
    check_order(s, false)?;
    if field.grid().dim() == 1 && s >= 0.5 {
        return Err(Error::InvalidOperator(format!(
            "(-Δ)^(-s) is not defined in one dimension for s = {s} >= 1/2; use the nonlocal gradient"
        )));
    }
    SymbolTable::power(field.grid(), -2.0 * s).apply(field)
}

/// `∂_axis (-Δ)^{-s} u`, symbol `i ξ_axis |ξ|^{-2s}`.
pub fn apply_nonlocal_gradient(field: &Field, s: f64, axis: usize) -> Result<Field> {
    check_order(s, false)?;
    let grid = field.grid();
    check_axis(grid, axis)?;
    let radial = SymbolTable::power(grid, -2.0 * s);
    let mult = gradient_multiplier(grid, axis, radial.values());
    Ok(transform(field).multiplied(&mult).to_field())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfPower {
    /// `(-Δ)^{s/2}`
    HalfS,
    /// `(-Δ)^{-s/2}`
    MinusHalfS,
    /// `(-Δ)^{(1-s)/2}`
    HalfOneMinusS,
}

impl HalfPower {
    /// Exponent of `|ξ|`.
    pub fn exponent(self, s: f64) -> f64 {
        match self {
            HalfPower::HalfS => s,
            HalfPower::MinusHalfS => -s,
            HalfPower::HalfOneMinusS => 1.0 - s,
        }
    }
}

pub fn apply_half_operator(field: &Field, kind: HalfPower, s: f64) -> Result<Field> {
    check_order(s, true)?;
    SymbolTable::power(field.grid(), kind.exponent(s)).apply(field)
}

/// `e^{δ t Δ} u`.
pub fn heat_semigroup(field: &Field, delta: f64, t: f64) -> Result<Field> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("heat semigroup time must be >= 0, got {t}")));
    }
    if delta < 0.0 || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("viscosity must be >= 0, got {delta}")));
    }
    if t == 0.0 || delta == 0.0 {
        return Ok(field.clone());
    }
    SymbolTable::heat(field.grid(), delta, t).apply(field)
}

/// One operator instance bound to a grid: the multiplier is precomputed.
#[derive(Clone, Debug)]
pub struct FracOperator {
    spec: FracOperatorSpec,
    symbol: SymbolTable,
    kernel: Option<KernelTable>,
}

impl FracOperator {
    pub fn new(grid: &Arc<Grid>, spec: FracOperatorSpec) -> Result<Self> {
        spec.validate()?;
        let (symbol, kernel) = match spec.mode {
            SymbolMode::ExactSymbol => (SymbolTable::power(grid, 2.0 * spec.s), None),
            SymbolMode::RegularizedSymbol => (SymbolTable::regularized(grid, spec.s, spec.epsilon)?, None),
            SymbolMode::RegularizedKernel => {
                let k = KernelTable::new(grid, spec.s, spec.epsilon)?;
                (k.symbol(), Some(k))
            }
        };
        Ok(FracOperator { spec, symbol, kernel })
    }

    pub fn spec(&self) -> &FracOperatorSpec {
        &self.spec
    }

    pub fn symbol(&self) -> &SymbolTable {
        &self.symbol
    }

    pub fn kernel(&self) -> Option<&KernelTable> {
        self.kernel.as_ref()
    }

    /// Kernel mode evaluates the discrete convolution; the other modes
    /// multiply the spectrum.
    pub fn apply(&self, field: &Field) -> Result<Field> {
        match &self.kernel {
            Some(k) => k.apply(field),
            None => self.symbol.apply(field),
        }
    }

    /// Square root in the Fourier sense.
    pub fn apply_half(&self, field: &Field) -> Result<Field> {
        self.symbol.sqrt().apply(field)
    }

    pub fn quadratic_form(&self, field: &Field) -> Result<f64> {
        self.symbol.quadratic_form(field)
    }
}

/// `L^s_ε u` with the symbol computed by quadrature.
pub fn apply_regularized(field: &Field, s: f64, epsilon: f64) -> Result<Field> {
    let spec = FracOperatorSpec::new(field.grid().dim(), s, epsilon, SymbolMode::RegularizedSymbol)?;
    FracOperator::new(field.grid(), spec)?.apply(field)
}

/// `(L^s_ε)^{1/2} u`.
pub fn apply_half_regularized(field: &Field, s: f64, epsilon: f64) -> Result<Field> {
    let spec = FracOperatorSpec::new(field.grid().dim(), s, epsilon, SymbolMode::RegularizedSymbol)?;
    FracOperator::new(field.grid(), spec)?.apply_half(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn harmonic(grid: &Arc<Grid>, k: usize, sine: bool) -> Field {
        let xi = grid.freqs()[k];
        Field::from_fn(grid.clone(), |x| if sine { (xi * x[0]).sin() } else { (xi * x[0]).cos() }).unwrap()
    }

    fn gaussian(grid: &Arc<Grid>) -> Field {
        Field::from_fn(grid.clone(), |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()).unwrap()
    }

    #[test]
    fn normalization_known_values() {
        // C_{1,1/2} = 1/π and C_{3,1/2} = 1/π² are classical
        assert!((normalization_constant(1, 0.5) - 1.0 / PI).abs() < 1e-14);
        assert!((normalization_constant(3, 0.5) - 1.0 / (PI * PI)).abs() < 1e-14);
        // C_{2,s} = 4^s Γ(1+s) s / (π Γ(1-s)); at s = 1/2: 2·(√π/2)·(1/2)/(π·√π) = 1/(2π)
        assert!((normalization_constant(2, 0.5) - 0.5 / PI).abs() < 1e-14);
    }

    #[test]
    fn constants_map_to_zero() {
        let g = make_grid(1, 4.0, 32).unwrap();
        let c = Field::constant(g.clone(), 3.0);
        for f in [
            apply_frac_laplacian(&c, 0.3).unwrap(),
            apply_inverse_frac_laplacian(&c, 0.3).unwrap(),
            apply_nonlocal_gradient(&c, 0.7, 0).unwrap(),
            apply_half_operator(&c, HalfPower::HalfS, 0.4).unwrap(),
            apply_half_operator(&c, HalfPower::MinusHalfS, 0.4).unwrap(),
        ] {
            assert!(f.values().iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn harmonics_are_eigenfunctions() {
        let g = make_grid(1, 3.0, 64).unwrap();
        for k in [1usize, 5, 17] {
            let xi = g.freqs()[k];
            let c = harmonic(&g, k, false);
            let s = 0.35;
            let out = apply_frac_laplacian(&c, s).unwrap();
            for (a, b) in out.values().iter().zip(c.values()) {
                assert!((a - xi.powf(2.0 * s) * b).abs() < 1e-12);
            }
            let out = apply_inverse_frac_laplacian(&c, s).unwrap();
            for (a, b) in out.values().iter().zip(c.values()) {
                assert!((a - xi.powf(-2.0 * s) * b).abs() < 1e-12);
            }
            // sin → |ξ|^{1-2s} cos
            let sn = harmonic(&g, k, true);
            let out = apply_nonlocal_gradient(&sn, 0.8, 0).unwrap();
            for (a, b) in out.values().iter().zip(c.values()) {
                assert!((a - xi.powf(1.0 - 1.6) * b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_matches_second_difference() {
        // s = 1 against the centered second difference: O(dx²) discrepancy
        let mut errs = vec![];
        for n in [128usize, 256] {
            let g = make_grid(1, 10.0, n).unwrap();
            let u = gaussian(&g);
            let lap = apply_frac_laplacian(&u, 1.0).unwrap();
            let dx = g.dx();
            let v = u.values();
            let mut e: f64 = 0.0;
            for i in 0..n {
                let fd = -(v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (dx * dx);
                e = e.max((fd - lap.values()[i]).abs());
            }
            errs.push(e);
        }
        assert!(errs[0] < 0.02);
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn inverse_pair_and_rejection() {
        let g = make_grid(1, 6.0, 64).unwrap();
        let u = Field::from_fn(g.clone(), |x| (-(x[0] - 0.5).powi(2)).exp() + 0.2).unwrap();
        let p = apply_inverse_frac_laplacian(&u, 0.3).unwrap();
        let back = apply_frac_laplacian(&p, 0.3).unwrap();
        let mean = u.values().iter().sum::<f64>() / 64.0;
        for (a, b) in back.values().iter().zip(u.values()) {
            assert!((a - (b - mean)).abs() < 1e-10);
        }
        assert!(apply_inverse_frac_laplacian(&u, 0.5).is_err());
        let g2 = make_grid(2, 6.0, 16).unwrap();
        assert!(apply_inverse_frac_laplacian(&Field::zeros(g2), 0.7).is_ok());
        assert!(apply_frac_laplacian(&u, 1.2).is_err());
        assert!(apply_nonlocal_gradient(&u, 0.3, 1).is_err());
    }

    #[test]
    fn gradient_equals_composition_below_half() {
        let g = make_grid(1, 6.0, 128).unwrap();
        let u = gaussian(&g);
        let a = apply_nonlocal_gradient(&u, 0.3, 0).unwrap();
        let p = apply_inverse_frac_laplacian(&u, 0.3).unwrap();
        let mult = gradient_multiplier(&g, 0, &vec![1.0; 128]);
        let b = transform(&p).multiplied(&mult).to_field();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn half_powers_compose() {
        let g = make_grid(2, 5.0, 32).unwrap();
        let u = gaussian(&g);
        let s = 0.6;
        let twice = apply_half_operator(&apply_half_operator(&u, HalfPower::HalfS, s).unwrap(), HalfPower::HalfS, s).unwrap();
        let once = apply_frac_laplacian(&u, s).unwrap();
        assert!(twice.max_abs_diff(&once) < 1e-12);
        let h = apply_half_operator(&u, HalfPower::MinusHalfS, s).unwrap();
        let real = h.inner(&h);
        let parseval = SymbolTable::power(&g, -2.0 * s).quadratic_form(&u).unwrap();
        assert!((real - parseval).abs() < 1e-10 * parseval);
    }

    #[test]
    fn heat_kernel_oracle() {
        let g = make_grid(1, 20.0, 512).unwrap();
        let var = 1.0;
        let u = Field::from_fn(g.clone(), |x| (-x[0] * x[0] / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()).unwrap();
        let (delta, t) = (0.3, 0.5);
        let out = heat_semigroup(&u, delta, t).unwrap();
        let v2 = var + 2.0 * delta * t;
        let exact = Field::from_fn(g.clone(), |x| (-x[0] * x[0] / (2.0 * v2)).exp() / (2.0 * PI * v2).sqrt()).unwrap();
        assert!(out.max_abs_diff(&exact) < 1e-8);
        let m0: f64 = u.values().iter().sum();
        let m1: f64 = out.values().iter().sum();
        assert!((m0 - m1).abs() < 1e-12 * m0);
        assert_eq!(heat_semigroup(&u, delta, 0.0).unwrap().values(), u.values());
        assert!(heat_semigroup(&u, delta, -1.0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(FracOperatorSpec::exact(1, 0.5).is_ok());
        assert!(FracOperatorSpec::exact(1, 1.0).is_err());
        assert!(FracOperatorSpec::new(1, 0.5, 0.0, SymbolMode::RegularizedSymbol).is_err());
        assert!(FracOperatorSpec::new(1, 0.5, 0.1, SymbolMode::ExactSymbol).is_err());
        assert!(FracOperatorSpec::new(1, 0.5, -0.1, SymbolMode::RegularizedKernel).is_err());
    }
}
