//! Time integrators: a conservative upwind scheme, its semi-implicit
//! viscous variant, and the Duhamel/Picard mild-solution solver.
//!
//! The pressure is `p = P u` with `P = |ξ|^{-2s}` for the exact operator and
//! `P = S_ε(ξ)/|ξ|²` for `(-Δ)^{-1} L^{1-s}_ε`. Mass moves with the transport
//! velocity `v = -∇p`, so that `u_t + ∇·(G'(u) v) = δΔu`.

mod duhamel;
mod run;

pub use duhamel::{duhamel_solve, duhamel_solve_with, DuhamelOutcome};
pub use run::{run, NoObserver, Observer, RunOptions, RunOutcome, Trajectory};

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::{gradient_multiplier, FracOperator, FracOperatorSpec, SymbolMode, SymbolTable};
use crate::grid::{transform, Field, Grid, Spectrum};
use crate::nonlinearity::{NonlinearityKind, NonlinearitySpec};

/// Values below zero but above this are rounding and get clamped.
pub const NEGATIVITY_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExplicitUpwind,
    SemiImplicit,
    Duhamel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuhamelSettings {
    pub window: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub nodes: usize,
}

impl Default for DuhamelSettings {
    fn default() -> Self {
        DuhamelSettings { window: 0.05, tol: 1e-10, max_iter: 100, nodes: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub s: f64,
    pub epsilon: f64,
    pub mode: SymbolMode,
    pub delta: f64,
    pub nonlinearity: NonlinearitySpec,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub scheme: Scheme,
    pub positivity_floor: f64,
    pub duhamel: DuhamelSettings,
}

impl SolverConfig {
    /// Explicit upwind with the exact operator and no viscosity.
    pub fn direct(s: f64, nonlinearity: NonlinearitySpec, t_end: f64) -> Self {
        SolverConfig {
            s,
            epsilon: 0.0,
            mode: SymbolMode::ExactSymbol,
            delta: 0.0,
            nonlinearity,
            t_end,
            cfl_safety: 0.5,
            dt_max: 1e-2,
            scheme: Scheme::ExplicitUpwind,
            positivity_floor: 0.0,
            duhamel: DuhamelSettings::default(),
        }
    }

    /// Switches to the regularized operator in symbol mode.
    pub fn regularized(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self.mode = if epsilon > 0.0 { SymbolMode::RegularizedSymbol } else { SymbolMode::ExactSymbol };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSolver(m));
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s must lie in (0,1), got {}", self.s));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0,1], got {}", self.cfl_safety));
        }
        if !(self.dt_max > 0.0) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be >= 0, got {}", self.delta));
        }
        if self.positivity_floor != 0.0 {
            return bad("positivity_floor must be 0".into());
        }
        self.nonlinearity.validate()?;
        self.operator_spec(1)?;
        if self.scheme == Scheme::Duhamel {
            if self.epsilon <= 0.0 {
                return bad("the Duhamel solver needs epsilon > 0".into());
            }
            let d = &self.duhamel;
            if !(d.window > 0.0 && d.tol > 0.0 && d.max_iter > 0 && d.nodes >= 2) {
                return bad("invalid Duhamel settings".into());
            }
        }
        Ok(())
    }

    /// The operator of order `1 - s` whose composition with `(-Δ)^{-1}` is the pressure.
    pub fn operator_spec(&self, dim: usize) -> Result<FracOperatorSpec> {
        FracOperatorSpec::new(dim, 1.0 - self.s, self.epsilon, self.mode)
    }
}

/// Components of the step bound; the bound itself combines them so that the
/// diagonal of the update stays nonnegative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CflBounds {
    /// `dx / (2N max|v| max G'')`
    pub advective: f64,
    /// `1 / (a₀ max G')`, with `a₀` the diagonal of the discrete divergence of `v`.
    pub nonlocal: f64,
    /// `dx² / (2N δ)`; infinite for the semi-implicit scheme.
    pub viscous: f64,
    pub max_velocity: f64,
}

impl CflBounds {
    pub fn combined(&self) -> f64 {
        1.0 / (1.0 / self.advective + 1.0 / self.nonlocal + 1.0 / self.viscous)
    }
}

/// Precomputed multipliers for one grid and configuration.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: Arc<Grid>,
    config: SolverConfig,
    pressure: SymbolTable,
    elliptic: SymbolTable,
    face: Vec<Vec<Complex64>>,
    center: Vec<Vec<Complex64>>,
    divergence_diagonal: f64,
    laplacian: SymbolTable,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let dim = grid.dim();
        let elliptic = match config.mode {
            SymbolMode::ExactSymbol => SymbolTable::power(grid, 2.0 - 2.0 * config.s),
            _ => FracOperator::new(grid, config.operator_spec(dim)?)?.symbol().clone(),
        };
        let pressure = elliptic.map(|k, v| if k == 0 { 0.0 } else { v / grid.xi_norm(k).powi(2) });
        let dx = grid.dx();
        let face = (0..dim)
            .map(|axis| {
                (0..grid.len())
                    .map(|k| {
                        let xa = grid.wavevector(k)[axis];
                        Complex64::new(0.0, -xa * pressure.values()[k]) * Complex64::from_polar(1.0, 0.5 * xa * dx)
                    })
                    .collect()
            })
            .collect();
        let center = (0..dim).map(|axis| gradient_multiplier(grid, axis, pressure.values())).collect();
        let mut diag = 0.0;
        for k in 0..grid.len() {
            let w = grid.wavevector(k);
            for &xa in w.iter().take(dim) {
                diag += 2.0 / dx * xa * (0.5 * xa * dx).sin() * pressure.values()[k];
            }
        }
        let divergence_diagonal = diag / grid.len() as f64;
        let laplacian = SymbolTable::power(grid, 2.0).map(|k, _| {
            let w = grid.wavevector(k);
            w.iter().take(dim).map(|xa| (2.0 / dx * (0.5 * xa * dx).sin()).powi(2)).sum()
        });
        Ok(Stepper {
            grid: grid.clone(),
            config: config.clone(),
            pressure,
            elliptic,
            face,
            center,
            divergence_diagonal,
            laplacian,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `P(ξ)` with `p = P u`.
    pub fn pressure_symbol(&self) -> &SymbolTable {
        &self.pressure
    }

    /// `|ξ|² P(ξ)`: `(-Δ)^{1-s}` or `L^{1-s}_ε`.
    pub fn elliptic_symbol(&self) -> &SymbolTable {
        &self.elliptic
    }

    /// Cell-centred `∂_axis p` multiplier, Nyquist removed.
    pub fn gradient_multiplier(&self, axis: usize) -> &[Complex64] {
        &self.center[axis]
    }

    /// Symbol of minus the five-point (three-point in 1D) Laplacian, used by
    /// the implicit viscosity solve.
    pub fn viscous_symbol(&self) -> &SymbolTable {
        &self.laplacian
    }

    pub fn divergence_diagonal(&self) -> f64 {
        self.divergence_diagonal
    }

    fn face_velocities(&self, spectrum: &Spectrum) -> Vec<Vec<f64>> {
        self.face.iter().map(|m| spectrum.multiplied(m).to_field().into_values()).collect()
    }

    /// Transport velocity `-∇p` at the faces `x + dx/2 e_axis`, one field per axis.
    pub fn velocity(&self, field: &Field) -> Result<Vec<Field>> {
        self.check(field)?;
        let spec = transform(field);
        Ok(self
            .face_velocities(&spec)
            .into_iter()
            .map(|v| Field::from_raw(self.grid.clone(), v))
            .collect())
    }

    pub fn cfl_bounds(&self, field: &Field) -> Result<CflBounds> {
        self.check(field)?;
        let v = self.face_velocities(&transform(field));
        Ok(self.bounds_from(field, &v))
    }

    fn bounds_from(&self, field: &Field, v: &[Vec<f64>]) -> CflBounds {
        let nl = &self.config.nonlinearity;
        let u = field.values();
        let dim = self.grid.dim() as f64;
        let dx = self.grid.dx();
        let vmax = v.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let umax = u.iter().copied().fold(0.0f64, f64::max);
        let gmax = u.iter().fold(0.0f64, |m, &x| m.max(nl.mobility_unchecked(x.max(0.0))));
        // for 1 < m < 2, G'' blows up at 0; measure it where u is not negligible
        let floor = if nl.kind == NonlinearityKind::Power && nl.m < 2.0 { 1e-3 * umax } else { 0.0 };
        let gpp = u
            .iter()
            .filter(|&&x| x >= floor && x >= 0.0)
            .fold(0.0f64, |m, &x| m.max(nl.mobility_derivative(x).abs()));
        let inf = f64::INFINITY;
        let advective = if vmax * gpp > 0.0 { dx / (2.0 * dim * vmax * gpp) } else { inf };
        let nonlocal = if gmax * self.divergence_diagonal > 0.0 { 1.0 / (self.divergence_diagonal * gmax) } else { inf };
        let viscous = if self.config.scheme == Scheme::ExplicitUpwind && self.config.delta > 0.0 {
            dx * dx / (2.0 * dim * self.config.delta)
        } else {
            inf
        };
        CflBounds { advective, nonlocal, viscous, max_velocity: vmax }
    }

    fn dt_from(&self, bounds: &CflBounds) -> f64 {
        if bounds.max_velocity == 0.0 {
            return self.config.dt_max;
        }
        (self.config.cfl_safety * bounds.combined()).min(self.config.dt_max)
    }

    /// Step size for the next explicit or semi-implicit step.
    pub fn cfl_dt(&self, field: &Field) -> Result<f64> {
        Ok(self.dt_from(&self.cfl_bounds(field)?))
    }

    pub fn explicit_step(&self, field: &Field, dt: f64) -> Result<Field> {
        self.advance(field, dt, 0.0, false)
    }

    pub fn semi_implicit_step(&self, field: &Field, dt: f64) -> Result<Field> {
        self.advance(field, dt, 0.0, true)
    }

    /// One step of the configured explicit or semi-implicit scheme.
    pub fn step(&self, field: &Field, dt: f64, time: f64) -> Result<Field> {
        match self.config.scheme {
            Scheme::ExplicitUpwind => self.advance(field, dt, time, false),
            Scheme::SemiImplicit => self.advance(field, dt, time, true),
            Scheme::Duhamel => Err(Error::InvalidSolver("Duhamel runs advance by windows, not steps".into())),
        }
    }

    fn check(&self, field: &Field) -> Result<()> {
        if field.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::SizeMismatch { expected: self.grid.len(), actual: field.values().len() });
        }
        Ok(())
    }

    fn advance(&self, field: &Field, dt: f64, time: f64, implicit_viscosity: bool) -> Result<Field> {
        self.check(field)?;
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let grid = &self.grid;
        let spec = transform(field);
        let v = self.face_velocities(&spec);
        let mut bounds = self.bounds_from(field, &v);
        if implicit_viscosity {
            bounds.viscous = f64::INFINITY;
        }
        let bound = bounds.combined();
        if bounds.max_velocity > 0.0 && dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, bound });
        }
        let nl = &self.config.nonlinearity;
        let u = field.values();
        let dim = grid.dim();
        let dx = grid.dx();
        let ratio = dt / dx;
        let mut out = u.to_vec();
        let mut flux = vec![0.0; u.len()];
        for (axis, va) in v.iter().enumerate() {
            for i in 0..u.len() {
                let j = grid.neighbour(i, axis, true);
                let up = if va[i] > 0.0 { u[i] } else { u[j] };
                flux[i] = nl.mobility_unchecked(up.max(0.0)) * va[i];
            }
            for i in 0..u.len() {
                let l = grid.neighbour(i, axis, false);
                out[i] -= ratio * (flux[i] - flux[l]);
            }
        }
        let delta = self.config.delta;
        if delta > 0.0 {
            if implicit_viscosity {
                let f = Field::from_raw(grid.clone(), out);
                let denom: Vec<f64> = self.laplacian.values().iter().map(|x| 1.0 / (1.0 + dt * delta * x)).collect();
                out = transform(&f).scaled(&denom).to_field().into_values();
            } else {
                let c = dt * delta / (dx * dx);
                for i in 0..u.len() {
                    let mut lap = -2.0 * dim as f64 * u[i];
                    for axis in 0..dim {
                        lap += u[grid.neighbour(i, axis, true)] + u[grid.neighbour(i, axis, false)];
                    }
                    out[i] += c * lap;
                }
            }
        }
        let mut clamped = 0usize;
        for (i, x) in out.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            if *x < 0.0 {
                if *x < -NEGATIVITY_TOL {
                    return Err(Error::Negativity { value: *x, index: i, time: time + dt });
                }
                *x = 0.0;
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::debug!("clamped {clamped} rounding-level negative values at t = {}", time + dt);
        }
        Ok(Field::from_raw(grid.clone(), out))
    }
}

/// Face velocities per axis for a one-off configuration.
pub fn velocity(field: &Field, config: &SolverConfig) -> Result<Vec<Field>> {
    Stepper::new(field.grid(), config)?.velocity(field)
}

pub fn explicit_step(field: &Field, config: &SolverConfig, dt: f64) -> Result<Field> {
    Stepper::new(field.grid(), config)?.explicit_step(field, dt)
}

pub fn semi_implicit_step(field: &Field, config: &SolverConfig, dt: f64) -> Result<Field> {
    Stepper::new(field.grid(), config)?.semi_implicit_step(field, dt)
}

pub fn cfl_dt(field: &Field, config: &SolverConfig) -> Result<f64> {
    Stepper::new(field.grid(), config)?.cfl_dt(field)
}
