//! Picard iteration for the mild formulation
//! `v(t) = e^{δtΔ}u₀ + ∫₀^t e^{δ(t-τ)Δ} ∇·(G'(v) ∇p(v)) dτ`
//! on a uniform time lattice with trapezoid quadrature in `τ`.

use num_complex::Complex64;

use super::{SolverConfig, Stepper};
use crate::error::{Error, Result};
use crate::grid::{transform, Field, Spectrum};

#[derive(Clone, Debug)]
pub struct DuhamelOutcome {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    /// `sup_k ‖v_{j+1}(τ_k) - v_j(τ_k)‖₂` per iteration.
    pub distances: Vec<f64>,
    pub iterations: usize,
}

impl DuhamelOutcome {
    /// Ratios of successive distances.
    pub fn ratios(&self) -> Vec<f64> {
        self.distances.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Fixed point on `[0, window]` with the configured mobility.
pub fn duhamel_solve(u0: &Field, config: &SolverConfig, window: f64, tol: f64, max_iter: usize) -> Result<DuhamelOutcome> {
    let stepper = Stepper::new(u0.grid(), config)?;
    stepper.duhamel_window(u0, window, tol, max_iter)
}

/// As [`duhamel_solve`] with the mobility replaced by `mobility`.
pub fn duhamel_solve_with(
    u0: &Field,
    stepper: &Stepper,
    window: f64,
    tol: f64,
    max_iter: usize,
    mobility: impl Fn(f64) -> f64,
) -> Result<DuhamelOutcome> {
    let grid = stepper.grid().clone();
    let cfg = stepper.config();
    if !(cfg.delta > 0.0) {
        return Err(Error::InvalidSolver("the Duhamel solver needs delta > 0".into()));
    }
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
    }
    let nodes = cfg.duhamel.nodes;
    let h = window / (nodes - 1) as f64;
    let times: Vec<f64> = (0..nodes).map(|k| k as f64 * h).collect();
    let xi2: Vec<f64> = (0..grid.len()).map(|k| grid.xi_norm(k).powi(2)).collect();
    let heat: Vec<Vec<f64>> = (0..nodes)
        .map(|j| xi2.iter().map(|x| (-cfg.delta * j as f64 * h * x).exp()).collect())
        .collect();
    let u0_hat = transform(u0);
    let base: Vec<Spectrum> = heat.iter().map(|e| u0_hat.scaled(e)).collect();
    let dim = grid.dim();
    let divergence: Vec<Vec<Complex64>> = (0..dim)
        .map(|axis| {
            (0..grid.len())
                .map(|k| {
                    if grid.is_nyquist(k, axis) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, grid.wavevector(k)[axis])
                    }
                })
                .collect()
        })
        .collect();

    let mut current: Vec<Field> = vec![u0.clone(); nodes];
    let mut distances = Vec::new();
    let mut rising = 0usize;
    for iteration in 1..=max_iter {
        // ∇·G(v) in Fourier space at every node
        let sources: Vec<Vec<Complex64>> = current
            .iter()
            .map(|v| {
                let vh = transform(v);
                let mob: Vec<f64> = v.values().iter().map(|&x| mobility(x.max(0.0))).collect();
                let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
                for (axis, div) in divergence.iter().enumerate().take(dim) {
                    let grad = vh.multiplied(stepper.gradient_multiplier(axis)).to_field();
                    let flux: Vec<f64> = grad.values().iter().zip(&mob).map(|(g, m)| g * m).collect();
                    let fh = grid.transform_values(&flux).expect("grid-sized buffer");
                    for ((a, f), d) in acc.iter_mut().zip(&fh).zip(div) {
                        *a += f * d;
                    }
                }
                acc
            })
            .collect();
        let mut next = Vec::with_capacity(nodes);
        for k in 0..nodes {
            let mut coeffs = base[k].coeffs().to_vec();
            if k > 0 {
                for (l, src) in sources.iter().enumerate().take(k + 1) {
                    let w = if l == 0 || l == k { 0.5 * h } else { h };
                    let e = &heat[k - l];
                    for ((c, s), ek) in coeffs.iter_mut().zip(src).zip(e) {
                        *c += s * (w * ek);
                    }
                }
            }
            next.push(Spectrum::new(grid.clone(), coeffs)?.to_field());
        }
        let dist = next.iter().zip(&current).map(|(a, b)| a.l2_distance(b)).fold(0.0, f64::max);
        if let Some(&prev) = distances.last() {
            if dist >= prev && dist > 0.0 {
                rising += 1;
            } else {
                rising = 0;
            }
        }
        distances.push(dist);
        current = next;
        if dist < tol || dist == 0.0 {
            return Ok(DuhamelOutcome { times, fields: current, distances, iterations: iteration });
        }
        if rising >= 3 {
            let ratios = distances.windows(2).map(|w| w[1] / w[0]).collect();
            return Err(Error::NonContraction { ratios });
        }
    }
    Err(Error::PicardMaxIter { tol, max_iter, last: *distances.last().unwrap_or(&f64::NAN) })
}

impl Stepper {
    /// Mild solution on `[0, window]` starting from `u0`.
    pub fn duhamel_window(&self, u0: &Field, window: f64, tol: f64, max_iter: usize) -> Result<DuhamelOutcome> {
        let nl = self.config().nonlinearity;
        duhamel_solve_with(u0, self, window, tol, max_iter, move |x| nl.mobility_unchecked(x))
    }
}
