//! The regularized operator `L^s_ε`: its symbol by quadrature, and an
//! explicit periodized kernel.
//!
//! In two dimensions the symbol is computed by the same one-dimensional
//! integral: integrating the kernel over the coordinate orthogonal to `ξ`
//! turns `C_{2,s}(|z|²+ε²)^{-(2+2s)/2}` into `C_{1,s}(z₁²+ε²)^{-(1+2s)/2}`
//! exactly, so `S_2(ξ) = S_1(|ξ|)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use super::{normalization_constant, SymbolTable};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::quadrature::{integrate, integrate_with_breakpoints, Tolerance};

const QUAD_TOL: f64 = 1e-11;
const REPORT_TOL: f64 = 1e-9;
const MAX_INTERVALS: usize = 20_000;
const MIN_PERIODS: usize = 32;

fn check_params(s: f64, epsilon: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOperator(format!("s must lie in (0,1), got {s}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidOperator(format!(
            "regularized operator needs epsilon > 0, got {epsilon}"
        )));
    }
    Ok(())
}

/// `∫_Z^∞ (z² + ε²)^{-a} dz` for `a > 1/2`.
fn power_tail(a: f64, epsilon: f64, z: f64) -> Result<f64> {
    if epsilon < 0.5 * z {
        // binomial series in (ε/z)²
        let r = (epsilon / z).powi(2);
        let lead = z.powf(1.0 - 2.0 * a);
        let mut coef = 1.0;
        let mut sum = 0.0;
        for k in 0..200 {
            let term = coef * lead / (2.0 * a + 2.0 * k as f64 - 1.0);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                return Ok(sum);
            }
            coef *= (-a - k as f64) / (k as f64 + 1.0) * r;
        }
        Err(Error::Quadrature("tail series did not converge".into()))
    } else {
        let f = |t: f64| z * t.powf(2.0 * a - 2.0) * (z * z + epsilon * epsilon * t * t).powf(-a);
        Ok(integrate(f, 0.0, 1.0, Tolerance::relative(QUAD_TOL), MAX_INTERVALS)?.value)
    }
}

/// `S(ξ) = C_{1,s} ∫ (1 - cos(ξ z)) (z² + ε²)^{-(1+2s)/2} dz` at one `|ξ|`.
/// The value is the same in one and two dimensions.
pub fn regularized_symbol_value(xi: f64, s: f64, epsilon: f64) -> Result<f64> {
    check_params(s, epsilon)?;
    let xi = xi.abs();
    if xi == 0.0 {
        return Ok(0.0);
    }
    let a = 0.5 + s;
    let half_period = PI / xi;
    let periods = MIN_PERIODS.max((epsilon * xi / PI).ceil() as usize + 1);
    let z_max = 2.0 * periods as f64 * half_period;

    let mut points: Vec<f64> = (0..=2 * periods).map(|j| j as f64 * half_period).collect();
    let mut e = epsilon;
    while e < half_period {
        points.push(e);
        e *= 4.0;
    }
    points.push(epsilon);
    points.sort_by(f64::total_cmp);
    points.dedup();
    points.retain(|&p| p <= z_max);

    let integrand = |z: f64| {
        let h = (0.5 * xi * z).sin();
        2.0 * h * h * (z * z + epsilon * epsilon).powf(-a)
    };
    let body = integrate_with_breakpoints(integrand, &points, Tolerance::relative(QUAD_TOL), MAX_INTERVALS)?;
    if body.error > REPORT_TOL * body.value.abs() {
        return Err(Error::Quadrature(format!(
            "symbol at |ξ| = {xi}: error {:e} exceeds relative tolerance {REPORT_TOL:e}",
            body.error
        )));
    }

    // cos(ξ Z) = 1 at the cut, so two integrations by parts give the cosine tail
    let q = z_max * z_max + epsilon * epsilon;
    let d1 = -2.0 * a * z_max * q.powf(-a - 1.0);
    let d3 = 12.0 * a * (a + 1.0) * z_max * q.powf(-a - 2.0)
        - 8.0 * a * (a + 1.0) * (a + 2.0) * z_max.powi(3) * q.powf(-a - 3.0);
    let cos_tail = -d1 / (xi * xi) + d3 / xi.powi(4);
    let tail = power_tail(a, epsilon, z_max)? - cos_tail;

    Ok(2.0 * normalization_constant(1, s) * (body.value + tail))
}

/// Symbol values at each `|ξ|` in the input.
pub fn regularized_symbol(xi_magnitudes: &[f64], s: f64, epsilon: f64, dim: usize) -> Result<Vec<f64>> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidArgument(format!("dim must be 1 or 2, got {dim}")));
    }
    xi_magnitudes.par_iter().map(|&xi| regularized_symbol_value(xi, s, epsilon)).collect()
}

pub(crate) fn symbol_table(grid: &Arc<Grid>, s: f64, epsilon: f64) -> Result<SymbolTable> {
    check_params(s, epsilon)?;
    let mut shells: BTreeMap<u64, f64> = BTreeMap::new();
    for k in 0..grid.len() {
        shells.entry(grid.shell_key(k)).or_insert_with(|| grid.xi_norm(k));
    }
    let keys: Vec<(u64, f64)> = shells.into_iter().collect();
    let values: Vec<f64> = keys
        .par_iter()
        .map(|&(_, xi)| regularized_symbol_value(xi, s, epsilon))
        .collect::<Result<_>>()?;
    let lookup: BTreeMap<u64, f64> = keys.iter().map(|k| k.0).zip(values).collect();
    let table = (0..grid.len()).map(|k| lookup[&grid.shell_key(k)]).collect();
    SymbolTable::new(grid.clone(), table)
}

/// `‖J^s_ε‖_{L¹(ℝ^N)} = C_{N,s} π^{N/2} Γ(s) / Γ(N/2+s) · ε^{-2s}`.
pub fn kernel_l1_norm(dim: usize, s: f64, epsilon: f64) -> f64 {
    let h = dim as f64 / 2.0;
    normalization_constant(dim, s) * PI.powf(h) * gamma(s) / gamma(h + s) * epsilon.powf(-2.0 * s)
}

fn kernel(dim: usize, s: f64, epsilon: f64, r2: f64) -> f64 {
    normalization_constant(dim, s) * (r2 + epsilon * epsilon).powf(-(dim as f64 + 2.0 * s) / 2.0)
}

/// Kernel sampled at cell offsets and summed over the periodic images within
/// `image_radius` boxes on each axis. The mass of `J` outside those images is
/// put back as a constant, and `tail_bound` bounds the symbol error of
/// dropping it altogether.
#[derive(Clone, Debug)]
pub struct KernelTable {
    grid: Arc<Grid>,
    s: f64,
    epsilon: f64,
    image_radius: usize,
    weights: Vec<f64>,
    weights_hat: Vec<Complex64>,
    weight_sum: f64,
    outside_mass: f64,
}

impl KernelTable {
    pub fn new(grid: &Arc<Grid>, s: f64, epsilon: f64) -> Result<Self> {
        let radius = if grid.dim() == 1 { 8 } else { 3 };
        KernelTable::with_images(grid, s, epsilon, radius)
    }

    pub fn with_images(grid: &Arc<Grid>, s: f64, epsilon: f64, image_radius: usize) -> Result<Self> {
        check_params(s, epsilon)?;
        let dim = grid.dim();
        let n = grid.n();
        let dx = grid.dx();
        let period = 2.0 * grid.half_length();
        let offset = |j: usize| if j < n / 2 { j as f64 * dx } else { (j as f64 - n as f64) * dx };
        let r = image_radius as i64;
        let images: Vec<f64> = (-r..=r).map(|k| k as f64).collect();
        let weights: Vec<f64> = (0..grid.len())
            .map(|flat| {
                let [a, b] = grid.unflatten(flat);
                let (za, zb) = (offset(a), if dim == 2 { offset(b) } else { 0.0 });
                let mut acc = 0.0;
                for &ia in &images {
                    if dim == 1 {
                        acc += kernel(1, s, epsilon, (za + ia * period).powi(2));
                    } else {
                        for &ib in &images {
                            acc += kernel(2, s, epsilon, (za + ia * period).powi(2) + (zb + ib * period).powi(2));
                        }
                    }
                }
                acc
            })
            .collect();
        let vol = grid.cell_volume();
        let weight_sum = weights.iter().sum::<f64>() * vol;
        let mut weights_hat: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w * vol, 0.0)).collect();
        grid.raw_fft(&mut weights_hat, false);
        let outside_mass = outside_mass(dim, s, epsilon, (image_radius as f64 + 0.5) * period)?;
        Ok(KernelTable { grid: grid.clone(), s, epsilon, image_radius, weights, weights_hat, weight_sum, outside_mass })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn image_radius(&self) -> usize {
        self.image_radius
    }

    /// Periodized kernel at each cell offset, FFT order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ J` over ℝ^N outside the image cells.
    pub fn outside_mass(&self) -> f64 {
        self.outside_mass
    }

    /// Upper bound on the symbol change from the truncated images.
    pub fn tail_bound(&self) -> f64 {
        2.0 * self.outside_mass
    }

    /// Equivalent multiplier `Σ_j J_j (1 - cos ξ·z_j) dx^N` plus the tail.
    pub fn symbol(&self) -> SymbolTable {
        let values = (0..self.grid.len())
            .map(|k| if k == 0 { 0.0 } else { self.weight_sum - self.weights_hat[k].re + self.outside_mass })
            .collect();
        SymbolTable { grid: self.grid.clone(), values }
    }

    /// `u (∫J) - J ⋆ u` as a discrete periodic convolution.
    pub fn apply(&self, field: &Field) -> Result<Field> {
        let grid = &self.grid;
        if field.grid().as_ref() != grid.as_ref() {
            return Err(Error::SizeMismatch { expected: grid.len(), actual: field.values().len() });
        }
        let u = field.values();
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.raw_fft(&mut buf, false);
        for (b, w) in buf.iter_mut().zip(&self.weights_hat) {
            *b *= w;
        }
        grid.raw_fft(&mut buf, true);
        let scale = 1.0 / grid.len() as f64;
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        let total = self.weight_sum + self.outside_mass;
        let values = u
            .iter()
            .zip(&buf)
            .map(|(&ui, c)| ui * total - c.re * scale - self.outside_mass * mean)
            .collect();
        Ok(Field::from_raw(grid.clone(), values))
    }
}

/// `∫ J` outside the cube `[-h, h)^N`.
fn outside_mass(dim: usize, s: f64, epsilon: f64, h: f64) -> Result<f64> {
    let c = normalization_constant(dim, s);
    if dim == 1 {
        Ok(2.0 * c * power_tail(0.5 + s, epsilon, h)?)
    } else {
        // polar coordinates over the exterior of the square, by symmetry 8 octants
        let f = |theta: f64| {
            let r = h / theta.cos();
            (r * r + epsilon * epsilon).powf(-s) / (2.0 * s)
        };
        let q = integrate(f, 0.0, PI / 4.0, Tolerance::relative(QUAD_TOL), MAX_INTERVALS)?;
        Ok(8.0 * c * q.value)
    }
}
