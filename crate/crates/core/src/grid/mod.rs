//! Periodic tensor-product grid on the torus `[-L, L)^N` and its discrete
//! Fourier pair.
//!
//! The forward transform approximates the continuum transform by a Riemann
//! sum, `û(ξ) = Σ u(x) e^{-iξ·x} dx^N`, so continuum symbols can be applied
//! verbatim. Spectra are stored in FFT order: index `j` on an axis carries the
//! wavenumber `ξ = πk/L` with `k = j` for `j < n/2` and `k = j - n` otherwise.

mod snapshot;

pub use snapshot::{read_snapshot, write_csv, write_snapshot, SnapshotHeader};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct Grid {
    dim: usize,
    half_length: f64,
    n: usize,
    dx: f64,
    freqs: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_length == other.half_length
    }
}

/// Builds a grid with `n` points per axis on `[-L, L)^dim`.
pub fn make_grid(dim: usize, half_length: f64, n: usize) -> Result<Arc<Grid>> {
    Grid::new(dim, half_length, n)
}

impl Grid {
    pub fn new(dim: usize, half_length: f64, n: usize) -> Result<Arc<Grid>> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half-length must be positive, got {half_length}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two and at least 8, got {n}"
            )));
        }
        let dx = 2.0 * half_length / n as f64;
        let freqs = (0..n)
            .map(|j| std::f64::consts::PI * signed_index(j, n) as f64 / half_length)
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid { dim, half_length, n, dx, freqs, forward, inverse }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Cell volume `dx^N`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }

    /// Torus volume `(2L)^N`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Node coordinate along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx
    }

    /// Per-axis indices of a flat row-major index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    /// Coordinates of a node; the second entry is 0 in 1D.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(flat);
        if self.dim == 1 {
            [self.coord(a), 0.0]
        } else {
            [self.coord(a), self.coord(b)]
        }
    }

    /// Euclidean distance of a node from the origin.
    pub fn radius(&self, flat: usize) -> f64 {
        let [x, y] = self.point(flat);
        x.hypot(y)
    }

    /// Wavevector of a flat spectral index; the second entry is 0 in 1D.
    pub fn wavevector(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(flat);
        if self.dim == 1 {
            [self.freqs[a], 0.0]
        } else {
            [self.freqs[a], self.freqs[b]]
        }
    }

    pub fn xi_norm(&self, flat: usize) -> f64 {
        let [a, b] = self.wavevector(flat);
        a.hypot(b)
    }

    /// Integer shell key `k_0² + k_1²`; equal keys share `|ξ|`.
    pub fn shell_key(&self, flat: usize) -> u64 {
        let [a, b] = self.unflatten(flat);
        let ka = signed_index(a, self.n);
        let kb = if self.dim == 1 { 0 } else { signed_index(b, self.n) };
        (ka * ka + kb * kb) as u64
    }

    /// True when the spectral index sits on the Nyquist plane of `axis`.
    pub fn is_nyquist(&self, flat: usize, axis: usize) -> bool {
        self.unflatten(flat)[axis] == self.n / 2
    }

    /// Flat index of the neighbour `+1` (or `-1`) along `axis`, periodically.
    pub fn neighbour(&self, flat: usize, axis: usize, forward: bool) -> usize {
        let n = self.n;
        let step = |j: usize| if forward { (j + 1) % n } else { (j + n - 1) % n };
        let [a, b] = self.unflatten(flat);
        match (self.dim, axis) {
            (1, _) => step(a),
            (_, 0) => step(a) * n + b,
            _ => a * n + step(b),
        }
    }

    /// Checks that a buffer carries one value per node.
    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), actual: len });
        }
        Ok(())
    }

    fn phase_sign(&self, flat: usize) -> f64 {
        let [a, b] = self.unflatten(flat);
        if (a + b) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Unnormalized N-dimensional FFT in place.
    pub(crate) fn raw_fft(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process(buf);
        if self.dim == 2 {
            let n = self.n;
            transpose(buf, n);
            plan.process(buf);
            transpose(buf, n);
        }
    }

    /// Forward transform of real samples.
    pub fn transform_values(&self, values: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(values.len())?;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.raw_fft(&mut buf, false);
        let w = self.cell_volume();
        for (flat, c) in buf.iter_mut().enumerate() {
            *c *= w * self.phase_sign(flat);
        }
        Ok(buf)
    }

    /// Inverse transform; returns the real part.
    pub fn inverse_values(&self, coeffs: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len())?;
        let mut buf = coeffs.to_vec();
        let w = 1.0 / (self.cell_volume() * self.len() as f64);
        for (flat, c) in buf.iter_mut().enumerate() {
            *c *= w * self.phase_sign(flat);
        }
        self.raw_fft(&mut buf, true);
        Ok(buf.into_iter().map(|c| c.re).collect())
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// Real samples of `u` on a grid, row-major.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        grid.check_len(values.len())?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Field {
        let values = vec![0.0; grid.len()];
        Field { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Field {
        let values = vec![c; grid.len()];
        Field { grid, values }
    }

    /// Samples `f` at every node. In 1D the second coordinate is 0.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Field> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Replaces the values, keeping the grid.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Field> {
        Field::new(self.grid.clone(), values)
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    /// Maximum absolute difference to another field on the same grid.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `L²` distance `(Σ |a-b|² dx^N)^{1/2}`.
    pub fn l2_distance(&self, other: &Field) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// `⟨u, v⟩ = Σ u v dx^N`.
    pub fn inner(&self, other: &Field) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        s * self.grid.cell_volume()
    }
}

/// Fourier coefficients of a field in FFT order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Spectrum> {
        grid.check_len(coeffs.len())?;
        Ok(Spectrum { grid, coeffs })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of the zero mode, `mean · (2L)^N`.
    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Pointwise product with a real multiplier.
    pub fn scaled(&self, symbol: &[f64]) -> Spectrum {
        let coeffs = self.coeffs.iter().zip(symbol).map(|(c, s)| c * s).collect();
        Spectrum { grid: self.grid.clone(), coeffs }
    }

    /// Pointwise product with a complex multiplier.
    pub fn multiplied(&self, symbol: &[Complex64]) -> Spectrum {
        let coeffs = self.coeffs.iter().zip(symbol).map(|(c, s)| c * s).collect();
        Spectrum { grid: self.grid.clone(), coeffs }
    }

    /// `(2L)^{-N} Σ |û|²`, equal to `Σ |u|² dx^N`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.volume()
    }

    /// `(2L)^{-N} Σ w |û|²` for a real weight.
    pub fn weighted_energy(&self, weight: &[f64]) -> f64 {
        self.coeffs.iter().zip(weight).map(|(c, w)| w * c.norm_sqr()).sum::<f64>()
            / self.grid.volume()
    }
}

pub fn transform(field: &Field) -> Spectrum {
    let coeffs = field
        .grid
        .transform_values(&field.values)
        .expect("field length matches its grid");
    Spectrum { grid: field.grid.clone(), coeffs }
}

pub fn inverse_transform(spectrum: &Spectrum, grid: &Arc<Grid>) -> Result<Field> {
    if spectrum.grid.as_ref() != grid.as_ref() {
        return Err(Error::SizeMismatch { expected: grid.len(), actual: spectrum.coeffs.len() });
    }
    let values = grid.inverse_values(&spectrum.coeffs)?;
    Ok(Field::from_raw(grid.clone(), values))
}

impl Spectrum {
    /// Inverse transform onto the spectrum's own grid.
    pub fn to_field(&self) -> Field {
        let values = self.grid.inverse_values(&self.coeffs).expect("spectrum length matches grid");
        Field::from_raw(self.grid.clone(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_arithmetic() {
        let g = make_grid(1, 16.0, 8).unwrap();
        assert_eq!(g.dx(), 4.0);
        let expect: Vec<f64> = [0, 1, 2, 3, -4, -3, -2, -1].iter().map(|&k| PI / 16.0 * k as f64).collect();
        assert_eq!(g.freqs(), expect.as_slice());

        let g = make_grid(1, PI, 8).unwrap();
        let ks: Vec<f64> = g.freqs().iter().map(|x| x.round()).collect();
        for (a, b) in g.freqs().iter().zip(&ks) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(ks, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);

        let g = make_grid(2, 8.0, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.dx(), 1.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(1, 1.0, 7).is_err());
        assert!(make_grid(1, 1.0, 4).is_err());
        assert!(make_grid(1, 1.0, 12).is_err());
        assert!(make_grid(1, 0.0, 8).is_err());
        assert!(make_grid(1, -1.0, 8).is_err());
        assert!(make_grid(3, 1.0, 8).is_err());
    }

    #[test]
    fn constant_goes_to_zero_mode() {
        for dim in [1, 2] {
            let g = make_grid(dim, 3.0, 16).unwrap();
            let f = Field::constant(g.clone(), 2.5);
            let s = transform(&f);
            assert!((s.zero_mode().re - 2.5 * g.volume()).abs() < 1e-12);
            for c in &s.coeffs()[1..] {
                assert!(c.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_has_two_coefficients() {
        let g = make_grid(1, 5.0, 32).unwrap();
        let xi = g.freqs()[3];
        let f = Field::from_fn(g.clone(), |x| (xi * x[0]).cos()).unwrap();
        let s = transform(&f);
        for (j, c) in s.coeffs().iter().enumerate() {
            if j == 3 || j == 32 - 3 {
                // continuum value: L for each of the two deltas
                assert!((c.re - 5.0).abs() < 1e-12, "{c}");
            } else {
                assert!(c.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coefficients_match_riemann_sum_definition() {
        let g = make_grid(2, 2.0, 8).unwrap();
        let f = Field::from_fn(g.clone(), |x| (x[0] - 0.3 * x[1]).sin() + x[1] * x[1]).unwrap();
        let s = transform(&f);
        for k in [0usize, 5, 17, 40, 63] {
            let [a, b] = g.wavevector(k);
            let mut direct = Complex64::new(0.0, 0.0);
            for i in 0..g.len() {
                let [x, y] = g.point(i);
                direct += f.values()[i] * Complex64::from_polar(1.0, -(a * x + b * y));
            }
            direct *= g.cell_volume();
            assert!((direct - s.coeffs()[k]).norm() < 1e-12, "{k}: {direct} vs {}", s.coeffs()[k]);
        }
    }

    #[test]
    fn shell_and_neighbours() {
        let g = make_grid(2, 1.0, 8).unwrap();
        assert_eq!(g.shell_key(8 * 7 + 2), 1 + 4);
        assert!(g.is_nyquist(4 * 8 + 1, 0));
        assert!(!g.is_nyquist(4 * 8 + 1, 1));
        assert_eq!(g.neighbour(7, 1, true), 0);
        assert_eq!(g.neighbour(0, 0, false), 56);
    }
}
