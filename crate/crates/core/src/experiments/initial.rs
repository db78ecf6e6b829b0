//! Initial data factory. Every datum is renormalized to its target mass.

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{read_snapshot, Field, Grid};

/// Multiplicative noise `u (1 + amplitude · U(-1, 1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    Gaussian {
        mass: f64,
        sigma: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        noise: Option<Noise>,
    },
    /// `height` on `|x - center|∞ <= half_width`; mass defaults to `height · (2 half_width)^N`.
    Box {
        half_width: f64,
        #[serde(default)]
        height: Option<f64>,
        #[serde(default)]
        mass: Option<f64>,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        noise: Option<Noise>,
    },
    /// A point mass smoothed by the standard bump of radius `mollifier_width`.
    MollifiedDirac {
        mass: f64,
        mollifier_width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    FromFile {
        path: PathBuf,
        #[serde(default)]
        mass: Option<f64>,
    },
}

fn dist2(x: [f64; 2], c: [f64; 2], dim: usize) -> f64 {
    (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum()
}

fn renormalize(field: Field, mass: f64) -> Result<Field> {
    let current = crate::diagnostics::mass(&field);
    if !(current > 0.0) {
        return Err(Error::Config("initial datum has no mass on this grid".into()));
    }
    let factor = mass / current;
    if (factor - 1.0).abs() > 1e-12 {
        log::debug!("initial datum renormalized by factor {factor}");
    }
    field.with_values(field.values().iter().map(|v| v * factor).collect())
}

fn add_noise(field: Field, noise: Option<Noise>) -> Result<Field> {
    let Some(n) = noise else { return Ok(field) };
    if !(n.amplitude >= 0.0 && n.amplitude < 1.0) {
        return Err(Error::Config(format!("noise amplitude must lie in [0,1), got {}", n.amplitude)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
    let vals = field.values().iter().map(|v| v * (1.0 + n.amplitude * rng.gen_range(-1.0..1.0))).collect();
    field.with_values(vals)
}

fn resolved(width: f64, what: &str, grid: &Grid) -> Result<()> {
    if !(width > 2.0 * grid.dx()) {
        return Err(Error::Config(format!("{what} = {width} is not resolved (needs > 2dx = {})", 2.0 * grid.dx())));
    }
    Ok(())
}

fn positive_mass(mass: f64) -> Result<()> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Config(format!("mass must be positive, got {mass}")));
    }
    Ok(())
}

pub fn make_initial(spec: &InitialDataSpec, grid: &Arc<Grid>) -> Result<Field> {
    let dim = grid.dim();
    match spec {
        InitialDataSpec::Gaussian { mass, sigma, center, noise } => {
            positive_mass(*mass)?;
            resolved(*sigma, "sigma", grid)?;
            let c = *center;
            let f = Field::from_fn(grid.clone(), |x| (-dist2(x, c, dim) / (2.0 * sigma * sigma)).exp())?;
            renormalize(add_noise(f, *noise)?, *mass)
        }
        InitialDataSpec::Box { half_width, height, mass, center, noise } => {
            resolved(*half_width, "half_width", grid)?;
            let h = height.unwrap_or(1.0);
            if !(h > 0.0) {
                return Err(Error::Config(format!("box height must be positive, got {h}")));
            }
            let target = mass.unwrap_or(h * (2.0 * half_width).powi(dim as i32));
            positive_mass(target)?;
            let c = *center;
            let f = Field::from_fn(grid.clone(), |x| {
                let inside = (0..dim).all(|a| (x[a] - c[a]).abs() <= *half_width);
                if inside {
                    h
                } else {
                    0.0
                }
            })?;
            renormalize(add_noise(f, *noise)?, target)
        }
        InitialDataSpec::MollifiedDirac { mass, mollifier_width, center } => {
            positive_mass(*mass)?;
            resolved(*mollifier_width, "mollifier_width", grid)?;
            let (c, w) = (*center, *mollifier_width);
            let f = Field::from_fn(grid.clone(), |x| {
                let r2 = dist2(x, c, dim) / (w * w);
                if r2 < 1.0 {
                    (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            })?;
            renormalize(f, *mass)
        }
        InitialDataSpec::FromFile { path, mass } => {
            let (header, values) = read_snapshot(path).map_err(|e| Error::Config(e.to_string()))?;
            if header.dim != dim || header.n != grid.n() || header.half_length != grid.half_length() {
                return Err(Error::Config(format!(
                    "snapshot {} has grid (dim {}, L {}, n {}) but the scenario grid differs",
                    path.display(),
                    header.dim,
                    header.half_length,
                    header.n
                )));
            }
            let f = Field::new(grid.clone(), values).map_err(|e| Error::Config(e.to_string()))?;
            if f.min() < 0.0 {
                return Err(Error::Config("snapshot datum has negative values".into()));
            }
            match mass {
                Some(m) => {
                    positive_mass(*m)?;
                    renormalize(f, *m)
                }
                None => Ok(f),
            }
        }
    }
}
