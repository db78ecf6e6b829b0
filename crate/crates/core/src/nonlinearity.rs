//! Mobility families `G'` and their energy companions `ψ`, `Ψ`, `φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `u^{m-1}`
    Power,
    /// `(u + μ)^{m-1}`
    ShiftedPower,
    /// `1 / (1 + u)`
    LogMobility,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default)]
    pub mu: f64,
}

fn default_m() -> f64 {
    2.0
}

impl NonlinearitySpec {
    pub fn power(m: f64) -> Result<Self> {
        let spec = NonlinearitySpec { kind: NonlinearityKind::Power, m, mu: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn shifted_power(m: f64, mu: f64) -> Result<Self> {
        let spec = NonlinearitySpec { kind: NonlinearityKind::ShiftedPower, m, mu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn log_mobility() -> Self {
        NonlinearitySpec { kind: NonlinearityKind::LogMobility, m: 2.0, mu: 0.0 }
    }

    /// `m = 1` is accepted for the power kinds and gives the linear equation.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NonlinearityKind::Power | NonlinearityKind::ShiftedPower => {
                if !(self.m >= 1.0 && self.m.is_finite()) {
                    return Err(Error::InvalidNonlinearity(format!("m must be >= 1, got {}", self.m)));
                }
            }
            NonlinearityKind::LogMobility => {}
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidNonlinearity(format!("mu must be >= 0, got {}", self.mu)));
        }
        if self.kind == NonlinearityKind::Power && self.mu != 0.0 {
            return Err(Error::InvalidNonlinearity("power mobility requires mu = 0; use shifted_power".into()));
        }
        if self.kind == NonlinearityKind::LogMobility && self.mu != 0.0 {
            return Err(Error::InvalidNonlinearity("log_mobility takes no shift".into()));
        }
        Ok(())
    }

    /// `G'(u)` without the sign check. Callers guarantee `u >= 0`.
    #[inline]
    pub fn mobility_unchecked(&self, u: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Power => {
                if self.m == 1.0 {
                    1.0
                } else {
                    u.powf(self.m - 1.0)
                }
            }
            NonlinearityKind::ShiftedPower => {
                if self.m == 1.0 {
                    1.0
                } else {
                    (u + self.mu).powf(self.m - 1.0)
                }
            }
            NonlinearityKind::LogMobility => 1.0 / (1.0 + u),
        }
    }

    pub fn mobility(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::InvalidArgument(format!("mobility needs u >= 0, got {u}")));
        }
        Ok(self.mobility_unchecked(u))
    }

    /// `G''(u)`; infinite at `u = 0` for `1 < m < 2` without shift.
    pub fn mobility_derivative(&self, u: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Power | NonlinearityKind::ShiftedPower => {
                if self.m == 1.0 {
                    0.0
                } else {
                    let base = u + if self.kind == NonlinearityKind::ShiftedPower { self.mu } else { 0.0 };
                    (self.m - 1.0) * base.powf(self.m - 2.0)
                }
            }
            NonlinearityKind::LogMobility => -1.0 / ((1.0 + u) * (1.0 + u)),
        }
    }

    /// True when `G'(0) = 0`, so the flux vanishes where `u` does.
    pub fn degenerate(&self) -> bool {
        self.kind == NonlinearityKind::Power && self.m > 1.0
    }
}

/// `G'(u)` for a validated spec; rejects negative `u`.
pub fn mobility(u: f64, spec: &NonlinearitySpec) -> Result<f64> {
    spec.mobility(u)
}

const PSI_TOL: f64 = 1e-10;

/// `ψ(z) = ∫₀^z ζ^{p-2} G'(ζ) dζ` and `Ψ(z) = ∫₀^z ζ^{(p-2)/2} √G'(ζ) dζ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyFunctions {
    pub p: f64,
    pub spec: NonlinearitySpec,
}

impl EnergyFunctions {
    pub fn new(p: f64, spec: NonlinearitySpec) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("L^p index must be > 1, got {p}")));
        }
        spec.validate()?;
        Ok(EnergyFunctions { p, spec })
    }

    fn closed_form(&self) -> bool {
        self.spec.kind == NonlinearityKind::Power || (self.spec.kind == NonlinearityKind::ShiftedPower && self.spec.mu == 0.0)
    }

    pub fn psi(&self, z: f64) -> Result<f64> {
        check_arg(z)?;
        if z == 0.0 {
            return Ok(0.0);
        }
        let (p, m) = (self.p, self.spec.m);
        if self.closed_form() {
            return Ok(z.powf(m + p - 2.0) / (m + p - 2.0));
        }
        // ζ = z t^{1/(p-1)} removes the ζ^{p-2} endpoint behaviour
        let e = 1.0 / (p - 1.0);
        let f = |t: f64| self.spec.mobility_unchecked(z * t.powf(e));
        let q = integrate(f, 0.0, 1.0, Tolerance::relative(PSI_TOL), 4000)?;
        Ok(z.powf(p - 1.0) / (p - 1.0) * q.value)
    }

    pub fn big_psi(&self, z: f64) -> Result<f64> {
        check_arg(z)?;
        if z == 0.0 {
            return Ok(0.0);
        }
        let (p, m) = (self.p, self.spec.m);
        if self.closed_form() {
            return Ok(2.0 * z.powf((m + p - 1.0) / 2.0) / (m + p - 1.0));
        }
        let e = 2.0 / p;
        let f = |t: f64| self.spec.mobility_unchecked(z * t.powf(e)).sqrt();
        let q = integrate(f, 0.0, 1.0, Tolerance::relative(PSI_TOL), 4000)?;
        Ok(2.0 / p * z.powf(p / 2.0) * q.value)
    }
}

fn check_arg(z: f64) -> Result<()> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::InvalidArgument(format!("energy functions need finite z >= 0, got {z}")));
    }
    Ok(())
}

/// `(ψ(z), Ψ(z))` for the shifted power `(ζ + μ)^{m-1}`.
pub fn psi_pair(z: f64, p: f64, m: f64, mu: f64) -> Result<(f64, f64)> {
    let spec = if mu == 0.0 { NonlinearitySpec::power(m)? } else { NonlinearitySpec::shifted_power(m, mu)? };
    let e = EnergyFunctions::new(p, spec)?;
    Ok((e.psi(z)?, e.big_psi(z)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstEnergyBranch {
    /// `u^{3-m}`
    Power,
    /// `u log u`, for `m = 2`
    ULogU,
    /// `u - log u`, for `m = 3`
    UMinusLogU,
}

impl FirstEnergyBranch {
    pub fn for_m(m: f64) -> Self {
        if m == 2.0 {
            FirstEnergyBranch::ULogU
        } else if m == 3.0 {
            FirstEnergyBranch::UMinusLogU
        } else {
            FirstEnergyBranch::Power
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FirstEnergyBranch::Power => "power",
            FirstEnergyBranch::ULogU => "u_log_u",
            FirstEnergyBranch::UMinusLogU => "u_minus_log_u",
        }
    }
}

/// First-energy density; `+∞` marks `u = 0` where the branch blows up.
pub fn first_energy_density(u: f64, m: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidArgument(format!("first energy needs u >= 0, got {u}")));
    }
    Ok(match FirstEnergyBranch::for_m(m) {
        FirstEnergyBranch::ULogU => {
            if u == 0.0 {
                0.0
            } else {
                u * u.ln()
            }
        }
        FirstEnergyBranch::UMinusLogU => {
            if u == 0.0 {
                f64::INFINITY
            } else {
                u - u.ln()
            }
        }
        FirstEnergyBranch::Power => {
            if u == 0.0 {
                if m < 3.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                u.powf(3.0 - m)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobility_values() {
        assert_eq!(mobility(0.0, &NonlinearitySpec::power(2.0).unwrap()).unwrap(), 0.0);
        assert_eq!(mobility(0.0, &NonlinearitySpec::shifted_power(2.0, 1.0).unwrap()).unwrap(), 1.0);
        assert_eq!(mobility(1.0, &NonlinearitySpec::log_mobility()).unwrap(), 0.5);
        assert!(mobility(-1.0, &NonlinearitySpec::log_mobility()).is_err());
        assert!(NonlinearitySpec::power(0.5).is_err());
        assert!(NonlinearitySpec { kind: NonlinearityKind::Power, m: 2.0, mu: 0.1 }.validate().is_err());
    }

    #[test]
    fn closed_forms() {
        let (a, b) = psi_pair(1.0, 2.0, 2.0, 0.0).unwrap();
        assert!((a - 0.5).abs() < 1e-15 && (b - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(psi_pair(0.0, 3.0, 2.5, 0.4).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn shifted_against_riemann_oracle() {
        // midpoint rule with 10⁶ cells on the original integrals
        let (z, p, m, mu) = (2.0, 2.0, 3.0, 0.5);
        let n = 1_000_000;
        let h = z / n as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            a += x.powf(p - 2.0) * (x + mu).powf(m - 1.0);
            b += x.powf((p - 2.0) / 2.0) * (x + mu).powf((m - 1.0) / 2.0);
        }
        let (psi, big) = psi_pair(z, p, m, mu).unwrap();
        assert!(((psi - a * h) / psi).abs() < 1e-8, "{psi} vs {}", a * h);
        assert!(((big - b * h) / big).abs() < 1e-8, "{big} vs {}", b * h);
        // exact: ∫₀²(x+½)² = 31/6, ∫₀²(x+½) = 3
        assert!((psi - 31.0 / 6.0).abs() < 1e-9);
        assert!((big - 3.0).abs() < 1e-9);
    }

    #[test]
    fn mu_to_zero_continuity() {
        for &(p, m) in &[(2.0, 2.0), (3.0, 1.5), (1.5, 3.5)] {
            let e0 = EnergyFunctions::new(p, NonlinearitySpec::power(m).unwrap()).unwrap();
            let e1 = EnergyFunctions::new(p, NonlinearitySpec::shifted_power(m, 1e-8).unwrap()).unwrap();
            for i in 1..=20 {
                let z = 0.5 * i as f64;
                let (a, b) = (e0.psi(z).unwrap(), e1.psi(z).unwrap());
                assert!(((a - b) / a).abs() < 1e-6);
                let (a, b) = (e0.big_psi(z).unwrap(), e1.big_psi(z).unwrap());
                assert!(((a - b) / a).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn first_energy_branches() {
        assert_eq!(first_energy_density(1.0, 2.0).unwrap(), 0.0);
        assert_eq!(first_energy_density(1.0, 3.0).unwrap(), 1.0);
        assert_eq!(first_energy_density(4.0, 2.5).unwrap(), 2.0);
        assert_eq!(first_energy_density(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(first_energy_density(0.0, 2.5).unwrap(), 0.0);
        assert!(first_energy_density(0.0, 3.0).unwrap().is_infinite());
        assert!(first_energy_density(0.0, 3.5).unwrap().is_infinite());
    }
}
