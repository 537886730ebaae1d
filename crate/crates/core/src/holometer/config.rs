use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, HoloError, Result};

/// Input-state family of the holometer.
///
/// Every family drives the `b` ports with coherent light. The `a` ports carry
/// vacuum (`Cl`), two independent squeezed vacua (`Sq`) or one twin beam
/// shared between the two interferometers (`Twb`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Cl,
    Sq,
    Twb,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Cl, Family::Sq, Family::Twb];

    /// Best working point: `π/2` for coherent and squeezed inputs, `0` for twin beams.
    pub fn default_phi0(self) -> f64 {
        match self {
            Family::Cl | Family::Sq => FRAC_PI_2,
            Family::Twb => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Cl => "CL",
            Family::Sq => "SQ",
            Family::Twb => "TWB",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CL" => Ok(Family::Cl),
            "SQ" => Ok(Family::Sq),
            "TWB" => Ok(Family::Twb),
            _ => domain(format!("unknown family {s:?}; expected CL, SQ or TWB")),
        }
    }
}

/// Physical parameters of one holometer run.
///
/// `mu` is the coherent mean photon number per interferometer, `lambda` the
/// mean photon number of each squeezed (or twin-beam) mode. `theta_alpha` is
/// the coherent phase and `theta_sq` the squeezing phase. Both interferometers
/// share the same efficiency `eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolometerConfig {
    pub family: Family,
    pub mu: f64,
    pub lambda: f64,
    pub theta_alpha: f64,
    pub theta_sq: f64,
    pub phi0_1: f64,
    pub phi0_2: f64,
    pub eta: f64,
}

impl HolometerConfig {
    /// Lossless configuration at the family's default working point with
    /// aligned phases.
    pub fn new(family: Family, mu: f64, lambda: f64) -> Result<Self> {
        let phi0 = family.default_phi0();
        let cfg = Self {
            family,
            mu,
            lambda,
            theta_alpha: 0.0,
            theta_sq: 0.0,
            phi0_1: phi0,
            phi0_2: phi0,
            eta: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Coherent-only baseline.
    pub fn classical(mu: f64) -> Result<Self> {
        Self::new(Family::Cl, mu, 0.0)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_phi0(mut self, phi0: f64) -> Result<Self> {
        self.phi0_1 = phi0;
        self.phi0_2 = phi0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_thetas(mut self, theta_alpha: f64, theta_sq: f64) -> Result<Self> {
        self.theta_alpha = theta_alpha;
        self.theta_sq = theta_sq;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return domain(format!("mu must be finite and >= 0, got {}", self.mu));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return domain(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return domain(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if self.family == Family::Cl && self.lambda != 0.0 {
            return domain(format!("family CL requires lambda = 0, got {}", self.lambda));
        }
        for (name, v) in [
            ("theta_alpha", self.theta_alpha),
            ("theta_sq", self.theta_sq),
            ("phi0_1", self.phi0_1),
            ("phi0_2", self.phi0_2),
        ] {
            if !v.is_finite() {
                return domain(format!("{name} must be finite, got {v}"));
            }
        }
        Ok(())
    }
}

/// Radiation-pressure parameters: measurement time `tau` (s), mirror mass
/// `mass` (kg) and angular frequency `omega` (rad/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiationPressureParams {
    pub tau: f64,
    pub mass: f64,
    pub omega: f64,
}

impl RadiationPressureParams {
    pub const HBAR: f64 = 1.0546e-34;
    pub const C: f64 = 2.998e8;

    pub fn new(tau: f64, mass: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("tau", tau), ("mass", mass), ("omega", omega)] {
            if !(v > 0.0) || !v.is_finite() {
                return domain(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        Ok(Self { tau, mass, omega })
    }

    /// `ħ ω² τ / (c² m)`: phase shift per photon of arm imbalance.
    pub fn r_inv(&self) -> f64 {
        Self::HBAR * self.omega * self.omega * self.tau / (Self::C * Self::C * self.mass)
    }

    /// `R = 1 / r_inv`.
    pub fn r(&self) -> f64 {
        1.0 / self.r_inv()
    }
}

impl Default for RadiationPressureParams {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            mass: 100.0,
            omega: 3.14e15,
        }
    }
}
