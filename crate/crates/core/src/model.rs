//! Model and contract parameters shared by the simulator and the hedging engine.

use std::fmt;

use crate::error::{HedgeError, Result};
use crate::smile::rough::ForwardCurve;

/// Largest admissible |ρ|. The smile formulas divide by `1 - ρ` and
/// `√(1 - ρ²)`, so the endpoints themselves are excluded.
pub const RHO_GUARD: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelFamily {
    Sabr,
    RoughBergomi,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sabr => "sabr",
            Self::RoughBergomi => "rough",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Lognormal SABR (β = 1) or rough Bergomi parameters.
///
/// `eta` is the vol-of-vol in the rough Bergomi normalisation: the SABR
/// volatility diffuses as `dα = (η/2) α dW`, the rough kernel is
/// `κ(r) = η √(2H) r^(H - 1/2)`. `hurst` is ignored by the SABR family.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub family: ModelFamily,
    pub eta: f64,
    pub alpha0: f64,
    pub rho: f64,
    pub hurst: f64,
    /// Initial forward-variance curve ξ₀(·); `None` means flat at α₀².
    pub initial_curve: Option<ForwardCurve>,
}

impl ModelParams {
    pub fn sabr(eta: f64, alpha0: f64, rho: f64) -> Result<Self> {
        let p = Self {
            family: ModelFamily::Sabr,
            eta,
            alpha0,
            rho,
            hurst: 0.5,
            initial_curve: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn rough(eta: f64, alpha0: f64, rho: f64, hurst: f64) -> Result<Self> {
        let p = Self {
            family: ModelFamily::RoughBergomi,
            eta,
            alpha0,
            rho,
            hurst,
            initial_curve: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_initial_curve(mut self, curve: ForwardCurve) -> Result<Self> {
        self.alpha0 = curve.value_at(0.0).sqrt();
        self.initial_curve = Some(curve);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(HedgeError::domain(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(HedgeError::domain(format!(
                "alpha0 must be positive, got {}",
                self.alpha0
            )));
        }
        check_rho(self.rho)?;
        if !(0.0..=0.5).contains(&self.hurst) {
            return Err(HedgeError::domain(format!(
                "hurst must lie in [0, 1/2], got {}",
                self.hurst
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() <= RHO_GUARD) {
        return Err(HedgeError::domain(format!(
            "|rho| must not exceed {RHO_GUARD}, got {rho}"
        )));
    }
    Ok(())
}

/// European call on the spot, zero rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
    pub spot0: f64,
}

impl OptionSpec {
    pub fn new(strike: f64, maturity: f64, spot0: f64) -> Result<Self> {
        if !(strike > 0.0 && maturity > 0.0 && spot0 > 0.0) {
            return Err(HedgeError::domain(format!(
                "option needs positive strike, maturity and spot, got K={strike} T={maturity} S0={spot0}"
            )));
        }
        Ok(Self {
            strike,
            maturity,
            spot0,
        })
    }

    pub fn payoff(&self, spot: f64) -> f64 {
        (spot - self.strike).max(0.0)
    }
}
