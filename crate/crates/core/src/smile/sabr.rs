//! Hagan's lognormal SABR smile `Σ̂ = α f(Y)`, `Y = (η/α) log(K/S)`.

use super::{SmileSeries, SmileState, SERIES_EPS};
use crate::error::{HedgeError, Result};
use crate::model::{check_rho, OptionSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SabrSmileParams {
    pub rho: f64,
    pub eta: f64,
}

impl SabrSmileParams {
    /// `eta = 0` is accepted and gives the flat Black-Scholes smile.
    pub fn new(rho: f64, eta: f64) -> Result<Self> {
        check_rho(rho)?;
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(HedgeError::domain(format!("eta must be nonnegative, got {eta}")));
        }
        Ok(Self { rho, eta })
    }
}

fn check_open_rho(rho: f64) -> Result<()> {
    if !(rho.abs() < 1.0) {
        return Err(HedgeError::domain(format!("smile needs |rho| < 1, got {rho}")));
    }
    Ok(())
}

/// Taylor coefficients of `g(y)²` at zero, orders 3 to 5 (order 2 is 1).
///
/// Obtained by squaring `g(y) = ∫₀^y du / √(1 + ρu + u²/4)`.
pub(crate) fn g_squared_coefficients(rho: f64) -> (f64, f64, f64) {
    let r2 = rho * rho;
    (
        -rho / 2.0,
        (15.0 * r2 - 4.0) / 48.0,
        -rho * (21.0 * r2 - 11.0) / 96.0,
    )
}

pub(crate) fn series(rho: f64) -> SmileSeries {
    let (b3, b4, b5) = g_squared_coefficients(rho);
    SmileSeries::from_g_coefficients(b3, b4, b5)
}

/// `log` of the argument of Hagan's logarithm,
/// `(√(1 + ρy + y²/4) - ρ - y/2) / (1 - ρ)`.
#[inline]
pub(crate) fn log_ratio(y: f64, rho: f64) -> f64 {
    let q = 1.0 + rho * y + 0.25 * y * y;
    let sq = q.sqrt();
    // ratio - 1 without the cancellation in √q - 1
    let shifted = ((rho * y + 0.25 * y * y) / (sq + 1.0) - 0.5 * y) / (1.0 - rho);
    if shifted.abs() < 0.5 {
        return shifted.ln_1p();
    }
    let t = rho + 0.5 * y;
    let num = if t > 0.0 {
        (1.0 - rho * rho) / (sq + t)
    } else {
        sq - t
    };
    num.ln() - (1.0 - rho).ln()
}

#[inline]
pub(crate) fn g_unchecked(y: f64, rho: f64) -> f64 {
    -2.0 * log_ratio(y, rho)
}

/// Hagan's `g`. Odd under the joint flip `(y, ρ) → (-y, -ρ)` and carries the
/// sign of `y`.
pub fn g(y: f64, rho: f64) -> Result<f64> {
    check_open_rho(rho)?;
    Ok(g_unchecked(y, rho))
}

#[inline]
pub(crate) fn f_f1_f2_unchecked(y: f64, rho: f64) -> (f64, f64, f64) {
    if y.abs() < SERIES_EPS {
        return series(rho).eval(y);
    }
    let f = y / g_unchecked(y, rho);
    let f1 = f * f / (1.0 + rho * y + 0.25 * y * y).sqrt();
    let f2 = 2.0 * (f1 - f) / y;
    (f, f1, f2)
}

/// `f(y) = y / g(y)` with `f(0) = 1`.
pub fn f(y: f64, rho: f64) -> Result<f64> {
    check_open_rho(rho)?;
    Ok(f_f1_f2_unchecked(y, rho).0)
}

/// `(F1, F2)` with `F1 = f - y f'` and `F2 = -2 f'`.
#[allow(non_snake_case)]
pub fn F1_F2(y: f64, rho: f64) -> Result<(f64, f64)> {
    check_open_rho(rho)?;
    let (_, f1, f2) = f_f1_f2_unchecked(y, rho);
    Ok((f1, f2))
}

#[inline]
pub(crate) fn state_unchecked(spot: f64, alpha: f64, strike: f64, p: SabrSmileParams) -> SmileState {
    let y = if alpha > 0.0 {
        p.eta / alpha * (strike / spot).ln()
    } else {
        0.0
    };
    let (f, f1, f2) = f_f1_f2_unchecked(y, p.rho);
    SmileState {
        y,
        sigma_hat: alpha * f,
        f,
        f1,
        f2,
    }
}

/// Smile state at time `t` for spot `spot` and instantaneous vol `alpha`.
pub fn sigma_hat(t: f64, spot: f64, alpha: f64, opt: &OptionSpec, p: SabrSmileParams) -> Result<SmileState> {
    if !(t < opt.maturity) {
        return Err(HedgeError::domain(format!(
            "smile evaluated at t={t} >= maturity {}",
            opt.maturity
        )));
    }
    if !(spot > 0.0 && alpha >= 0.0) {
        return Err(HedgeError::domain(format!(
            "need spot > 0 and alpha >= 0, got S={spot} alpha={alpha}"
        )));
    }
    check_open_rho(p.rho)?;
    Ok(state_unchecked(spot, alpha, opt.strike, p))
}
