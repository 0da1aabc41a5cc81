//! Zero-rate Black-Scholes call pricing, Greeks and implied-volatility inversion.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

use crate::error::{HedgeError, Result};

/// Standard normal cumulative distribution function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsInputs {
    pub spot: f64,
    pub strike: f64,
    pub vol: f64,
    pub tau: f64,
}

impl BsInputs {
    pub fn new(spot: f64, strike: f64, vol: f64, tau: f64) -> Self {
        Self {
            spot,
            strike,
            vol,
            tau,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(HedgeError::domain(format!("spot must be positive, got {}", self.spot)));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(HedgeError::domain(format!(
                "strike must be positive, got {}",
                self.strike
            )));
        }
        if !(self.vol >= 0.0 && self.vol.is_finite()) {
            return Err(HedgeError::domain(format!("vol must be nonnegative, got {}", self.vol)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(HedgeError::domain(format!("tau must be nonnegative, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greeks {
    pub price: f64,
    pub delta: f64,
    pub vega: f64,
    pub d_plus: f64,
    pub d_minus: f64,
}

/// Call price, Delta, Vega and the `d±` terms.
///
/// When `vol·√tau` vanishes the intrinsic-value limit is returned, with the
/// at-the-money Delta set to one half.
pub fn greeks(inp: BsInputs) -> Result<Greeks> {
    inp.validate()?;
    Ok(greeks_unchecked(inp.spot, inp.strike, inp.vol, inp.tau))
}

/// [`greeks`] without input validation, for the simulation hot loop.
#[inline]
pub(crate) fn greeks_unchecked(spot: f64, strike: f64, vol: f64, tau: f64) -> Greeks {
    let total = vol * tau.sqrt();
    if total == 0.0 {
        let (delta, d) = if spot > strike {
            (1.0, f64::INFINITY)
        } else if spot < strike {
            (0.0, f64::NEG_INFINITY)
        } else {
            (0.5, 0.0)
        };
        return Greeks {
            price: (spot - strike).max(0.0),
            delta,
            vega: 0.0,
            d_plus: d,
            d_minus: d,
        };
    }
    let d_plus = (spot / strike).ln() / total + 0.5 * total;
    let d_minus = d_plus - total;
    let delta = norm_cdf(d_plus);
    let price = spot * delta - strike * norm_cdf(d_minus);
    Greeks {
        // Clamp rounding noise into the no-arbitrage band.
        price: price.max((spot - strike).max(0.0)).min(spot),
        delta,
        vega: spot * norm_pdf(d_plus) * tau.sqrt(),
        d_plus,
        d_minus,
    }
}

const IV_LOWER: f64 = 1e-8;
const IV_UPPER: f64 = 5.0;
const IV_MAX_ITER: usize = 100;
const IV_PRICE_TOL: f64 = 1e-14;

/// Inverts the call price for Black-Scholes volatility.
///
/// Safeguarded Newton iteration on Vega inside a shrinking bracket, falling
/// back to bisection whenever the Newton step leaves the bracket.
pub fn implied_vol(price: f64, spot: f64, strike: f64, tau: f64) -> Result<f64> {
    BsInputs::new(spot, strike, 0.0, tau).validate()?;
    if tau <= 0.0 {
        return Err(HedgeError::domain("implied vol needs tau > 0"));
    }
    let intrinsic = (spot - strike).max(0.0);
    if !(price > intrinsic && price < spot) {
        return Err(HedgeError::domain(format!(
            "price {price} outside ({intrinsic}, {spot})"
        )));
    }
    let value = |v: f64| greeks_unchecked(spot, strike, v, tau);

    let mut lo = IV_LOWER;
    if value(lo).price >= price {
        lo = 0.0;
    }
    let mut hi = IV_UPPER;
    while value(hi).price <= price {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(HedgeError::numeric(format!(
                "price {price} not bracketed by vol <= {hi}"
            )));
        }
    }

    let mut vol = 0.5 * (lo + hi);
    for _ in 0..IV_MAX_ITER {
        let g = value(vol);
        let diff = g.price - price;
        if diff.abs() <= IV_PRICE_TOL {
            return Ok(vol);
        }
        if diff > 0.0 {
            hi = vol;
        } else {
            lo = vol;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = vol - diff / g.vega;
        vol = if g.vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let residual = (value(vol).price - price).abs();
    if residual <= 1e-10 {
        Ok(vol)
    } else {
        Err(HedgeError::numeric(format!(
            "implied vol did not converge, residual {residual:e}"
        )))
    }
}
