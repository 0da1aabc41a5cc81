//! Rough Bergomi smile `Σ̂ = U f(Y)`, `Y = (κ(T-t)/U) log(K/S)`.
//!
//! `f` is taken from the interpolation between the two explicitly solvable
//! endpoints `H = 0` and `H = 1/2`:
//!
//! ```text
//! G_H(y) = (2H+1)² (c0 G0(y/(2H+1)) + c½ G½(2y/(2H+1)))
//! c0 = 3(1-2H)/(2H+3),  c½ = 2H/(2H+3)
//! f(y) = |y| / √G_H(y)
//! ```

use super::{from_g, sabr, SmileSeries, SmileState, SERIES_EPS};
use crate::error::{HedgeError, Result};
use crate::model::{check_rho, OptionSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughSmileParams {
    pub rho: f64,
    pub eta: f64,
    pub hurst: f64,
}

impl RoughSmileParams {
    pub fn new(rho: f64, eta: f64, hurst: f64) -> Result<Self> {
        check_rho(rho)?;
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(HedgeError::domain(format!("eta must be nonnegative, got {eta}")));
        }
        if !(0.0..=0.5).contains(&hurst) {
            return Err(HedgeError::domain(format!("hurst must lie in [0, 1/2], got {hurst}")));
        }
        Ok(Self { rho, eta, hurst })
    }
}

/// Power-law kernel `κ(r) = η √(2H) r^(H - 1/2)`.
pub fn kernel(r: f64, p: &RoughSmileParams) -> Result<f64> {
    if r < 0.0 || (r == 0.0 && p.hurst < 0.5) || r.is_nan() {
        return Err(HedgeError::domain(format!("kernel needs r > 0, got {r}")));
    }
    Ok(kernel_unchecked(r, p.eta, p.hurst))
}

#[inline]
pub(crate) fn kernel_unchecked(r: f64, eta: f64, hurst: f64) -> f64 {
    if hurst == 0.5 {
        eta
    } else if hurst == 0.0 {
        0.0
    } else {
        eta * (2.0 * hurst).sqrt() * r.powf(hurst - 0.5)
    }
}

fn check_open_rho(rho: f64) -> Result<()> {
    if !(rho.abs() < 1.0) {
        return Err(HedgeError::domain(format!("smile needs |rho| < 1, got {rho}")));
    }
    Ok(())
}

/// Below this |y| `G0` is summed from its power series.
const G0_SERIES_LIMIT: f64 = 0.25;
const G0_SERIES_TERMS: usize = 48;

/// `G0(y) = Σ 2 U_n(-ρ) y^(n+2) / (n+2)`, with `U_n` the Chebyshev
/// polynomials of the second kind (the expansion of `2y/(1 + 2ρy + y²)`).
fn g0_series(y: f64, rho: f64) -> f64 {
    let x = -rho;
    let (mut u_prev, mut u) = (0.0, 1.0);
    let mut pow = y * y;
    let mut acc = 0.0;
    for n in 0..G0_SERIES_TERMS {
        acc += 2.0 * u * pow / (n as f64 + 2.0);
        let next = 2.0 * x * u - u_prev;
        u_prev = u;
        u = next;
        pow *= y;
    }
    acc
}

#[inline]
fn g0_unchecked(y: f64, rho: f64) -> f64 {
    if y.abs() < G0_SERIES_LIMIT {
        return g0_series(y, rho);
    }
    let s = (1.0 - rho * rho).sqrt();
    // arctan(ρ/s) - arctan((y+ρ)/s) folded into a single atan2
    let arctan_diff = (-y * s).atan2(1.0 + rho * y);
    (2.0 * rho * y + y * y).ln_1p() + 2.0 * rho / s * arctan_diff
}

#[inline]
fn g0_prime_unchecked(y: f64, rho: f64) -> f64 {
    2.0 * y / (1.0 + 2.0 * rho * y + y * y)
}

#[inline]
fn g12_unchecked(y: f64, rho: f64) -> f64 {
    let l = sabr::log_ratio(y, rho);
    4.0 * l * l
}

#[inline]
fn g12_prime_unchecked(y: f64, rho: f64) -> f64 {
    -8.0 * sabr::log_ratio(y, rho) / (4.0 * rho * y + y * y + 4.0).sqrt()
}

/// Endpoint functions `(G0(y), G½(y))`.
#[allow(non_snake_case)]
pub fn G_pair(y: f64, rho: f64) -> Result<(f64, f64)> {
    check_open_rho(rho)?;
    Ok((g0_unchecked(y, rho), g12_unchecked(y, rho)))
}

/// Derivatives `(G0'(y), G½'(y))`.
#[allow(non_snake_case)]
pub fn dG_pair(y: f64, rho: f64) -> Result<(f64, f64)> {
    check_open_rho(rho)?;
    Ok((g0_prime_unchecked(y, rho), g12_prime_unchecked(y, rho)))
}

/// Taylor coefficients of `G0` at zero, orders 3 to 5.
fn g0_coefficients(rho: f64) -> (f64, f64, f64) {
    let r2 = rho * rho;
    (
        -4.0 * rho / 3.0,
        (4.0 * r2 - 1.0) / 2.0,
        -8.0 * rho * (2.0 * r2 - 1.0) / 5.0,
    )
}

/// The interpolated rough smile for fixed `(ρ, H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughSmile {
    params: RoughSmileParams,
    c0: f64,
    c12: f64,
    series: SmileSeries,
}

impl RoughSmile {
    pub fn new(params: RoughSmileParams) -> Result<Self> {
        let p = RoughSmileParams::new(params.rho, params.eta, params.hurst)?;
        let h = p.hurst;
        let c0 = 3.0 * (1.0 - 2.0 * h) / (2.0 * h + 3.0);
        let c12 = 2.0 * h / (2.0 * h + 3.0);

        // b_k = (2H+1)^(2-k) (c0 g0_k + c½ 2^k g½_k)
        let m = 2.0 * h + 1.0;
        let (a3, a4, a5) = g0_coefficients(p.rho);
        let (s3, s4, s5) = sabr::g_squared_coefficients(p.rho);
        let b3 = (c0 * a3 + c12 * 8.0 * s3) / m;
        let b4 = (c0 * a4 + c12 * 16.0 * s4) / (m * m);
        let b5 = (c0 * a5 + c12 * 32.0 * s5) / (m * m * m);

        Ok(Self {
            params: p,
            c0,
            c12,
            series: SmileSeries::from_g_coefficients(b3, b4, b5),
        })
    }

    pub fn params(&self) -> &RoughSmileParams {
        &self.params
    }

    /// Interpolation weights `(c0, c½)`.
    pub fn weights(&self) -> (f64, f64) {
        (self.c0, self.c12)
    }

    /// `f'(0)` of the interpolated smile.
    pub fn atm_slope(&self) -> f64 {
        self.series.slope()
    }

    #[allow(non_snake_case)]
    pub fn GH(&self, y: f64) -> f64 {
        let m = 2.0 * self.params.hurst + 1.0;
        let rho = self.params.rho;
        let mut acc = 0.0;
        if self.c0 != 0.0 {
            acc += self.c0 * g0_unchecked(y / m, rho);
        }
        if self.c12 != 0.0 {
            acc += self.c12 * g12_unchecked(2.0 * y / m, rho);
        }
        m * m * acc
    }

    #[allow(non_snake_case)]
    pub fn GH_prime(&self, y: f64) -> f64 {
        let m = 2.0 * self.params.hurst + 1.0;
        let rho = self.params.rho;
        let mut acc = 0.0;
        if self.c0 != 0.0 {
            acc += self.c0 / m * g0_prime_unchecked(y / m, rho);
        }
        if self.c12 != 0.0 {
            acc += 2.0 * self.c12 / m * g12_prime_unchecked(2.0 * y / m, rho);
        }
        m * m * acc
    }

    /// `(f, F1, F2)` at `y`.
    #[inline]
    pub fn f_f1_f2(&self, y: f64) -> (f64, f64, f64) {
        if y.abs() < SERIES_EPS {
            return self.series.eval(y);
        }
        from_g(y, self.GH(y), self.GH_prime(y))
    }

    #[inline]
    pub(crate) fn state_unchecked(&self, tau: f64, spot: f64, u: f64, strike: f64) -> SmileState {
        let k = kernel_unchecked(tau, self.params.eta, self.params.hurst);
        let y = if u > 0.0 { k / u * (strike / spot).ln() } else { 0.0 };
        let (f, f1, f2) = self.f_f1_f2(y);
        SmileState {
            y,
            sigma_hat: u * f,
            f,
            f1,
            f2,
        }
    }
}

/// `G_H` for one-off evaluations.
#[allow(non_snake_case)]
pub fn GH(y: f64, p: &RoughSmileParams) -> Result<f64> {
    check_open_rho(p.rho)?;
    Ok(RoughSmile::new(*p)?.GH(y))
}

#[allow(non_snake_case)]
pub fn GH_prime(y: f64, p: &RoughSmileParams) -> Result<f64> {
    check_open_rho(p.rho)?;
    Ok(RoughSmile::new(*p)?.GH_prime(y))
}

#[allow(non_snake_case)]
pub fn f_F1_F2_rough(y: f64, p: &RoughSmileParams) -> Result<(f64, f64, f64)> {
    check_open_rho(p.rho)?;
    Ok(RoughSmile::new(*p)?.f_f1_f2(y))
}

/// Forward-variance curve `s ↦ ξ_t(s)` on an increasing grid, linearly
/// interpolated between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCurve {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl ForwardCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(HedgeError::domain(format!(
                "forward curve needs matching non-empty grids, got {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HedgeError::domain("forward curve times must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(HedgeError::domain("forward variances must be positive and finite"));
        }
        Ok(Self { times, values })
    }

    pub fn flat(level: f64, start: f64, end: f64) -> Result<Self> {
        Self::new(vec![start, end], vec![level, level])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation, flat beyond the end nodes.
    pub fn value_at(&self, s: f64) -> f64 {
        let t = &self.times;
        if s <= t[0] {
            return self.values[0];
        }
        if s >= t[t.len() - 1] {
            return self.values[t.len() - 1];
        }
        let j = t.partition_point(|&x| x <= s);
        let (t0, t1) = (t[j - 1], t[j]);
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        v0 + (v1 - v0) * (s - t0) / (t1 - t0)
    }

    /// Nodes restricted to `[t, T]`, with `t` and `T` inserted as nodes.
    fn nodes_on(&self, t: f64, maturity: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let tol = 1e-12 * maturity.abs().max(1.0);
        let last = self.times[self.times.len() - 1];
        if last < maturity - tol {
            return Err(HedgeError::domain(format!(
                "forward curve ends at {last}, before maturity {maturity}"
            )));
        }
        let mut s = vec![t];
        let mut v = vec![self.value_at(t)];
        for (&ti, &vi) in self.times.iter().zip(&self.values) {
            if ti > t + tol && ti < maturity - tol {
                s.push(ti);
                v.push(vi);
            }
        }
        s.push(maturity);
        v.push(self.value_at(maturity));
        Ok((s, v))
    }
}

/// Smile state of the rough Bergomi approximation plus the diagnostics
/// `U_t` and the exact ratio `R_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughState {
    pub u: f64,
    pub r_exact: f64,
    pub y: f64,
    pub sigma_hat: f64,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Trapezoidal mean of a uniformly spaced slice.
#[inline]
pub(crate) fn uniform_slice_mean(slice: &[f64]) -> f64 {
    let n = slice.len() - 1;
    debug_assert!(n >= 1);
    let interior: f64 = slice[1..n].iter().sum();
    (0.5 * (slice[0] + slice[n]) + interior) / n as f64
}

/// `U_t`, `R_t` and the smile at time `t`.
///
/// `R_t` is integrated with the kernel treated exactly on every
/// sub-interval and `ξ` replaced by its node average, so the `r^(H-1/2)`
/// singularity at `s = t` never enters a quadrature node.
#[allow(non_snake_case)]
pub fn U_R_Y(
    t: f64,
    spot: f64,
    curve: &ForwardCurve,
    opt: &OptionSpec,
    p: &RoughSmileParams,
) -> Result<RoughState> {
    let maturity = opt.maturity;
    if !(t < maturity) {
        return Err(HedgeError::domain(format!("need t < T, got t={t} T={maturity}")));
    }
    if !(spot > 0.0) {
        return Err(HedgeError::domain(format!("spot must be positive, got {spot}")));
    }
    let smile = RoughSmile::new(*p)?;
    let (s, v) = curve.nodes_on(t, maturity)?;
    let tau = maturity - t;

    let mut integral = 0.0;
    let mut weighted = 0.0;
    let e = p.hurst + 0.5;
    for i in 0..s.len() - 1 {
        let mean = 0.5 * (v[i] + v[i + 1]);
        let width = s[i + 1] - s[i];
        integral += mean * width;
        // ∫ (s-t)^(H-1/2) ds over the sub-interval
        let kint = ((s[i + 1] - t).powf(e) - (s[i] - t).powf(e)) / e;
        weighted += mean * kint;
    }
    let u = (integral / tau).sqrt();
    let r_exact = weighted / (tau.powf(p.hurst - 0.5) * integral);

    let st = smile.state_unchecked(tau, spot, u, opt.strike);
    Ok(RoughState {
        u,
        r_exact,
        y: st.y,
        sigma_hat: st.sigma_hat,
        f: st.f,
        f1: st.f1,
        f2: st.f2,
    })
}
