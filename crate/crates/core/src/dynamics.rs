//! Monte-Carlo paths for lognormal SABR and rough Bergomi on a uniform grid.
//!
//! Every path draws its normals from its own counter-based ChaCha stream
//! keyed by `(seed, path_index)`, so a path is reproducible regardless of
//! which thread simulates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{HedgeError, Result};
use crate::model::{check_rho, ModelParams};
use crate::smile::rough::{kernel_unchecked, uniform_slice_mean};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_steps: usize,
    pub horizon: f64,
}

impl GridSpec {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps < 2 {
            return Err(HedgeError::domain(format!("need at least 2 steps, got {n_steps}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(HedgeError::domain(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { n_steps, horizon })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }
}

/// Identifies the random stream of one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub path_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        Self { seed, path_index }
    }

    fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path_index);
        rng
    }

    /// Pairs `(Z_W, Z_B)` of standard normals with correlation `rho`.
    pub fn normal_pairs(&self, rho: f64) -> NormalPairs {
        NormalPairs {
            rng: self.generator(),
            rho,
            rho_perp: (1.0 - rho * rho).sqrt(),
        }
    }
}

/// Infinite stream of correlated standard normal pairs.
#[derive(Debug, Clone)]
pub struct NormalPairs {
    rng: ChaCha8Rng,
    rho: f64,
    rho_perp: f64,
}

impl Iterator for NormalPairs {
    type Item = (f64, f64);

    #[inline]
    fn next(&mut self) -> Option<(f64, f64)> {
        let zw: f64 = StandardNormal.sample(&mut self.rng);
        let zp: f64 = StandardNormal.sample(&mut self.rng);
        Some((zw, self.rho * zw + self.rho_perp * zp))
    }
}

/// First `n` pairs of the stream, as used by the simulators.
pub fn correlated_normals(rng: RngStream, n: usize, rho: f64) -> Vec<(f64, f64)> {
    rng.normal_pairs(rho).take(n).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SabrPath {
    pub times: Vec<f64>,
    pub spot: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoughPath {
    pub times: Vec<f64>,
    pub spot: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `U_{t_i}`, the root of the trapezoidal mean of the slice `ξ_{t_i}(·)` over `[t_i, T]`.
    pub forward_vol: Vec<f64>,
    /// Full triangle `xi[i][j - i] = ξ_{t_i}(t_j)`, only when requested.
    pub xi: Option<Vec<Vec<f64>>>,
}

/// Borrowed view used by the hedging engine.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub times: &'a [f64],
    pub spot: &'a [f64],
    pub alpha: &'a [f64],
    /// `U_t` for rough paths; `None` for SABR.
    pub forward_vol: Option<&'a [f64]>,
}

impl PathView<'_> {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }
}

impl SabrPath {
    pub fn view(&self) -> PathView<'_> {
        PathView {
            times: &self.times,
            spot: &self.spot,
            alpha: &self.alpha,
            forward_vol: None,
        }
    }
}

impl RoughPath {
    pub fn view(&self) -> PathView<'_> {
        PathView {
            times: &self.times,
            spot: &self.spot,
            alpha: &self.alpha,
            forward_vol: Some(&self.forward_vol),
        }
    }
}

fn check_common(params: &ModelParams, spot0: f64) -> Result<()> {
    params.validate()?;
    check_rho(params.rho)?;
    if !(spot0 > 0.0 && spot0.is_finite()) {
        return Err(HedgeError::domain(format!("spot0 must be positive, got {spot0}")));
    }
    Ok(())
}

fn non_finite(what: &str, step: usize) -> HedgeError {
    HedgeError::numeric(format!("non-finite {what} at step {step}"))
}

/// SABR path with exact exponential-martingale steps for `α` and log-Euler
/// steps for `S`.
pub fn simulate_sabr(params: &ModelParams, spot0: f64, grid: GridSpec, rng: RngStream) -> Result<SabrPath> {
    check_common(params, spot0)?;
    let n = grid.n_steps;
    let dt = grid.dt();
    let sqdt = dt.sqrt();
    let half_eta = 0.5 * params.eta;
    let alpha_drift = params.eta * params.eta * dt / 8.0;

    let mut spot = Vec::with_capacity(n + 1);
    let mut alpha = Vec::with_capacity(n + 1);
    spot.push(spot0);
    alpha.push(params.alpha0);

    for (i, (zw, zb)) in rng.normal_pairs(params.rho).take(n).enumerate() {
        let (s, a) = (spot[i], alpha[i]);
        let s_next = s * (a * zb * sqdt - 0.5 * a * a * dt).exp();
        let a_next = a * (half_eta * zw * sqdt - alpha_drift).exp();
        if !(s_next.is_finite() && s_next > 0.0) {
            return Err(non_finite("spot", i + 1));
        }
        if !(a_next.is_finite() && a_next > 0.0) {
            return Err(non_finite("alpha", i + 1));
        }
        spot.push(s_next);
        alpha.push(a_next);
    }
    Ok(SabrPath {
        times: grid.times(),
        spot,
        alpha,
    })
}

/// Rough Bergomi path by lognormal updates of every forward-variance slice,
/// with the kernel evaluated at the left end of each step.
///
/// Only the current slice is kept unless `keep_surface` is set.
pub fn simulate_rough(
    params: &ModelParams,
    spot0: f64,
    grid: GridSpec,
    rng: RngStream,
    keep_surface: bool,
) -> Result<RoughPath> {
    check_common(params, spot0)?;
    if !(params.hurst > 0.0 && params.hurst <= 0.5) {
        return Err(HedgeError::domain(format!(
            "rough simulation needs 0 < H <= 1/2, got {}",
            params.hurst
        )));
    }
    let n = grid.n_steps;
    let dt = grid.dt();
    let sqdt = dt.sqrt();
    let times = grid.times();

    let mut xi: Vec<f64> = match &params.initial_curve {
        Some(curve) => times.iter().map(|&s| curve.value_at(s)).collect(),
        None => vec![params.alpha0 * params.alpha0; n + 1],
    };
    // kernel at lags m·dt, m = 1..=n, and the matching martingale drift
    let mut kappa = vec![0.0; n + 1];
    let mut drift = vec![0.0; n + 1];
    for m in 1..=n {
        let k = kernel_unchecked(m as f64 * dt, params.eta, params.hurst);
        kappa[m] = k;
        drift[m] = 0.5 * k * k * dt;
    }

    let mut spot = Vec::with_capacity(n + 1);
    let mut alpha = Vec::with_capacity(n + 1);
    let mut forward_vol = Vec::with_capacity(n + 1);
    let mut surface = keep_surface.then(|| Vec::with_capacity(n + 1));
    spot.push(spot0);
    alpha.push(xi[0].sqrt());
    forward_vol.push(uniform_slice_mean(&xi).sqrt());
    if let Some(s) = surface.as_mut() {
        s.push(xi.clone());
    }

    for (i, (zw, zb)) in rng.normal_pairs(params.rho).take(n).enumerate() {
        let (s, a) = (spot[i], alpha[i]);
        let dw = zw * sqdt;
        let s_next = s * (a * zb * sqdt - 0.5 * a * a * dt).exp();
        if !(s_next.is_finite() && s_next > 0.0) {
            return Err(non_finite("spot", i + 1));
        }
        for j in i + 1..=n {
            let m = j - i;
            xi[j] *= (kappa[m] * dw - drift[m]).exp();
        }
        let slice = &xi[i + 1..];
        if slice.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(non_finite("forward variance", i + 1));
        }
        spot.push(s_next);
        alpha.push(slice[0].sqrt());
        forward_vol.push(if slice.len() > 1 {
            uniform_slice_mean(slice).sqrt()
        } else {
            slice[0].sqrt()
        });
        if let Some(s) = surface.as_mut() {
            s.push(slice.to_vec());
        }
    }
    Ok(RoughPath {
        times,
        spot,
        alpha,
        forward_vol,
        xi: surface,
    })
}
