//! Hedging strategies, the pathwise hedging error, and the within-approximation
//! mean-square hedging error (MSHE) quadratures.
//!
//! Both models share one structure. Writing `k_t` for the diffusion scale of
//! the smile and `r` for the vol-factor loading,
//!
//! ```text
//! SABR:   k_t = η/2,        r = 1
//! rough:  k_t = κ(T-t)/2,   r = 1/(H + 1/2)
//! ```
//!
//! the approximate implied volatility satisfies
//!
//! ```text
//! d⟨Σ̂,S⟩ = k α² S (ρ r F1 + F2) dt
//! d⟨Σ̂,Σ̂⟩ = k² α² (r² F1² + 2ρ r F1 F2 + F2²) dt
//! d⟨S,S⟩ = S² α² dt
//! ```
//!
//! and every strategy and error integrand below is a specialisation of these
//! three densities.

use std::fmt;
use std::sync::Arc;

use crate::bs::{greeks_unchecked, Greeks};
use crate::dynamics::PathView;
use crate::error::{HedgeError, Result};
use crate::model::{ModelFamily, ModelParams, OptionSpec};
use crate::smile::rough::{kernel_unchecked, RoughSmile, RoughSmileParams};
use crate::smile::sabr::{self, SabrSmileParams};
use crate::smile::SmileState;

/// Position function of a user-supplied strategy.
#[derive(Clone)]
pub struct CustomStrategy {
    pub name: String,
    pub position: Arc<dyn Fn(&StepState) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomStrategy").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum StrategyKind {
    /// Black-Scholes Delta at the approximate implied volatility.
    Delta,
    /// Delta plus the Vega-weighted spot sensitivity of Σ̂.
    Hklw,
    /// Bartlett's Delta, the variance-optimal strategy under SABR.
    Bartlett,
    /// Approximate variance-optimal strategy under rough Bergomi.
    AvoRough,
    Custom(CustomStrategy),
}

impl StrategyKind {
    pub fn name(&self) -> &str {
        match self {
            Self::Delta => "delta",
            Self::Hklw => "hklw",
            Self::Bartlett => "bartlett",
            Self::AvoRough => "avo_rough",
            Self::Custom(c) => &c.name,
        }
    }

    /// The variance-optimal strategy of a model family.
    pub fn variance_optimal(family: ModelFamily) -> Self {
        match family {
            ModelFamily::Sabr => Self::Bartlett,
            ModelFamily::RoughBergomi => Self::AvoRough,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything the strategies and error integrands need at one rebalancing date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    pub t: f64,
    pub tau: f64,
    pub spot: f64,
    pub alpha: f64,
    pub smile: SmileState,
    /// Black-Scholes quantities at `Σ̂`.
    pub greeks: Greeks,
    /// Smile diffusion scale `k_t`.
    pub k: f64,
    /// Vol-factor loading `r`.
    pub r: f64,
    pub rho: f64,
}

impl StepState {
    /// `ρ r F1 + F2`
    #[inline]
    fn skew_loading(&self) -> f64 {
        self.rho * self.r * self.smile.f1 + self.smile.f2
    }

    /// Coefficients of the MSHE integrand `a x² - 2 b x + c` in the deviation
    /// `x = θ - Delta`, per unit time.
    #[inline]
    fn quadratic(&self) -> (f64, f64, f64) {
        let (s, a2, vega, k) = (self.spot, self.alpha * self.alpha, self.greeks.vega, self.k);
        let (f1, f2, r, rho) = (self.smile.f1, self.smile.f2, self.r, self.rho);
        let p = r * r * f1 * f1 + 2.0 * rho * r * f1 * f2 + f2 * f2;
        (
            s * s * a2,
            vega * k * a2 * s * self.skew_loading(),
            vega * vega * k * k * a2 * p,
        )
    }

    /// `Vegâ² k² α²`, the common factor of the closed-form integrands.
    #[inline]
    fn vol_risk(&self) -> f64 {
        let v = self.greeks.vega * self.k * self.alpha;
        v * v
    }
}

/// Per-path values of the closed-form MSHE integrals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyticIntegrals {
    pub delta: f64,
    pub hklw: f64,
    /// Bartlett under SABR, the rough variance-optimal strategy otherwise.
    pub variance_optimal: f64,
    /// `MSHE(Delta) - MSHE(variance-optimal)` integrated directly.
    pub delta_minus_vo: f64,
}

impl AnalyticIntegrals {
    pub fn get(&self, kind: &StrategyKind) -> Option<f64> {
        match kind {
            StrategyKind::Delta => Some(self.delta),
            StrategyKind::Hklw => Some(self.hklw),
            StrategyKind::Bartlett | StrategyKind::AvoRough => Some(self.variance_optimal),
            StrategyKind::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeRecord {
    /// `L_T = payoff - w - Σ θ_i (S_{i+1} - S_i)`
    pub terminal_error: f64,
    pub initial_capital: f64,
    pub analytic: AnalyticIntegrals,
    pub positions: Option<Vec<f64>>,
}

/// Result of hedging one path with several strategies, before the initial
/// capital is known.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub payoff: f64,
    /// Trading gains `Σ θ_i ΔS_i`, one per strategy.
    pub gains: Vec<f64>,
    pub analytic: AnalyticIntegrals,
    /// Black-Scholes price at `Σ̂` on the first date.
    pub bs_price0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Smile {
    Sabr(SabrSmileParams),
    Rough(RoughSmile),
}

/// Strategy evaluator for one model and one option.
#[derive(Debug, Clone)]
pub struct Hedger {
    family: ModelFamily,
    smile: Smile,
    opt: OptionSpec,
    rho: f64,
    eta: f64,
    hurst: f64,
}

impl Hedger {
    pub fn new(params: &ModelParams, opt: OptionSpec) -> Result<Self> {
        params.validate()?;
        let smile = match params.family {
            ModelFamily::Sabr => Smile::Sabr(SabrSmileParams::new(params.rho, params.eta)?),
            ModelFamily::RoughBergomi => Smile::Rough(RoughSmile::new(RoughSmileParams::new(
                params.rho,
                params.eta,
                params.hurst,
            )?)?),
        };
        Ok(Self {
            family: params.family,
            smile,
            opt,
            rho: params.rho,
            eta: params.eta,
            hurst: params.hurst,
        })
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn option(&self) -> &OptionSpec {
        &self.opt
    }

    fn check_kind(&self, kind: &StrategyKind) -> Result<()> {
        match (kind, self.family) {
            (StrategyKind::Bartlett, ModelFamily::RoughBergomi) => Err(HedgeError::config(
                "bartlett strategy requires the SABR model",
            )),
            (StrategyKind::AvoRough, ModelFamily::Sabr) => Err(HedgeError::config(
                "avo_rough strategy requires the rough Bergomi model",
            )),
            _ => Ok(()),
        }
    }

    /// State at time `t`. `forward_vol` is `U_t` and only used by the rough
    /// smile; SABR ignores it.
    pub fn step_state(&self, t: f64, spot: f64, alpha: f64, forward_vol: Option<f64>) -> Result<StepState> {
        let tau = self.opt.maturity - t;
        if !(tau > 0.0) {
            return Err(HedgeError::domain(format!(
                "state requested at t={t}, maturity {}",
                self.opt.maturity
            )));
        }
        if !(spot > 0.0 && alpha >= 0.0) {
            return Err(HedgeError::domain(format!(
                "need spot > 0 and alpha >= 0, got S={spot} alpha={alpha}"
            )));
        }
        let u = match (self.family, forward_vol) {
            (ModelFamily::RoughBergomi, Some(u)) if u >= 0.0 => u,
            (ModelFamily::RoughBergomi, None) => alpha,
            (ModelFamily::RoughBergomi, Some(u)) => {
                return Err(HedgeError::domain(format!("forward vol must be nonnegative, got {u}")))
            }
            (ModelFamily::Sabr, _) => alpha,
        };
        Ok(self.state_unchecked(t, tau, spot, alpha, u))
    }

    #[inline]
    fn state_unchecked(&self, t: f64, tau: f64, spot: f64, alpha: f64, u: f64) -> StepState {
        let strike = self.opt.strike;
        let (smile, k, r) = match &self.smile {
            Smile::Sabr(p) => (sabr::state_unchecked(spot, alpha, strike, *p), 0.5 * self.eta, 1.0),
            Smile::Rough(s) => (
                s.state_unchecked(tau, spot, u, strike),
                0.5 * kernel_unchecked(tau, self.eta, self.hurst),
                1.0 / (self.hurst + 0.5),
            ),
        };
        StepState {
            t,
            tau,
            spot,
            alpha,
            smile,
            greeks: greeks_unchecked(spot, strike, smile.sigma_hat, tau),
            k,
            r,
            rho: self.rho,
        }
    }

    /// Hedge ratio of `kind` in state `st`.
    pub fn position(&self, kind: &StrategyKind, st: &StepState) -> Result<f64> {
        self.check_kind(kind)?;
        Ok(position_unchecked(kind, st))
    }

    /// Quadrature weight of step `i`. On the last interval the integrand
    /// carries `(T-s)^(2H-1)`, which is integrated exactly against the
    /// coefficients frozen at `t_{n-1}`.
    #[inline]
    fn weight(&self, i: usize, n: usize, dt: f64) -> f64 {
        if i + 1 == n && self.family == ModelFamily::RoughBergomi && self.hurst > 0.0 {
            dt / (2.0 * self.hurst)
        } else {
            dt
        }
    }

    fn check_path(&self, path: &PathView<'_>) -> Result<()> {
        let n = path.n_steps();
        if n < 1 || path.spot.len() != n + 1 || path.alpha.len() != n + 1 {
            return Err(HedgeError::domain("path arrays have inconsistent lengths"));
        }
        if let Some(u) = path.forward_vol {
            if u.len() != n + 1 {
                return Err(HedgeError::domain("forward-vol array has inconsistent length"));
            }
        }
        let horizon = path.times[n];
        if (horizon - self.opt.maturity).abs() > 1e-12 * self.opt.maturity.max(1.0) {
            return Err(HedgeError::domain(format!(
                "path ends at {horizon}, option matures at {}",
                self.opt.maturity
            )));
        }
        Ok(())
    }

    /// States at every rebalancing date `t_0 .. t_{n-1}`.
    pub fn states(&self, path: &PathView<'_>) -> Result<Vec<StepState>> {
        self.check_path(path)?;
        (0..path.n_steps())
            .map(|i| {
                self.step_state(
                    path.times[i],
                    path.spot[i],
                    path.alpha[i],
                    path.forward_vol.map(|u| u[i]),
                )
            })
            .collect()
    }

    /// Hedges one path with one strategy, rebalancing at every grid date.
    pub fn hedge_path(
        &self,
        path: &PathView<'_>,
        kind: &StrategyKind,
        initial_capital: f64,
        keep_positions: bool,
    ) -> Result<HedgeRecord> {
        self.check_kind(kind)?;
        let states = self.states(path)?;
        let mut gains = 0.0;
        let mut positions = keep_positions.then(|| Vec::with_capacity(states.len()));
        for (i, st) in states.iter().enumerate() {
            let theta = position_unchecked(kind, st);
            gains += theta * (path.spot[i + 1] - path.spot[i]);
            if let Some(p) = positions.as_mut() {
                p.push(theta);
            }
        }
        let n = path.n_steps();
        let terminal_error = self.opt.payoff(path.spot[n]) - initial_capital - gains;
        if !terminal_error.is_finite() {
            return Err(HedgeError::numeric("non-finite hedging error"));
        }
        Ok(HedgeRecord {
            terminal_error,
            initial_capital,
            analytic: self.integrate(path, &states),
            positions,
        })
    }

    /// Hedges one path with several strategies in a single pass.
    pub fn run_path(&self, path: &PathView<'_>, kinds: &[StrategyKind]) -> Result<PathOutcome> {
        for kind in kinds {
            self.check_kind(kind)?;
        }
        self.check_path(path)?;
        let n = path.n_steps();
        let dt_last = path.times[n] - path.times[n - 1];
        let mut gains = vec![0.0; kinds.len()];
        let mut analytic = AnalyticIntegrals::default();
        let mut bs_price0 = f64::NAN;
        for i in 0..n {
            let st = self.step_state(
                path.times[i],
                path.spot[i],
                path.alpha[i],
                path.forward_vol.map(|u| u[i]),
            )?;
            if i == 0 {
                bs_price0 = st.greeks.price;
            }
            let ds = path.spot[i + 1] - path.spot[i];
            for (g, kind) in gains.iter_mut().zip(kinds) {
                *g += position_unchecked(kind, &st) * ds;
            }
            let dt = if i + 1 == n { dt_last } else { path.times[i + 1] - path.times[i] };
            accumulate(&mut analytic, &st, self.weight(i, n, dt));
        }
        if gains.iter().any(|g| !g.is_finite()) {
            return Err(HedgeError::numeric("non-finite trading gains"));
        }
        Ok(PathOutcome {
            payoff: self.opt.payoff(path.spot[n]),
            gains,
            analytic,
            bs_price0,
        })
    }

    fn integrate(&self, path: &PathView<'_>, states: &[StepState]) -> AnalyticIntegrals {
        let n = states.len();
        let mut acc = AnalyticIntegrals::default();
        for (i, st) in states.iter().enumerate() {
            let dt = path.times[i + 1] - path.times[i];
            accumulate(&mut acc, st, self.weight(i, n, dt));
        }
        acc
    }

    /// Closed-form MSHE integral of `kind` along one path.
    pub fn analytic_mshe(&self, path: &PathView<'_>, kind: &StrategyKind) -> Result<f64> {
        self.check_kind(kind)?;
        let states = self.states(path)?;
        self.integrate(path, &states).get(kind).ok_or_else(|| {
            HedgeError::config(format!(
                "no closed-form MSHE for strategy '{}'; use mshe_general",
                kind.name()
            ))
        })
    }

    /// MSHE integral of an arbitrary position series, one position per
    /// rebalancing date:
    /// `∫ (θ-Δ)² d⟨S,S⟩ - 2(θ-Δ) Vega d⟨Σ̂,S⟩ + Vega² d⟨Σ̂,Σ̂⟩`.
    pub fn mshe_general(&self, path: &PathView<'_>, positions: &[f64]) -> Result<f64> {
        let states = self.states(path)?;
        if positions.len() != states.len() {
            return Err(HedgeError::domain(format!(
                "expected {} positions, got {}",
                states.len(),
                positions.len()
            )));
        }
        let n = states.len();
        let mut total = 0.0;
        for (i, (st, theta)) in states.iter().zip(positions).enumerate() {
            let (a, b, c) = st.quadratic();
            let x = theta - st.greeks.delta;
            let dt = path.times[i + 1] - path.times[i];
            total += (a * x * x - 2.0 * b * x + c) * self.weight(i, n, dt);
        }
        if !total.is_finite() {
            return Err(HedgeError::numeric("non-finite MSHE integral"));
        }
        Ok(total)
    }

    /// Position series of `kind` along a path.
    pub fn positions(&self, path: &PathView<'_>, kind: &StrategyKind) -> Result<Vec<f64>> {
        self.check_kind(kind)?;
        Ok(self
            .states(path)?
            .iter()
            .map(|st| position_unchecked(kind, st))
            .collect())
    }
}

#[inline]
fn accumulate(acc: &mut AnalyticIntegrals, st: &StepState, w: f64) {
    let base = st.vol_risk() * w;
    let (f1, f2, r, rho) = (st.smile.f1, st.smile.f2, st.r, st.rho);
    let hklw = base * r * r * f1 * f1;
    let q = st.skew_loading();
    acc.hklw += hklw;
    acc.variance_optimal += (1.0 - rho * rho) * hklw;
    acc.delta += base * (r * r * f1 * f1 + 2.0 * rho * r * f1 * f2 + f2 * f2);
    acc.delta_minus_vo += base * q * q;
}

#[inline]
fn position_unchecked(kind: &StrategyKind, st: &StepState) -> f64 {
    let delta = st.greeks.delta;
    // Vega / S
    let scaled_vega = st.greeks.vega / st.spot;
    match kind {
        StrategyKind::Delta => delta,
        StrategyKind::Hklw => delta + scaled_vega * st.k * st.smile.f2,
        StrategyKind::Bartlett | StrategyKind::AvoRough => delta + scaled_vega * st.k * st.skew_loading(),
        StrategyKind::Custom(c) => (c.position)(st),
    }
}

/// Hedge ratio of `kind` at `(t, spot, alpha)` for a one-off evaluation.
pub fn position(
    kind: &StrategyKind,
    t: f64,
    spot: f64,
    alpha: f64,
    forward_vol: Option<f64>,
    opt: OptionSpec,
    params: &ModelParams,
) -> Result<f64> {
    let h = Hedger::new(params, opt)?;
    let st = h.step_state(t, spot, alpha, forward_vol)?;
    h.position(kind, &st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs::norm_pdf;
    use crate::dynamics::{simulate_rough, simulate_sabr, GridSpec, RngStream};

    fn sabr_params(rho: f64) -> ModelParams {
        ModelParams::sabr(0.5, 0.4, rho).unwrap()
    }

    fn atm() -> OptionSpec {
        OptionSpec::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn atm_bartlett_correction() {
        let rho = -0.7;
        let h = Hedger::new(&sabr_params(rho), atm()).unwrap();
        let st = h.step_state(0.25, 1.0, 0.4, None).unwrap();
        assert_eq!(st.smile.y, 0.0);
        let delta = h.position(&StrategyKind::Delta, &st).unwrap();
        let bartlett = h.position(&StrategyKind::Bartlett, &st).unwrap();
        let phi = norm_pdf(st.greeks.d_plus);
        // F1(0) = 1, F2(0) = -ρ/2
        let expected = delta + 0.25 * phi * 0.75f64.sqrt() * (rho - rho / 2.0);
        assert!((bartlett - expected).abs() < 1e-15);
    }

    #[test]
    fn strategies_coincide_without_correlation_at_the_money() {
        let h = Hedger::new(&sabr_params(0.0), atm()).unwrap();
        let st = h.step_state(0.5, 1.0, 0.4, None).unwrap();
        let d = h.position(&StrategyKind::Delta, &st).unwrap();
        for k in [StrategyKind::Hklw, StrategyKind::Bartlett] {
            assert_eq!(h.position(&k, &st).unwrap(), d);
        }
        let rough = ModelParams::rough(0.5, 0.4, 0.0, 0.2).unwrap();
        let h = Hedger::new(&rough, atm()).unwrap();
        let st = h.step_state(0.5, 1.0, 0.4, Some(0.4)).unwrap();
        assert_eq!(h.position(&StrategyKind::AvoRough, &st).unwrap(), st.greeks.delta);
    }

    #[test]
    fn avo_rough_at_half_is_bartlett() {
        let opt = OptionSpec::new(1.25, 1.0, 1.0).unwrap();
        let hs = Hedger::new(&sabr_params(-0.9), opt).unwrap();
        let hr = Hedger::new(&ModelParams::rough(0.5, 0.4, -0.9, 0.5).unwrap(), opt).unwrap();
        for &(t, s, a) in &[(0.0, 1.0, 0.4), (0.3, 0.9, 0.5), (0.9, 1.3, 0.2)] {
            let b = hs.position(&StrategyKind::Bartlett, &hs.step_state(t, s, a, None).unwrap()).unwrap();
            let r = hr
                .position(&StrategyKind::AvoRough, &hr.step_state(t, s, a, Some(a)).unwrap())
                .unwrap();
            assert!((b - r).abs() < 1e-12, "{b} vs {r}");
        }
    }

    #[test]
    fn avo_rough_matches_closed_form() {
        let (rho, hurst, eta) = (-0.6, 0.2, 0.5);
        let opt = OptionSpec::new(1.25, 1.0, 1.0).unwrap();
        let h = Hedger::new(&ModelParams::rough(eta, 0.4, rho, hurst).unwrap(), opt).unwrap();
        let st = h.step_state(0.3, 1.05, 0.35, Some(0.38)).unwrap();
        let tau: f64 = 0.7;
        let phi = norm_pdf(st.greeks.d_plus);
        let expected = st.greeks.delta
            + 0.5 * eta * phi * (2.0 * hurst).sqrt() * tau.powf(hurst)
                * (rho * st.smile.f1 / (hurst + 0.5) + st.smile.f2);
        let got = h.position(&StrategyKind::AvoRough, &st).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((st.smile.sigma_hat - 0.38 * st.smile.f).abs() < 1e-16);
    }

    #[test]
    fn strategy_model_mismatch_is_config_error() {
        let h = Hedger::new(&sabr_params(-0.5), atm()).unwrap();
        let st = h.step_state(0.0, 1.0, 0.4, None).unwrap();
        assert!(matches!(
            h.position(&StrategyKind::AvoRough, &st),
            Err(HedgeError::Config(_))
        ));
        let hr = Hedger::new(&ModelParams::rough(0.5, 0.4, -0.5, 0.3).unwrap(), atm()).unwrap();
        let st = hr.step_state(0.0, 1.0, 0.4, Some(0.4)).unwrap();
        assert!(hr.position(&StrategyKind::Bartlett, &st).is_err());
    }

    #[test]
    fn zero_vol_path_has_unhedged_error() {
        let h = Hedger::new(&sabr_params(-0.5), OptionSpec::new(0.8, 1.0, 1.0).unwrap()).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let spot = vec![1.0; 11];
        let alpha = vec![0.0; 11];
        let path = PathView {
            times: &times,
            spot: &spot,
            alpha: &alpha,
            forward_vol: None,
        };
        for kind in [StrategyKind::Delta, StrategyKind::Hklw, StrategyKind::Bartlett] {
            let rec = h.hedge_path(&path, &kind, 0.15, true).unwrap();
            assert!((rec.terminal_error - (0.2 - 0.15)).abs() < 1e-15);
            assert!(rec.positions.unwrap().iter().all(|p| p.is_finite()));
            assert_eq!(rec.analytic.delta, 0.0);
        }
    }

    fn bs_delta_rms(strike: f64, steps: usize, n: u64) -> (f64, f64) {
        let p = ModelParams::sabr(0.0, 0.4, 0.0).unwrap();
        let opt = OptionSpec::new(strike, 1.0, 1.0).unwrap();
        let h = Hedger::new(&p, opt).unwrap();
        let grid = GridSpec::new(steps, 1.0).unwrap();
        let price = crate::bs::greeks(crate::bs::BsInputs::new(1.0, strike, 0.4, 1.0)).unwrap().price;
        let mut sq = 0.0;
        for k in 0..n {
            let path = simulate_sabr(&p, 1.0, grid, RngStream::new(4, k)).unwrap();
            let rec = h.hedge_path(&path.view(), &StrategyKind::Delta, price, false).unwrap();
            sq += rec.terminal_error * rec.terminal_error;
            assert_eq!(rec.analytic.delta, 0.0);
        }
        ((sq / n as f64).sqrt(), price)
    }

    #[test]
    fn black_scholes_limit_delta_hedge_is_nearly_perfect() {
        let (rms, price) = bs_delta_rms(0.8, 1000, 400);
        assert!(rms <= 0.02 * price, "rms {rms} vs price {price}");
    }

    #[test]
    fn black_scholes_limit_error_shrinks_with_rebalancing() {
        // discretisation error scales like n^(-1/2)
        let (coarse, _) = bs_delta_rms(1.0, 250, 400);
        let (fine, price) = bs_delta_rms(1.0, 1000, 400);
        let ratio = coarse / fine;
        assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
        // ATM: sqrt(pi/4) / sqrt(n) of the price, about 2.8%
        assert!(fine <= 0.035 * price, "rms {fine} vs price {price}");
    }

    fn sabr_path(rho: f64, seed: u64, idx: u64, steps: usize) -> crate::dynamics::SabrPath {
        simulate_sabr(
            &sabr_params(rho),
            1.0,
            GridSpec::new(steps, 1.0).unwrap(),
            RngStream::new(seed, idx),
        )
        .unwrap()
    }

    #[test]
    fn hklw_is_bartlett_scaled() {
        for rho in [0.0, -0.6, -0.95] {
            let h = Hedger::new(&sabr_params(rho), OptionSpec::new(1.25, 1.0, 1.0).unwrap()).unwrap();
            let path = sabr_path(rho, 1, 0, 200);
            let hklw = h.analytic_mshe(&path.view(), &StrategyKind::Hklw).unwrap();
            let bart = h.analytic_mshe(&path.view(), &StrategyKind::Bartlett).unwrap();
            assert!((hklw - bart / (1.0 - rho * rho)).abs() <= 1e-12 * hklw);
            if rho == 0.0 {
                assert_eq!(hklw, bart);
            }
        }
    }

    #[test]
    fn complete_market_limit_pathwise() {
        // Bartlett / Delta = (1-ρ²) F1² / (F1² + 2ρF1F2 + F2²) pointwise, so the
        // ratio vanishes linearly in 1-ρ²; it is not below 1-ρ² itself since
        // F2 > 0 when ρ → -1.
        for rho in [-0.999, -0.9999] {
            let h = Hedger::new(&sabr_params(rho), atm()).unwrap();
            for k in 0..20 {
                let path = sabr_path(rho, 2, k, 200);
                let v = path.view();
                let b = h.analytic_mshe(&v, &StrategyKind::Bartlett).unwrap();
                let d = h.analytic_mshe(&v, &StrategyKind::Delta).unwrap();
                let hk = h.analytic_mshe(&v, &StrategyKind::Hklw).unwrap();
                assert!(b <= 10.0 * (1.0 - rho * rho) * d, "{b} vs {d}");
                assert!(hk > 0.1 * d);
            }
        }
    }

    #[test]
    fn general_formula_reduces_to_closed_forms() {
        for (params, fv) in [
            (sabr_params(-0.8), false),
            (ModelParams::rough(0.5, 0.4, -0.8, 0.2).unwrap(), true),
        ] {
            let opt = OptionSpec::new(0.8, 1.0, 1.0).unwrap();
            let h = Hedger::new(&params, opt).unwrap();
            let grid = GridSpec::new(100, 1.0).unwrap();
            let rough_path;
            let sabr_path;
            let view = if fv {
                rough_path = simulate_rough(&params, 1.0, grid, RngStream::new(9, 1), false).unwrap();
                rough_path.view()
            } else {
                sabr_path = simulate_sabr(&params, 1.0, grid, RngStream::new(9, 1)).unwrap();
                sabr_path.view()
            };
            let vo = StrategyKind::variance_optimal(params.family);
            let closed = h.states(&view).map(|s| h.integrate(&view, &s)).unwrap();
            for kind in [StrategyKind::Delta, StrategyKind::Hklw, vo.clone()] {
                let pos = h.positions(&view, &kind).unwrap();
                let general = h.mshe_general(&view, &pos).unwrap();
                let analytic = closed.get(&kind).unwrap();
                assert!((general - analytic).abs() <= 1e-12 * analytic, "{kind}: {general} vs {analytic}");
            }
            let delta = h.mshe_general(&view, &h.positions(&view, &StrategyKind::Delta).unwrap()).unwrap();
            assert!((delta - closed.variance_optimal - closed.delta_minus_vo).abs() < 1e-10);

            let vo_pos = h.positions(&view, &vo).unwrap();
            let vo_val = h.mshe_general(&view, &vo_pos).unwrap();
            let bumped: Vec<f64> = vo_pos.iter().map(|p| p + 0.01).collect();
            assert!(h.mshe_general(&view, &bumped).unwrap() > vo_val);
        }
    }

    #[test]
    fn custom_strategy_and_length_checks() {
        let h = Hedger::new(&sabr_params(-0.5), atm()).unwrap();
        let path = sabr_path(-0.5, 5, 5, 50);
        let half = StrategyKind::Custom(CustomStrategy {
            name: "half".into(),
            position: Arc::new(|_| 0.5),
        });
        let pos = h.positions(&path.view(), &half).unwrap();
        assert!(pos.iter().all(|&p| p == 0.5));
        assert!(h.analytic_mshe(&path.view(), &half).is_err());
        assert!(h.mshe_general(&path.view(), &pos[1..]).is_err());
    }

    #[test]
    fn run_path_matches_single_strategy_hedges() {
        let h = Hedger::new(&sabr_params(-0.9), atm()).unwrap();
        let path = sabr_path(-0.9, 6, 3, 100);
        let kinds = [StrategyKind::Delta, StrategyKind::Hklw, StrategyKind::Bartlett];
        let out = h.run_path(&path.view(), &kinds).unwrap();
        for (kind, g) in kinds.iter().zip(&out.gains) {
            let rec = h.hedge_path(&path.view(), kind, 0.1, false).unwrap();
            assert!((rec.terminal_error - (out.payoff - 0.1 - g)).abs() < 1e-15);
            assert_eq!(rec.analytic, out.analytic);
        }
    }

    #[test]
    fn delta_positions_are_probabilities() {
        let h = Hedger::new(&sabr_params(-0.95), OptionSpec::new(1.66, 1.0, 1.0).unwrap()).unwrap();
        let path = sabr_path(-0.95, 7, 7, 200);
        for p in h.positions(&path.view(), &StrategyKind::Delta).unwrap() {
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
