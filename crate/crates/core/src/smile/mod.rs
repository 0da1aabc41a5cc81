//! Dynamic implied-volatility approximations `Σ̂ = scale · f(Y)`.
//!
//! Both smiles are described by a function `G` with `G(y) = y² + O(y³)` and
//! `f(y) = |y| / √G(y)`. The quantities the hedging formulas need are
//! `F1 = f - y f'` and `F2 = -2 f'`.

pub mod rough;
pub mod sabr;

/// Below this |y| the closed forms are replaced by a Taylor polynomial.
pub const SERIES_EPS: f64 = 1e-4;

/// Smile state at one point in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmileState {
    pub y: f64,
    pub sigma_hat: f64,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Cubic Taylor polynomial of `f` at zero, `1 + p1 y + p2 y² + p3 y³`.
///
/// Built from the Taylor coefficients of `G(y) = y² (1 + b3 y + b4 y² + b5 y³ + …)`
/// by expanding `(1 + z)^(-1/2) = 1 - z/2 + 3z²/8 - 5z³/16`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SmileSeries {
    p1: f64,
    p2: f64,
    p3: f64,
}

impl SmileSeries {
    pub(crate) fn from_g_coefficients(b3: f64, b4: f64, b5: f64) -> Self {
        Self {
            p1: -0.5 * b3,
            p2: -0.5 * b4 + 0.375 * b3 * b3,
            p3: -0.5 * b5 + 0.75 * b3 * b4 - 0.3125 * b3 * b3 * b3,
        }
    }

    pub(crate) fn slope(&self) -> f64 {
        self.p1
    }

    /// `(f, F1, F2)` from the polynomial.
    #[inline]
    pub(crate) fn eval(&self, y: f64) -> (f64, f64, f64) {
        let Self { p1, p2, p3 } = *self;
        let f = 1.0 + y * (p1 + y * (p2 + y * p3));
        let fp = p1 + y * (2.0 * p2 + y * 3.0 * p3);
        (f, f - y * fp, -2.0 * fp)
    }
}

/// `(f, F1, F2)` from `G` and `G'`, valid away from zero.
#[inline]
pub(crate) fn from_g(y: f64, g: f64, g_prime: f64) -> (f64, f64, f64) {
    let root = g.sqrt();
    let f = y.abs() / root;
    let f1 = y.signum() * 0.5 * y * y * g_prime / (g * root);
    let f2 = 2.0 * (f1 - f) / y;
    (f, f1, f2)
}
