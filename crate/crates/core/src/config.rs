//! Sweep configuration and its flat `key = value` file format.
//!
//! ```text
//! # comment
//! model = rough
//! rho_grid = -0.9, -0.6
//! n_paths = 100
//! ```
//!
//! Every key is optional; an empty file gives the default sweep.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{HedgeError, Result};
use crate::hedging::StrategyKind;
use crate::model::{ModelFamily, RHO_GUARD};

pub const DEFAULT_ETA: f64 = 0.5;
pub const DEFAULT_ALPHA0: f64 = 0.4;
pub const DEFAULT_RHO_GRID: [f64; 5] = [-0.95, -0.9, -0.8, -0.6, 0.0];
pub const DEFAULT_HURST_GRID: [f64; 4] = [0.5, 0.35, 0.2, 0.1];
pub const DEFAULT_STRIKE_GRID: [f64; 5] = [0.6, 0.8, 1.0, 1.25, 1.66];
pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_DUMP_PATHS: usize = 16;

/// Strategy names accepted in configs and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategySpec {
    Delta,
    Hklw,
    Bartlett,
    AvoRough,
    /// The variance-optimal strategy of whichever model a cell uses.
    VarianceOptimal,
}

impl StrategySpec {
    pub fn resolve(self, family: ModelFamily) -> Result<StrategyKind> {
        Ok(match (self, family) {
            (Self::Delta, _) => StrategyKind::Delta,
            (Self::Hklw, _) => StrategyKind::Hklw,
            (Self::VarianceOptimal, f) => StrategyKind::variance_optimal(f),
            (Self::Bartlett, ModelFamily::Sabr) => StrategyKind::Bartlett,
            (Self::AvoRough, ModelFamily::RoughBergomi) => StrategyKind::AvoRough,
            (s, f) => {
                return Err(HedgeError::config(format!(
                    "strategy '{s}' is not defined for the {f} model; use 'vo'"
                )))
            }
        })
    }
}

impl FromStr for StrategySpec {
    type Err = HedgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "delta" => Ok(Self::Delta),
            "hklw" => Ok(Self::Hklw),
            "bartlett" => Ok(Self::Bartlett),
            "avo_rough" | "avorough" => Ok(Self::AvoRough),
            "vo" => Ok(Self::VarianceOptimal),
            other => Err(HedgeError::config(format!(
                "unknown strategy '{other}' (expected delta, hklw, bartlett, avo_rough, vo)"
            ))),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Delta => "delta",
            Self::Hklw => "hklw",
            Self::Bartlett => "bartlett",
            Self::AvoRough => "avo_rough",
            Self::VarianceOptimal => "vo",
        })
    }
}

/// How the initial capital `w` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapitalMode {
    /// Monte-Carlo mean of the payoff over all paths of the cell.
    #[default]
    MeanPayoff,
    /// Black-Scholes price at the initial approximate implied volatility.
    BlackScholes,
}

impl FromStr for CapitalMode {
    type Err = HedgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean_payoff" | "mc" => Ok(Self::MeanPayoff),
            "bs" | "black_scholes" => Ok(Self::BlackScholes),
            other => Err(HedgeError::config(format!(
                "unknown w_mode '{other}' (expected mean_payoff or bs)"
            ))),
        }
    }
}

impl fmt::Display for CapitalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MeanPayoff => "mean_payoff",
            Self::BlackScholes => "bs",
        })
    }
}

pub fn parse_family(s: &str) -> Result<ModelFamily> {
    match s.trim().to_ascii_lowercase().as_str() {
        "sabr" => Ok(ModelFamily::Sabr),
        "rough" | "rbergomi" | "rough_bergomi" => Ok(ModelFamily::RoughBergomi),
        other => Err(HedgeError::config(format!("unknown model '{other}' (expected sabr or rough)"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: ModelFamily,
    pub eta: f64,
    pub alpha0: f64,
    pub rho_grid: Vec<f64>,
    /// Ignored by `model = sabr`, which always runs at H = 1/2.
    pub hurst_grid: Vec<f64>,
    pub strike_grid: Vec<f64>,
    pub maturity: f64,
    pub spot0: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub strategies: Vec<StrategySpec>,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
    pub w_mode: CapitalMode,
    /// Paths per cell written to the diagnostic dumps; 0 disables them.
    pub dump_paths: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            model: ModelFamily::RoughBergomi,
            eta: DEFAULT_ETA,
            alpha0: DEFAULT_ALPHA0,
            rho_grid: DEFAULT_RHO_GRID.to_vec(),
            hurst_grid: DEFAULT_HURST_GRID.to_vec(),
            strike_grid: DEFAULT_STRIKE_GRID.to_vec(),
            maturity: 1.0,
            spot0: 1.0,
            n_paths: DEFAULT_PATHS,
            n_steps: DEFAULT_STEPS,
            seed: 0,
            strategies: vec![StrategySpec::Delta, StrategySpec::Hklw, StrategySpec::VarianceOptimal],
            output_dir: PathBuf::from("out"),
            threads: None,
            w_mode: CapitalMode::MeanPayoff,
            dump_paths: 0,
        }
    }
}

pub const KEYS: [&str; 16] = [
    "model",
    "eta",
    "alpha0",
    "rho_grid",
    "hurst_grid",
    "strike_grid",
    "maturity",
    "spot0",
    "n_paths",
    "n_steps",
    "seed",
    "strategies",
    "output_dir",
    "threads",
    "w_mode",
    "dump_paths",
];

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| HedgeError::config(format!("invalid value '{}' for key '{key}'", v.trim())))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(HedgeError::config(format!("malformed list for key '{key}': '{}'", v.trim())));
    }
    items
        .into_iter()
        .map(|s| {
            s.parse()
                .map_err(|_| HedgeError::config(format!("invalid list entry '{s}' for key '{key}'")))
        })
        .collect()
}

fn strategies(key: &str, v: &str) -> Result<Vec<StrategySpec>> {
    let names: Vec<String> = list(key, v)?;
    let mut out = Vec::with_capacity(names.len());
    for n in names {
        let s: StrategySpec = n.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

impl SweepConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = parse_family(value)?,
            "eta" => self.eta = scalar(key, value)?,
            "alpha0" => self.alpha0 = scalar(key, value)?,
            "rho_grid" => self.rho_grid = list(key, value)?,
            "hurst_grid" => self.hurst_grid = list(key, value)?,
            "strike_grid" => self.strike_grid = list(key, value)?,
            "maturity" => self.maturity = scalar(key, value)?,
            "spot0" => self.spot0 = scalar(key, value)?,
            "n_paths" => self.n_paths = scalar(key, value)?,
            "n_steps" => self.n_steps = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "strategies" => self.strategies = strategies(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "threads" => {
                let n: usize = scalar(key, value)?;
                self.threads = (n > 0).then_some(n);
            }
            "w_mode" => self.w_mode = value.parse()?,
            "dump_paths" => self.dump_paths = scalar(key, value)?,
            other => return Err(HedgeError::config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses the config format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HedgeError::Parse { line: idx + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            cfg.set(key.trim(), value).map_err(|e| match e {
                HedgeError::Config(m) => err(m),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HedgeError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HedgeError::config(m));
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be nonnegative, got {}", self.eta));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return bad(format!("alpha0 must be positive, got {}", self.alpha0));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return bad(format!("maturity must be positive, got {}", self.maturity));
        }
        if !(self.spot0 > 0.0 && self.spot0.is_finite()) {
            return bad(format!("spot0 must be positive, got {}", self.spot0));
        }
        for (name, grid) in [("rho_grid", &self.rho_grid), ("strike_grid", &self.strike_grid)] {
            if grid.is_empty() {
                return bad(format!("{name} must not be empty"));
            }
        }
        if self.model == ModelFamily::RoughBergomi && self.hurst_grid.is_empty() {
            return bad("hurst_grid must not be empty".into());
        }
        if let Some(r) = self.rho_grid.iter().find(|r| !(r.abs() <= RHO_GUARD)) {
            return bad(format!("rho {r} outside [-{RHO_GUARD}, {RHO_GUARD}]"));
        }
        if let Some(k) = self.strike_grid.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return bad(format!("strike {k} must be positive"));
        }
        if self.model == ModelFamily::RoughBergomi {
            if let Some(h) = self.hurst_grid.iter().find(|h| !(**h > 0.0 && **h <= 0.5)) {
                return bad(format!(
                    "hurst {h} cannot be simulated; need 0 < H <= 0.5 (H = 0 is only available in first-order tables)"
                ));
            }
        }
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        if self.n_steps < 2 {
            return bad(format!("n_steps must be at least 2, got {}", self.n_steps));
        }
        if self.strategies.is_empty() {
            return bad("strategies must not be empty".into());
        }
        Ok(())
    }

    /// Hurst exponents actually simulated: `[1/2]` for SABR.
    pub fn effective_hurst_grid(&self) -> Vec<f64> {
        match self.model {
            ModelFamily::Sabr => vec![0.5],
            ModelFamily::RoughBergomi => self.hurst_grid.clone(),
        }
    }

    /// Canonical `key = value` rendering; parsing it gives back `self`.
    pub fn to_config_string(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let strategies = self.strategies.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("model", self.model.name().into());
        kv("eta", self.eta.to_string());
        kv("alpha0", self.alpha0.to_string());
        kv("rho_grid", join(&self.rho_grid));
        kv("hurst_grid", join(&self.hurst_grid));
        kv("strike_grid", join(&self.strike_grid));
        kv("maturity", self.maturity.to_string());
        kv("spot0", self.spot0.to_string());
        kv("n_paths", self.n_paths.to_string());
        kv("n_steps", self.n_steps.to_string());
        kv("seed", self.seed.to_string());
        kv("strategies", strategies);
        kv("output_dir", self.output_dir.display().to_string());
        kv("threads", self.threads.unwrap_or(0).to_string());
        kv("w_mode", self.w_mode.to_string());
        kv("dump_paths", self.dump_paths.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = SweepConfig::parse("").unwrap();
        assert_eq!(c, SweepConfig::default());
        assert_eq!(c.eta, 0.5);
        assert_eq!(c.alpha0, 0.4);
        assert_eq!(c.rho_grid, vec![-0.95, -0.9, -0.8, -0.6, 0.0]);
        assert_eq!(c.hurst_grid, vec![0.5, 0.35, 0.2, 0.1]);
        assert_eq!(c.strike_grid, vec![0.6, 0.8, 1.0, 1.25, 1.66]);
        assert_eq!((c.maturity, c.spot0), (1.0, 1.0));
        assert_eq!((c.n_paths, c.n_steps), (10_000, 1000));
        c.validate().unwrap();
    }

    #[test]
    fn overrides_and_comments() {
        let c = SweepConfig::parse(
            "# smoke\n\nn_paths = 100\nrho_grid = -0.9, 0.0  # two\nmodel=sabr\nstrategies = delta, vo, delta\n",
        )
        .unwrap();
        assert_eq!(c.n_paths, 100);
        assert_eq!(c.rho_grid, vec![-0.9, 0.0]);
        assert_eq!(c.model, ModelFamily::Sabr);
        assert_eq!(c.strategies, vec![StrategySpec::Delta, StrategySpec::VarianceOptimal]);
        assert_eq!(c.effective_hurst_grid(), vec![0.5]);
    }

    #[test]
    fn errors_name_key_and_line() {
        match SweepConfig::parse("eta = 0.5\nrho_grid = -0.9,,0\n") {
            Err(HedgeError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("rho_grid"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        match SweepConfig::parse("bogus = 1") {
            Err(HedgeError::Parse { line: 1, message }) => assert!(message.contains("bogus")),
            other => panic!("{other:?}"),
        }
        assert!(SweepConfig::parse("n_paths 100").is_err());
        assert!(SweepConfig::parse("strike_grid = 1, abc").is_err());
        assert!(SweepConfig::parse("strategies = gamma").is_err());
    }

    #[test]
    fn validation() {
        let mut c = SweepConfig::default();
        c.hurst_grid = vec![0.0];
        assert!(c.validate().is_err());
        c.model = ModelFamily::Sabr;
        c.validate().unwrap();
        let mut c = SweepConfig::default();
        c.rho_grid = vec![-1.0];
        assert!(c.validate().is_err());
        let mut c = SweepConfig::default();
        c.strike_grid.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn strategy_resolution() {
        assert!(matches!(
            StrategySpec::VarianceOptimal.resolve(ModelFamily::Sabr).unwrap(),
            StrategyKind::Bartlett
        ));
        assert!(matches!(
            StrategySpec::VarianceOptimal.resolve(ModelFamily::RoughBergomi).unwrap(),
            StrategyKind::AvoRough
        ));
        assert!(StrategySpec::Bartlett.resolve(ModelFamily::RoughBergomi).is_err());
    }

    #[test]
    fn round_trip() {
        let mut c = SweepConfig::default();
        c.seed = 42;
        c.threads = Some(3);
        c.w_mode = CapitalMode::BlackScholes;
        c.rho_grid = vec![-0.123456789012345, 0.1];
        assert_eq!(SweepConfig::parse(&c.to_config_string()).unwrap(), c);
    }
}
