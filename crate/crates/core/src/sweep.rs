//! Parameter sweeps: simulate, hedge every strike and strategy on the same
//! paths, summarise, and write CSV reports.
//!
//! Cells `(ρ, H)` run one after another; the paths of a cell are spread over
//! the worker pool and collected in path order, so results do not depend on
//! the number of threads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{relred_hklw, relred_rough, summarize, Histogram, RunStats};
use crate::config::{CapitalMode, SweepConfig};
use crate::dynamics::{simulate_rough, simulate_sabr, GridSpec, RngStream};
use crate::error::{HedgeError, Result};
use crate::hedging::{AnalyticIntegrals, Hedger, PathOutcome, StrategyKind};
use crate::model::{ModelFamily, ModelParams, OptionSpec};

/// Largest tolerated share of paths dropped for numerical failure.
pub const MAX_DISCARD_FRACTION: f64 = 1e-4;

pub const SUMMARY_HEADER: &str =
    "model,rho,hurst,strike,strategy,mshe_emp,mshe_emp_se,mshe_analytic,rmse,relred_emp,relred_fo,n_paths,n_steps,seed";

/// One `(ρ, H)` combination. `H = 1/2` runs on the SABR simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub family: ModelFamily,
    pub rho: f64,
    pub hurst: f64,
}

impl Cell {
    pub fn new(model: ModelFamily, rho: f64, hurst: f64) -> Self {
        let family = if model == ModelFamily::Sabr || hurst == 0.5 {
            ModelFamily::Sabr
        } else {
            ModelFamily::RoughBergomi
        };
        let hurst = if family == ModelFamily::Sabr { 0.5 } else { hurst };
        Self { family, rho, hurst }
    }

    pub fn params(&self, cfg: &SweepConfig) -> Result<ModelParams> {
        match self.family {
            ModelFamily::Sabr => ModelParams::sabr(cfg.eta, cfg.alpha0, self.rho),
            ModelFamily::RoughBergomi => ModelParams::rough(cfg.eta, cfg.alpha0, self.rho, self.hurst),
        }
    }

    pub fn label(&self) -> String {
        format!("{}_rho{}_H{}", self.family.name(), self.rho, self.hurst)
    }
}

/// Every strategy of one strike, evaluated on the paths of one cell.
#[derive(Debug, Clone)]
pub struct StrikeResult {
    pub strike: f64,
    pub initial_capital: f64,
    pub strategies: Vec<StrategyKind>,
    /// `errors[s][p]`: terminal error of strategy `s` on path `p`.
    pub errors: Vec<Vec<f64>>,
    /// Delta-hedge errors, the reference of every relative reduction.
    pub delta_errors: Vec<f64>,
    pub analytic: Vec<AnalyticIntegrals>,
    pub stats: Vec<RunStats>,
}

impl StrikeResult {
    pub fn stats_for(&self, name: &str) -> Option<&RunStats> {
        self.strategies.iter().position(|k| k.name() == name).map(|i| &self.stats[i])
    }

    pub fn errors_for(&self, name: &str) -> Option<&[f64]> {
        self.strategies
            .iter()
            .position(|k| k.name() == name)
            .map(|i| self.errors[i].as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub n_paths: usize,
    pub discarded: usize,
    pub strikes: Vec<StrikeResult>,
}

/// First-order relative reduction of `kind` against Delta.
pub fn relred_first_order(kind: &StrategyKind, rho: f64, hurst: f64) -> f64 {
    match kind {
        StrategyKind::Delta => 0.0,
        StrategyKind::Hklw => relred_hklw(rho, hurst),
        StrategyKind::Bartlett | StrategyKind::AvoRough => relred_rough(rho, hurst),
        StrategyKind::Custom(_) => f64::NAN,
    }
}

fn simulate_and_hedge(
    params: &ModelParams,
    spot0: f64,
    grid: GridSpec,
    rng: RngStream,
    hedgers: &[Hedger],
    kinds: &[StrategyKind],
) -> Result<Vec<PathOutcome>> {
    match params.family {
        ModelFamily::Sabr => {
            let path = simulate_sabr(params, spot0, grid, rng)?;
            hedgers.iter().map(|h| h.run_path(&path.view(), kinds)).collect()
        }
        ModelFamily::RoughBergomi => {
            let path = simulate_rough(params, spot0, grid, rng, false)?;
            hedgers.iter().map(|h| h.run_path(&path.view(), kinds)).collect()
        }
    }
}

/// Runs one cell with an explicit strategy list. Delta is always evaluated
/// as the reference even if not listed.
pub fn run_cell_with(cfg: &SweepConfig, cell: Cell, strategies: &[StrategyKind]) -> Result<CellResult> {
    let params = cell.params(cfg)?;
    let grid = GridSpec::new(cfg.n_steps, cfg.maturity)?;
    let hedgers = cfg
        .strike_grid
        .iter()
        .map(|&k| Hedger::new(&params, OptionSpec::new(k, cfg.maturity, cfg.spot0)?))
        .collect::<Result<Vec<_>>>()?;
    let mut kinds = vec![StrategyKind::Delta];
    kinds.extend(strategies.iter().filter(|k| !matches!(k, StrategyKind::Delta)).cloned());

    let outcomes: Vec<Result<Vec<PathOutcome>>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| simulate_and_hedge(&params, cfg.spot0, grid, RngStream::new(cfg.seed, p), &hedgers, &kinds))
        .collect();

    let mut kept: Vec<Vec<PathOutcome>> = Vec::with_capacity(outcomes.len());
    let mut discarded = 0;
    for o in outcomes {
        match o {
            Ok(v) => kept.push(v),
            Err(HedgeError::Numeric(_)) => discarded += 1,
            Err(e) => return Err(e),
        }
    }
    if discarded as f64 > MAX_DISCARD_FRACTION * cfg.n_paths as f64 || kept.is_empty() {
        return Err(HedgeError::numeric(format!(
            "cell {}: {discarded} of {} paths failed numerically",
            cell.label(),
            cfg.n_paths
        )));
    }

    let n = kept.len();
    let mut strikes = Vec::with_capacity(hedgers.len());
    for (si, hedger) in hedgers.iter().enumerate() {
        let per_path: Vec<&PathOutcome> = kept.iter().map(|v| &v[si]).collect();
        let w = match cfg.w_mode {
            CapitalMode::MeanPayoff => per_path.iter().map(|o| o.payoff).sum::<f64>() / n as f64,
            CapitalMode::BlackScholes => per_path[0].bs_price0,
        };
        let errors: Vec<Vec<f64>> = (0..kinds.len())
            .map(|k| per_path.iter().map(|o| o.payoff - w - o.gains[k]).collect())
            .collect();
        let analytic: Vec<AnalyticIntegrals> = per_path.iter().map(|o| o.analytic).collect();
        let delta_analytic: Vec<f64> = analytic.iter().map(|a| a.delta).collect();

        let mut stats = Vec::with_capacity(kinds.len() - 1);
        let mut out_kinds = Vec::new();
        let mut out_errors = Vec::new();
        for (k, kind) in kinds.iter().enumerate() {
            let listed = strategies.iter().any(|s| s.name() == kind.name());
            if !listed {
                continue;
            }
            let an: Vec<f64> = match analytic[0].get(kind) {
                Some(_) => analytic.iter().map(|a| a.get(kind).unwrap_or(f64::NAN)).collect(),
                None => vec![f64::NAN; n],
            };
            stats.push(summarize(
                &errors[0],
                &errors[k],
                &delta_analytic,
                &an,
                relred_first_order(kind, cell.rho, cell.hurst),
            )?);
            out_kinds.push(kind.clone());
            out_errors.push(errors[k].clone());
        }
        strikes.push(StrikeResult {
            strike: hedger.option().strike,
            initial_capital: w,
            strategies: out_kinds,
            errors: out_errors,
            delta_errors: errors[0].clone(),
            analytic,
            stats,
        });
    }
    Ok(CellResult {
        cell,
        n_paths: n,
        discarded,
        strikes,
    })
}

/// Runs one cell with the configured strategies.
pub fn run_cell(cfg: &SweepConfig, cell: Cell) -> Result<CellResult> {
    let kinds = cfg
        .strategies
        .iter()
        .map(|s| s.resolve(cell.family))
        .collect::<Result<Vec<_>>>()?;
    run_cell_with(cfg, cell, &kinds)
}

/// Cells of a sweep in output order: ρ outer, H inner.
pub fn cells(cfg: &SweepConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &rho in &cfg.rho_grid {
        for h in cfg.effective_hurst_grid() {
            let c = Cell::new(cfg.model, rho, h);
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    out
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HedgeError::config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Runs every cell of the sweep in memory.
pub fn run_cells(cfg: &SweepConfig) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    in_pool(cfg.threads, || {
        cells(cfg)
            .into_iter()
            .map(|c| run_cell(cfg, c))
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn summary_rows(cfg: &SweepConfig, results: &[CellResult]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in results {
        for k in &r.strikes {
            for (kind, st) in k.strategies.iter().zip(&k.stats) {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.cell.family.name(),
                    r.cell.rho,
                    r.cell.hurst,
                    k.strike,
                    kind.name(),
                    st.mshe_empirical,
                    st.mshe_empirical_se,
                    st.mshe_analytic,
                    st.rmse,
                    st.relred_empirical,
                    st.relred_first_order,
                    r.n_paths,
                    cfg.n_steps,
                    cfg.seed
                );
            }
        }
    }
    s
}

fn histogram_csv(k: &StrikeResult) -> String {
    let hists: Vec<&Histogram> = k.stats.iter().map(|s| &s.histogram).collect();
    let mut s = String::from("bin_lo,bin_hi");
    for kind in &k.strategies {
        s.push(',');
        s.push_str(kind.name());
    }
    s.push('\n');
    if let Some(first) = hists.first() {
        for b in 0..first.counts.len() {
            let _ = write!(s, "{},{}", first.edges[b], first.edges[b + 1]);
            for h in &hists {
                let _ = write!(s, ",{}", h.counts[b]);
            }
            s.push('\n');
        }
    }
    s
}

/// First-order reductions over the ρ grid and the Hurst grid plus `H = 0`.
pub fn first_order_csv(cfg: &SweepConfig) -> String {
    let mut hs = cfg.effective_hurst_grid();
    if cfg.model == ModelFamily::RoughBergomi && !hs.contains(&0.0) {
        hs.push(0.0);
    }
    let mut s = String::from("rho,hurst,relred_vo,relred_hklw,mshe_ratio_vo_delta\n");
    for &rho in &cfg.rho_grid {
        for &h in &hs {
            let _ = writeln!(
                s,
                "{rho},{h},{},{},{}",
                relred_rough(rho, h),
                relred_hklw(rho, h),
                crate::analysis::mshe_ratio_first_order(rho, h)
            );
        }
    }
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| HedgeError::io(path, e))
}

fn dump_cell(cfg: &SweepConfig, r: &CellResult, dir: &Path) -> Result<()> {
    let n = cfg.dump_paths.min(cfg.n_paths);
    if n == 0 {
        return Ok(());
    }
    let params = r.cell.params(cfg)?;
    let grid = GridSpec::new(cfg.n_steps, cfg.maturity)?;
    let mut paths = String::from("path,step,t,S,alpha\n");
    for p in 0..n {
        let rng = RngStream::new(cfg.seed, p as u64);
        let (times, spot, alpha) = match r.cell.family {
            ModelFamily::Sabr => {
                let x = simulate_sabr(&params, cfg.spot0, grid, rng)?;
                (x.times, x.spot, x.alpha)
            }
            ModelFamily::RoughBergomi => {
                let x = simulate_rough(&params, cfg.spot0, grid, rng, false)?;
                (x.times, x.spot, x.alpha)
            }
        };
        for i in 0..times.len() {
            let _ = writeln!(paths, "{p},{i},{},{},{}", times[i], spot[i], alpha[i]);
        }
    }
    write(&dir.join(format!("paths_{}.csv", r.cell.label())), &paths)?;

    // record indices refer to kept paths, which match path ids unless a path was discarded
    let mut rec = String::from("path,strike,strategy,L_T,analytic_integral\n");
    for k in &r.strikes {
        for (kind, errs) in k.strategies.iter().zip(&k.errors) {
            for (p, (e, a)) in errs.iter().zip(&k.analytic).take(n).enumerate() {
                let an = a.get(kind).unwrap_or(f64::NAN);
                let _ = writeln!(rec, "{p},{},{},{e},{an}", k.strike, kind.name());
            }
        }
    }
    write(&dir.join(format!("records_{}.csv", r.cell.label())), &rec)
}

/// Files written by [`run_sweep`].
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub summary: PathBuf,
    pub first_order: PathBuf,
    pub manifest: PathBuf,
    pub histograms: Vec<PathBuf>,
    pub results: Vec<CellResult>,
}

/// Runs the sweep and writes `summary.csv`, `first_order.csv`, one
/// histogram per `(cell, strike)`, `manifest.txt` and optional dumps into
/// the output directory.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| HedgeError::io(&dir, e))?;
    let results = run_cells(cfg)?;

    let summary = dir.join("summary.csv");
    write(&summary, &summary_rows(cfg, &results))?;
    let first_order = dir.join("first_order.csv");
    write(&first_order, &first_order_csv(cfg))?;

    let mut histograms = Vec::new();
    for r in &results {
        for k in &r.strikes {
            let p = dir.join(format!("hist_{}_K{}.csv", r.cell.label(), k.strike));
            write(&p, &histogram_csv(k))?;
            histograms.push(p);
        }
        dump_cell(cfg, r, &dir)?;
    }

    let mut m = String::new();
    let _ = writeln!(m, "# vohedge {}", env!("CARGO_PKG_VERSION"));
    m.push_str(&cfg.to_config_string());
    m.push_str("# cell, kept paths, discarded paths, initial capital per strike\n");
    for r in &results {
        let w: Vec<String> = r.strikes.iter().map(|k| format!("K{}:{}", k.strike, k.initial_capital)).collect();
        let _ = writeln!(m, "# {} {} {} {}", r.cell.label(), r.n_paths, r.discarded, w.join(" "));
    }
    let manifest = dir.join("manifest.txt");
    write(&manifest, &m)?;

    Ok(SweepOutput {
        summary,
        first_order,
        manifest,
        histograms,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StrategySpec;

    fn smoke(model: ModelFamily) -> SweepConfig {
        SweepConfig {
            model,
            rho_grid: vec![-0.9, 0.0],
            hurst_grid: vec![0.5, 0.2],
            strike_grid: vec![0.8, 1.0, 1.25],
            n_paths: 100,
            n_steps: 50,
            seed: 11,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn cell_routing() {
        assert_eq!(Cell::new(ModelFamily::RoughBergomi, -0.5, 0.5).family, ModelFamily::Sabr);
        assert_eq!(Cell::new(ModelFamily::Sabr, -0.5, 0.2).hurst, 0.5);
        let cfg = smoke(ModelFamily::RoughBergomi);
        let cs = cells(&cfg);
        assert_eq!(cs.len(), 4);
        assert_eq!(cs[1].family, ModelFamily::RoughBergomi);
        assert_eq!(cells(&smoke(ModelFamily::Sabr)).len(), 2);
    }

    #[test]
    fn smoke_sweep_is_finite_and_consistent() {
        let cfg = smoke(ModelFamily::RoughBergomi);
        let results = run_cells(&cfg).unwrap();
        for r in &results {
            assert_eq!(r.discarded, 0);
            for k in &r.strikes {
                assert_eq!(k.strategies.len(), 3);
                for st in &k.stats {
                    assert!(st.mshe_empirical.is_finite() && st.mshe_analytic.is_finite());
                    assert!(st.relred_empirical.is_finite());
                    assert_eq!(st.histogram.total(), 100);
                }
                let vo = &k.stats[2];
                let delta = &k.stats[0];
                assert!(vo.mshe_analytic <= delta.mshe_analytic);
                if r.cell.family == ModelFamily::Sabr {
                    assert!(vo.mshe_analytic <= k.stats[1].mshe_analytic);
                }
            }
        }
        let rows = summary_rows(&cfg, &results);
        assert_eq!(rows.lines().count(), 1 + 4 * 3 * 3);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let mut cfg = smoke(ModelFamily::Sabr);
        cfg.threads = Some(1);
        let a = summary_rows(&cfg, &run_cells(&cfg).unwrap());
        cfg.threads = Some(3);
        let b = summary_rows(&cfg, &run_cells(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn bs_capital_mode() {
        let mut cfg = smoke(ModelFamily::Sabr);
        cfg.rho_grid = vec![0.0];
        cfg.strike_grid = vec![1.0];
        cfg.w_mode = CapitalMode::BlackScholes;
        cfg.eta = 0.0;
        let r = run_cell(&cfg, Cell::new(ModelFamily::Sabr, 0.0, 0.5)).unwrap();
        let expected = crate::bs::greeks(crate::bs::BsInputs::new(1.0, 1.0, 0.4, 1.0)).unwrap().price;
        assert!((r.strikes[0].initial_capital - expected).abs() < 1e-15);
    }

    #[test]
    fn strategy_without_delta_still_reports_reference() {
        let mut cfg = smoke(ModelFamily::Sabr);
        cfg.strategies = vec![StrategySpec::VarianceOptimal];
        let r = run_cell(&cfg, Cell::new(ModelFamily::Sabr, -0.9, 0.5)).unwrap();
        assert_eq!(r.strikes[0].strategies.len(), 1);
        assert_eq!(r.strikes[0].strategies[0].name(), "bartlett");
        assert!(r.strikes[0].stats[0].relred_empirical > 0.0);
    }

    #[test]
    fn first_order_table_includes_h0() {
        let t = first_order_csv(&smoke(ModelFamily::RoughBergomi));
        assert!(t.lines().any(|l| l.starts_with("-0.9,0,")));
        assert_eq!(t.lines().count(), 1 + 2 * 3);
    }
}
