use vohedge::analysis::relred_sabr;
use vohedge::config::{StrategySpec, SweepConfig};
use vohedge::dynamics::{simulate_sabr, GridSpec, RngStream};
use vohedge::hedging::{Hedger, StrategyKind};
use vohedge::model::{ModelFamily, ModelParams, OptionSpec};
use vohedge::sweep::{run_cell, run_sweep, Cell, SUMMARY_HEADER};

fn smoke() -> SweepConfig {
    SweepConfig {
        n_paths: 100,
        n_steps: 50,
        seed: 5,
        ..SweepConfig::default()
    }
}

#[test]
fn default_grid_smoke_run_writes_finite_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.dump_paths = 3;
    let out = run_sweep(&cfg).unwrap();

    let summary = std::fs::read_to_string(&out.summary).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_HEADER);
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    // 5 rho x 4 H x 5 K x 3 strategies
    assert_eq!(rows.len(), 300);
    for r in &rows {
        assert_eq!(r.len(), 14);
        for v in &r[5..11] {
            assert!(v.parse::<f64>().unwrap().is_finite(), "{r:?}");
        }
    }
    // Bartlett never exceeds Delta or HKLW within the approximation
    for chunk in rows.chunks(3) {
        let an: Vec<f64> = chunk.iter().map(|r| r[7].parse().unwrap()).collect();
        assert!(an[2] <= an[0], "{chunk:?}");
        if chunk[0][0] == "sabr" {
            assert!(an[2] <= an[1], "{chunk:?}");
        }
    }
    assert_eq!(out.histograms.len(), 5 * 4 * 5);
    let hist = std::fs::read_to_string(&out.histograms[0]).unwrap();
    assert_eq!(hist.lines().count(), 102);
    let total: u64 = hist.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 100);

    let manifest = std::fs::read_to_string(&out.manifest).unwrap();
    let parsed = SweepConfig::parse(&manifest).unwrap();
    assert_eq!(parsed, cfg);
    assert!(dir.path().join("first_order.csv").exists());
    let paths = std::fs::read_to_string(dir.path().join("paths_rough_rho-0.9_H0.2.csv")).unwrap();
    assert_eq!(paths.lines().count(), 1 + 3 * 51);
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let mut bytes = Vec::new();
    for threads in [Some(1), Some(2)] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = smoke();
        cfg.rho_grid = vec![-0.9];
        cfg.strike_grid = vec![1.0, 1.25];
        cfg.threads = threads;
        cfg.output_dir = dir.path().to_path_buf();
        let out = run_sweep(&cfg).unwrap();
        bytes.push(std::fs::read(out.summary).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn mean_payoff_capital_centres_errors() {
    let mut cfg = smoke();
    cfg.model = ModelFamily::Sabr;
    cfg.n_paths = 10_000;
    cfg.n_steps = 100;
    cfg.strike_grid = vec![1.0];
    cfg.strategies = vec![StrategySpec::Delta];
    let r = run_cell(&cfg, Cell::new(ModelFamily::Sabr, -0.9, 0.5)).unwrap();
    let e = r.strikes[0].errors_for("delta").unwrap();
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    // the mean error is minus the mean trading gain; its noise is that of the gains
    let params = ModelParams::sabr(0.5, 0.4, -0.9).unwrap();
    let h = Hedger::new(&params, OptionSpec::new(1.0, 1.0, 1.0).unwrap()).unwrap();
    let grid = GridSpec::new(100, 1.0).unwrap();
    let gains: Vec<f64> = (0..10_000u64)
        .map(|p| {
            let path = simulate_sabr(&params, 1.0, grid, RngStream::new(5, p)).unwrap();
            h.run_path(&path.view(), &[StrategyKind::Delta]).unwrap().gains[0]
        })
        .collect();
    let gm = gains.iter().sum::<f64>() / n;
    let se = (gains.iter().map(|g| (g - gm).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean + gm).abs() < 1e-12);
    assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn sabr_relred_near_first_order_for_moderate_correlation() {
    let mut cfg = smoke();
    cfg.model = ModelFamily::Sabr;
    cfg.n_paths = 2000;
    cfg.n_steps = 400;
    cfg.strike_grid = vec![1.0];
    for rho in [0.0, -0.6] {
        let r = run_cell(&cfg, Cell::new(ModelFamily::Sabr, rho, 0.5)).unwrap();
        let st = r.strikes[0].stats_for("bartlett").unwrap();
        assert!((st.relred_empirical - relred_sabr(rho)).abs() < 0.03, "{rho}: {}", st.relred_empirical);
    }
}
