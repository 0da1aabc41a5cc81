use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use vohedge::config::SweepConfig;
use vohedge::sweep::run_sweep;
use vohedge::Result;

/// Hedging-error sweeps under lognormal SABR and rough Bergomi.
///
/// List arguments are comma separated, e.g. `--rho=-0.9,-0.6`.
#[derive(Debug, Parser)]
#[command(name = "vohedge", version)]
struct Cli {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sabr or rough
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    #[arg(long)]
    hurst: Option<String>,
    #[arg(long)]
    strike: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    alpha0: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// delta, hklw, bartlett, avo_rough, vo
    #[arg(long)]
    strategies: Option<String>,
    /// mean_payoff or bs
    #[arg(long)]
    w_mode: Option<String>,
    /// Write per-path diagnostics for the first N paths of every cell.
    #[arg(long, num_args = 0..=1, default_missing_value = "16")]
    dump_paths: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<String>,
}

impl Cli {
    fn config(&self) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(p) => SweepConfig::from_file(p)?,
            None => SweepConfig::default(),
        };
        let overrides = [
            ("model", &self.model),
            ("rho_grid", &self.rho),
            ("hurst_grid", &self.hurst),
            ("strike_grid", &self.strike),
            ("eta", &self.eta),
            ("alpha0", &self.alpha0),
            ("n_paths", &self.paths),
            ("n_steps", &self.steps),
            ("seed", &self.seed),
            ("output_dir", &self.out),
            ("strategies", &self.strategies),
            ("w_mode", &self.w_mode),
            ("dump_paths", &self.dump_paths),
            ("threads", &self.threads),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.config()?;
    let out = run_sweep(&cfg)?;
    for r in &out.results {
        if r.discarded > 0 {
            eprintln!("{}: discarded {} paths", r.cell.label(), r.discarded);
        }
    }
    println!("{}", out.summary.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vohedge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
