use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use ulearn::experiment::{run_experiment, write_outputs, ExperimentConfig, Method};

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    UlearnLasso,
    UlearnMlp,
    Oracle,
    Swr,
    NaiveBootstrap,
    Conformal,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::UlearnLasso => Method::UlearnLasso,
            MethodArg::UlearnMlp => Method::UlearnMlp,
            MethodArg::Oracle => Method::Oracle,
            MethodArg::Swr => Method::Swr,
            MethodArg::NaiveBootstrap => Method::NaiveBootstrap,
            MethodArg::Conformal => Method::Conformal,
        }
    }
}

/// Run a replicated U-learning experiment or baseline from a TOML config.
#[derive(Debug, Parser)]
#[command(name = "ulearn", version)]
struct Args {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for results; created if missing.
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Subsample size exponent, r = floor(n^gamma).
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of subsamples or resamples.
    #[arg(long = "B")]
    b: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
}

fn load_config(args: &Args) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let mut cfg: ExperimentConfig =
        toml::from_str(&text).with_context(|| format!("invalid config {}", args.config.display()))?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = Some(w);
    }
    if let Some(m) = args.method {
        cfg.method = m.into();
    }
    if let Some(g) = args.gamma {
        cfg.gamma = Some(g);
        cfg.r = None;
    }
    if let Some(b) = args.b {
        cfg.b = Some(b);
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<()> {
    let cfg = load_config(args)?;
    let res = run_experiment(&cfg)?;
    write_outputs(&cfg, &res, &args.out_dir)
        .with_context(|| format!("cannot write results to {}", args.out_dir.display()))?;
    let s = &res.summary;
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!("method      bias     mae      empsd    se       cp     ail      time(s)");
    println!(
        "{:<11} {:<8.4} {:<8.4} {:<8} {:<8} {:<6.3} {:<8.4} {:.2}",
        cfg.method.name(),
        s.bias,
        s.mae,
        opt(s.emp_sd.is_finite().then_some(s.emp_sd)),
        opt(s.mean_se),
        s.cp,
        s.ail,
        s.runtime_seconds
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("ulearn: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
