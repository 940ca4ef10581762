use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use superhedge_cli::{parse_config, run_experiment, ExperimentError, EXIT_CONFIG, EXIT_FAILURE};

/// Price European claims by super-replication under bid/ask uncertainty and
/// simulate the hedge.
#[derive(Debug, Parser)]
#[command(name = "superhedge", version)]
struct Args {
    /// `key = value` configuration file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// number of simulated paths per strike
    #[arg(long)]
    paths: Option<u64>,
    /// comma-separated strikes
    #[arg(long, value_delimiter = ',')]
    strikes: Option<Vec<f64>>,
    /// output directory
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    dump_paths: bool,
    #[arg(long)]
    histograms: bool,
    #[arg(long)]
    export_strategy: bool,
}

fn load(args: &Args) -> anyhow::Result<superhedge_cli::ExperimentConfig> {
    let text = match &args.config {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?
        }
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.paths {
        cfg.n_paths = n;
    }
    if let Some(strikes) = &args.strikes {
        cfg.strikes = strikes.clone();
    }
    cfg.outputs.dump_paths |= args.dump_paths;
    cfg.outputs.histograms |= args.histograms;
    cfg.outputs.export_strategy |= args.export_strategy;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<std::io::Error>().is_some() {
                EXIT_FAILURE
            } else {
                EXIT_CONFIG
            };
            return ExitCode::from(code as u8);
        }
    };
    print!("{}", cfg.render());
    println!();
    match run_experiment(&cfg, &args.out) {
        Ok(report) => {
            print!("{}", report.stats_table());
            eprintln!(
                "wrote {} files to {}",
                report.files.len(),
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExperimentError::exit_code(&e) as u8)
        }
    }
}
