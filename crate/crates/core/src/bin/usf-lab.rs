use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use usf_lab::harness::{self, Experiment, ExperimentConfig};

/// Runs one experiment of the spanning-forest spin field laboratory.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// JSON configuration; flags override its top-level fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { harness::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let mut cfg = match &args.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(harness::exit_code(&e) as u8);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    if let Some(x) = args.experiment {
        cfg.experiment = Some(x);
    }
    match harness::run(&cfg) {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
