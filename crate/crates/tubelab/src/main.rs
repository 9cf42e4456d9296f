use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use tubelab::{run, Experiment, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(
    name = "tubelab",
    about = "Numerical checks on hyperbolic tubes and warped Einstein metrics"
)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("tubelab: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("tubelab: thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let report = match pool.install(|| run(cli.experiment, &cfg)) {
        Ok(r) => r,
        Err(tubelab::RunError::Config(e)) => {
            eprintln!("tubelab: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("tubelab: {e}");
            return ExitCode::from(3);
        }
    };
    let ms = start.elapsed().as_millis();
    if let Err(e) = report.write(&out, ms) {
        eprintln!("tubelab: writing {}: {e}", out.display());
        return ExitCode::from(3);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{}: {} rows, {} violations, {} ms -> {}",
        cli.experiment,
        report.rows,
        report.violations.len(),
        ms,
        report.csv_path(&out).display()
    );
    ExitCode::from(report.exit_code() as u8)
}
