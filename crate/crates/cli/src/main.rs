use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use quadgrad_cli::{parse_config, run, CliError, Scenario};

#[derive(Debug, Parser)]
#[command(name = "quadgrad", version, about = "Experiments for -Δu = λc u + μ|∇u|² + h with Dirichlet data")]
struct Cli {
    scenario: Scenario,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random multistarts; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = parse_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(|d| cfg.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let report = run(cli.scenario, &cfg, &out)?;
    for o in &report.outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    eprintln!(
        "{} finished in {:.2} s, artifacts in {}",
        report.scenario,
        started.elapsed().as_secs_f64(),
        out.display()
    );
    match report.failures() {
        0 => Ok(()),
        n => Err(CliError::Assertion(n)),
    }
}
