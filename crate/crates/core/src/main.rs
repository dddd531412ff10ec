use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use wrench_totp::cli::{error_exit_code, run, Mode, RunConfig, RunOptions};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Plan,
    PlanCompare,
    PlanSimulate,
}

/// Minimum-time path parametrization under bounded interaction wrenches.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "plan")]
    mode: ModeArg,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid size as `N_LAMBDAxN_SPEED`, e.g. `500x5000`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Ignore the configured wrench.
    #[arg(long)]
    no_wrench: bool,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected N_LAMBDAxN_SPEED, got `{s}`"))?;
    let n_lambda = a.trim().parse().map_err(|e| format!("bad N_LAMBDA: {e}"))?;
    let n_speed = b.trim().parse().map_err(|e| format!("bad N_SPEED: {e}"))?;
    Ok((n_lambda, n_speed))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mode = match args.mode {
        ModeArg::Plan => Mode::Plan,
        ModeArg::PlanCompare => Mode::PlanCompare,
        ModeArg::PlanSimulate => Mode::PlanSimulate,
    };
    let options = RunOptions {
        out_dir: args.out,
        grid: args.grid,
        no_wrench: args.no_wrench,
        seed: args.seed,
    };
    let result = RunConfig::load(&args.config).and_then(|config| run(&config, mode, &options));
    match result {
        Ok(summary) => {
            print!("{}", summary.report);
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(error_exit_code(&err) as u8)
        }
    }
}
