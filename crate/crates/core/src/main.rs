use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use cstraj::cli::{run, CliError};
use cstraj::config::{Mode, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Trajectory,
    Propagate,
    Exact,
    Compare,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Trajectory => Mode::Trajectory,
            ModeArg::Propagate => Mode::Propagate,
            ModeArg::Exact => Mode::Exact,
            ModeArg::Compare => Mode::Compare,
        }
    }
}

/// Semiclassical coherent-state propagator from complex classical trajectories.
///
/// Exit status: 0 on success, 2 on numerical failure (including truncated
/// sweeps, whose completed rows are still written), 3 on configuration errors.
#[derive(Debug, Parser)]
#[command(name = "cstraj", version)]
struct Args {
    mode: ModeArg,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override one configuration value, e.g. `--set sweep.n_t=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; replaces `output` from the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cstraj: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(cstraj::config::ConfigError {
            location: args.config.display().to_string(),
            message: e.to_string(),
        })
    })?;
    let config = RunConfig::from_json(&text, &args.set)?;
    let mode = Mode::from(args.mode);
    if let Some(m) = config.mode {
        if m != mode {
            log::warn!("config mode `{m}` overridden by command-line mode `{mode}`");
        }
    }
    let output = args.output.as_ref().or(config.output.as_ref());
    run(mode, &config, output.map(PathBuf::as_path))
}
