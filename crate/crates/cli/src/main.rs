//! `whitham-lab <experiment> [--config path] [--a.b value ...]`
//!
//! Exit status: 0 success, 1 output error, 2 invalid configuration,
//! 3 numerical failure, 4 failed check.

mod config;
mod experiments;
mod failure;
mod output;

use clap::Parser;
use config::{Experiment, ExperimentConfig};
use failure::Failure;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "whitham-lab",
    version,
    about = "Simulation and analysis experiments for Whitham-type equations",
    after_help = "Any config field can be overridden with its JSON path, e.g. --grid.n_points 512 or --solver.dt=5e-4."
)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON config file; fields left out take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Separates `--a.b value` overrides from the arguments clap knows about.
fn split_args(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut known = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    if let Some(program) = it.next() {
        known.push(program);
    }
    while let Some(arg) = it.next() {
        let is_known_flag = matches!(arg.as_str(), "-h" | "--help" | "-V" | "--version")
            || arg == "--config"
            || arg.starts_with("--config=");
        if is_known_flag || !arg.starts_with("--") {
            let takes_value = arg == "--config";
            known.push(arg);
            if takes_value {
                known.extend(it.next());
            }
        } else {
            let inline = arg.contains('=');
            overrides.push(arg);
            if !inline {
                overrides.extend(it.next());
            }
        }
    }
    (known, overrides)
}

fn run(cli: Cli, overrides: &[String]) -> Result<Vec<String>, Failure> {
    let mut cfg = ExperimentConfig::resolve(cli.config.as_deref(), overrides)?;
    if let Some(e) = cfg.experiment {
        if e != cli.experiment {
            log::warn!("config names experiment `{e}`, running `{}`", cli.experiment);
        }
    }
    cfg.experiment = Some(cli.experiment);
    if let Some(b) = cfg.block_size {
        if b == 0 {
            return Err(Failure::validation("block_size must be at least 1"));
        }
        whitham_core::pseudoproduct::set_block_size(b);
    }
    experiments::run(cli.experiment, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (known, overrides) = split_args(std::env::args().collect());
    let cli = match Cli::try_parse_from(known) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &overrides) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &[&str]) -> Vec<String> {
        s.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn overrides_are_split_from_known_flags() {
        let (known, over) = split_args(v(&["prog", "simulate", "--grid.n_points", "64", "--config", "c.json", "--seed=3"]));
        assert_eq!(known, v(&["prog", "simulate", "--config", "c.json"]));
        assert_eq!(over, v(&["--grid.n_points", "64", "--seed=3"]));
    }

    #[test]
    fn negative_override_values_stay_attached() {
        let (_, over) = split_args(v(&["prog", "simulate", "--symbol.alpha", "-0.5"]));
        assert_eq!(over, v(&["--symbol.alpha", "-0.5"]));
    }
}
