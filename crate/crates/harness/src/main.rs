use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixfield::ScenarioName;
use mixfield_harness::{load_config, run_experiment, ExperimentKind, ExperimentSpec, HarnessError};

#[derive(Parser)]
#[command(
    name = "mixfield",
    version,
    about = "Near-field / far-field localization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Position RMSE against range for both schemes.
    PosRmse(Common),
    /// Range, azimuth and elevation RMSE against range for both schemes.
    DofAodRmse(Common),
    /// Far-field compatibility against range per height offset and array.
    GSweep(Common),
    /// Adaptive tracking against the single-scheme baselines.
    Tracking(Common),
    /// Distribution of the far-to-near switching range.
    SwitchCdf(Common),
    /// Operation counts against array size and beam ratio.
    Complexity(Common),
    /// Runs whatever experiment a config file names.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<ScenarioName>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// TOML file with settings and overrides; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_scenario(s: &str) -> Result<ScenarioName, String> {
    s.parse().map_err(|e: mixfield::Error| e.to_string())
}

fn resolve(kind: ExperimentKind, c: Common) -> Result<(ExperimentSpec, PathBuf), HarnessError> {
    let mut spec = match &c.config {
        Some(path) => load_config(path, Some(kind))?,
        None => ExperimentSpec::new(kind),
    };
    if let Some(s) = c.scenario {
        spec.scenario = s;
    }
    if let Some(t) = c.trials {
        spec.trials = t;
    }
    if let Some(s) = c.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok((spec, c.out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let resolved = match cli.command {
        Command::PosRmse(c) => resolve(ExperimentKind::PosRmse, c),
        Command::DofAodRmse(c) => resolve(ExperimentKind::DofAodRmse, c),
        Command::GSweep(c) => resolve(ExperimentKind::GSweep, c),
        Command::Tracking(c) => resolve(ExperimentKind::Tracking, c),
        Command::SwitchCdf(c) => resolve(ExperimentKind::SwitchCdf, c),
        Command::Complexity(c) => resolve(ExperimentKind::Complexity, c),
        Command::Run { config, out } => load_config(&config, None).map(|s| (s, out)),
    };
    let outcome = resolved.and_then(|(spec, out)| run_experiment(&spec, &out));
    match outcome {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for path in &summary.artifacts {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
