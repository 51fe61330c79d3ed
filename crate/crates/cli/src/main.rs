use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hwsn_cli::config::ExperimentConfig;
use hwsn_cli::presets::{preset, PRESETS};
use hwsn_cli::runner::{load_config_or_manifest, run_experiment};

#[derive(Parser)]
#[command(name = "hwsn", version, about = "Key pre-distribution experiments for grouped sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config, or re-run from a manifest.
    Run {
        path: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a built-in figure experiment.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        name: String,
        /// Paper scale (10 x 10 groups) instead of desk scale.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config and print it normalised.
    Validate { path: PathBuf },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, short, env = "HWSN_OUTPUT_DIR")]
    output: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(o) = &self.output {
            cfg.output_dir = Some(o.clone());
        }
    }
}

fn run(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let out = run_experiment(cfg).with_context(|| format!("experiment {}", cfg.name))?;
    println!("{}: {} rows -> {}", cfg.name, out.rows, out.csv.display());
    println!("{}: manifest -> {}", cfg.name, out.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { path, overrides } => load_config_or_manifest(&path).and_then(|mut cfg| {
            overrides.apply(&mut cfg);
            run(&cfg)
        }),
        Command::Preset { name, full, overrides } => preset(&name, full).and_then(|cfgs| {
            for mut cfg in cfgs {
                overrides.apply(&mut cfg);
                run(&cfg)?;
            }
            Ok(())
        }),
        Command::Validate { path } => ExperimentConfig::load(&path).map(|cfg| println!("{}", cfg.to_json())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
