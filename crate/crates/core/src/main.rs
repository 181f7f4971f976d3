use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use otoc_sim::analysis::{gradient_ratio, GAMMA_H_RAD_PER_S_T, GAMMA_P_RAD_PER_S_T};
use otoc_sim::config::{preset_config, ExperimentConfig, PRESET_NAMES};
use otoc_sim::runner::{self, WORKERS_ENV};

/// OTOC scrambling simulator for hierarchical star-topology spin registers.
#[derive(Parser)]
#[command(name = "otoc-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a JSON config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dry-run feasibility report for a config (register size, memory,
    /// projected eigensolves).
    Validate {
        config: PathBuf,
    },
    /// Pulsed-field-gradient ratio selecting a coherence order.
    GradientRatio {
        /// Coherence order q.
        #[arg(long, allow_hyphen_values = true)]
        q: i64,
        /// Gyromagnetic ratio of the central species in rad/s/T.
        #[arg(long, default_value_t = GAMMA_P_RAD_PER_S_T)]
        gamma_p: f64,
        /// Gyromagnetic ratio of the first-layer species in rad/s/T.
        #[arg(long, default_value_t = GAMMA_H_RAD_PER_S_T)]
        gamma_h: f64,
    },
    /// Run a named built-in preset.
    Preset {
        /// One of: fig3, fig5, fig6-modes, fig7-ambiguity.
        name: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_workers() {
    if let Ok(value) = std::env::var(WORKERS_ENV) {
        if let Ok(workers) = value.parse::<usize>() {
            if workers >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
                return;
            }
        }
        eprintln!("[otoc-sim] ignoring invalid {WORKERS_ENV}={value}");
    }
}

fn load_config(path: &PathBuf) -> otoc_sim::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let config = ExperimentConfig::from_json(&text)?;
    config.validate()?;
    Ok(config)
}

fn real_main() -> otoc_sim::Result<()> {
    let cli = Cli::parse();
    init_workers();
    match cli.command {
        Command::Run { config, out } => {
            let config = load_config(&config)?;
            let summary = runner::run_with_output(&config, out.as_deref())?;
            println!("config_hash={}", summary.config_hash);
            println!("out_dir={}", summary.out_dir.display());
            println!("manifest={}", summary.out_dir.join("manifest.json").display());
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config)?;
            let config = ExperimentConfig::from_json(&text)?;
            print!("{}", runner::validate(&config));
        }
        Command::GradientRatio { q, gamma_p, gamma_h } => {
            println!("{}", gradient_ratio(q, gamma_p, gamma_h)?);
        }
        Command::Preset { name, out } => {
            if !PRESET_NAMES.contains(&name.as_str()) {
                return Err(otoc_sim::Error::Config(format!(
                    "unknown preset `{name}`; available: {}",
                    PRESET_NAMES.join(", ")
                )));
            }
            let config = preset_config(&name)?;
            let summary = runner::run_with_output(&config, Some(&out))?;
            println!("config_hash={}", summary.config_hash);
            println!("out_dir={}", summary.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let msg = err.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
