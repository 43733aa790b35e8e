use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use memgame::experiments::{self, analyze_point, load_config, preset, PRESET_NAMES};
use memgame::{Error, Result};

/// Memory-asymmetric learning in zero-sum games.
#[derive(Parser)]
#[command(name = "memgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a TOML experiment file.
    #[command(group(ArgGroup::new("source").required(true).args(["preset", "config"])))]
    Run {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of samples per case.
        #[arg(long)]
        samples: Option<usize>,
        /// Output directory [default: out/<name>].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a one-memory vs memoryless two-action profile.
    Analyze {
        #[arg(long)]
        point: PathBuf,
    },
    /// Print the preset names.
    ListPresets,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            preset: name,
            config,
            seed,
            samples,
            out,
        } => {
            let mut cfg = match (name, config) {
                (Some(name), _) => preset(&name)?,
                (None, Some(path)) => load_config(&path).map_err(|e| match e {
                    Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
                    other => other,
                })?,
                (None, None) => unreachable!("clap requires a source"),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(samples) = samples {
                cfg.samples = samples;
            }
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            let outcome = experiments::run_experiment(&cfg, &out)?;
            for case in &outcome.cases {
                let converged = case.samples.iter().filter(|s| s.converged == Some(true)).count();
                let final_kl = case.stats.kl_mean.last().copied().unwrap_or(f64::NAN);
                println!(
                    "{}: {} samples, {} converged, {} failed, final mean KL {:.3e}",
                    case.label,
                    case.samples.len(),
                    converged,
                    case.failures(),
                    final_kl
                );
            }
            println!("wrote {}", outcome.out_dir.display());
            match outcome.failures() {
                0 => Ok(()),
                n => Err(Error::Numerical(format!("{n} sample(s) failed; see manifest.json"))),
            }
        }
        Command::Analyze { point } => {
            let analysis = analyze_point(&point).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("cannot read {}: {io}", point.display())),
                other => other,
            })?;
            let json = serde_json::to_string_pretty(&analysis).map_err(|e| Error::Numerical(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
        Command::ListPresets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
