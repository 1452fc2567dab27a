use std::path::PathBuf;
use std::process::ExitCode;

use automl_core::data::Config;
use automl_core::pipeline::{Experiment, Filter};
use automl_core::simgen::{generate, parse_params, write_simulation};
use automl_core::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "automl", version, about = "Automated machine-learning pipeline for binary classification")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Overrides one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Shorthand for `--set experiment_path=...`.
    #[arg(long, global = true)]
    experiment_path: Option<String>,

    /// Shorthand for `--set random_seed=...`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs every phase that is not already current.
    Run,
    /// Runs one phase (1 to 9), optionally restricted to part of its work.
    Phase {
        n: u8,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        fold: Option<usize>,
        #[arg(long)]
        algorithm: Option<String>,
    },
    /// Evaluates trained models on a replication data file.
    Replicate { path: PathBuf },
    /// Rebuilds the summary reports from stored artifacts.
    Report,
    /// Writes a simulated benchmark dataset, e.g. `simulate xor "order=2, features=20"`.
    Simulate {
        generator: String,
        #[arg(default_value = "")]
        params: String,
        /// Output file; defaults to `<generator>.csv`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn overrides(cli: &Cli) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    if let Some(p) = &cli.experiment_path {
        out.push(("experiment_path".to_string(), p.clone()));
    }
    if let Some(s) = cli.seed {
        out.push(("random_seed".to_string(), s.to_string()));
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(vec![format!("--set expects KEY=VALUE, got '{kv}'")]))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn experiment(cli: &Cli) -> Result<Experiment, Error> {
    let overrides = overrides(cli)?;
    match &cli.config {
        Some(path) => Experiment::from_file(path, &overrides),
        None => {
            let mut config = Config::default();
            let errors: Vec<String> = overrides.iter().filter_map(|(k, v)| config.set(k, v).err()).collect();
            if !errors.is_empty() {
                return Err(Error::Config(errors));
            }
            Experiment::new(config)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Run => experiment(cli)?.run(),
        Command::Phase {
            n,
            dataset,
            fold,
            algorithm,
        } => {
            let algorithm = algorithm
                .as_deref()
                .map(|a| a.parse().map_err(|e: String| Error::Config(vec![e])))
                .transpose()?;
            let filter = Filter {
                dataset: dataset.clone(),
                fold: *fold,
                algorithm,
            };
            experiment(cli)?.run_phase(*n, &filter)
        }
        Command::Replicate { path } => experiment(cli)?.replicate(path),
        Command::Report => {
            let path = experiment(cli)?.report()?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Simulate {
            generator,
            params,
            output,
        } => {
            let params = parse_params(params).map_err(|e| Error::Config(vec![e.to_string()]))?;
            let (ds, resolved) = generate(generator, &params).map_err(|e| Error::Config(vec![e.to_string()]))?;
            let path = output.clone().unwrap_or_else(|| PathBuf::from(format!("{generator}.csv")));
            write_simulation(&ds, &resolved, &path)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Prerequisite(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
