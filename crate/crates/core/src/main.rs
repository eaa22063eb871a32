use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use attitude_core::logics::Logic;
use attitude_core::paradigms::{Condition, Experiment};
use attitude_core::runner::{self, BackendSelector, RunConfig};

#[derive(Parser)]
#[command(
    name = "attitude-sim",
    version,
    about = "Run seeded attitude-change simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (logic, condition) cell and write records, summary and config echo.
    Run(RunArgs),
    /// Re-run a single simulation and print its record.
    Replay {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the full event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Re-aggregate an output directory's records into its summary table.
    Summarize { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<Experiment>,
    /// Repeatable; defaults to every condition of the experiment.
    #[arg(long = "condition")]
    conditions: Vec<Condition>,
    /// Repeatable; defaults to all four logics.
    #[arg(long = "logic")]
    logics: Vec<Logic>,
    #[arg(long)]
    affirmation: bool,
    /// Simulations per cell.
    #[arg(long)]
    n: Option<u32>,
    /// Base seed; replay uses it as the exact seed.
    #[arg(long)]
    seed: Option<u64>,
    /// offline, scripted or live.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    script_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
}

impl RunArgs {
    fn into_config(self) -> anyhow::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => {
                let Some(experiment) = self.experiment else {
                    bail!("--experiment or --config is required")
                };
                RunConfig {
                    experiment,
                    conditions: experiment.conditions().to_vec(),
                    logics: Logic::ALL.to_vec(),
                    affirmation: false,
                    n_per_cell: 1,
                    base_seed: 0,
                    backend: BackendSelector::Offline,
                    out: PathBuf::from("out"),
                    parallelism: None,
                    scenario_dir: None,
                    persona: Default::default(),
                }
            }
        };
        if let Some(e) = self.experiment {
            if e != config.experiment {
                config.conditions = e.conditions().to_vec();
            }
            config.experiment = e;
        }
        if !self.conditions.is_empty() {
            config.conditions = self.conditions;
        }
        if !self.logics.is_empty() {
            config.logics = self.logics;
        }
        config.affirmation |= self.affirmation;
        if let Some(n) = self.n {
            config.n_per_cell = n;
        }
        if let Some(seed) = self.seed {
            config.base_seed = seed;
        }
        if let Some(backend) = self.backend.as_deref() {
            config.backend = match backend {
                "offline" => BackendSelector::Offline,
                "live" => BackendSelector::Live,
                "scripted" => BackendSelector::Scripted {
                    script_dir: self
                        .script_dir
                        .clone()
                        .context("--backend scripted needs --script-dir")?,
                },
                other => bail!("unknown backend {other:?}"),
            };
        } else if let Some(dir) = self.script_dir {
            config.backend = BackendSelector::Scripted { script_dir: dir };
        }
        if let Some(out) = self.out {
            config.out = out;
        }
        if self.parallelism.is_some() {
            config.parallelism = self.parallelism;
        }
        config.validate()?;
        Ok(config)
    }
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run(args) => {
            let config = args.into_config()?;
            let output = runner::run(&config)?;
            runner::emit_outputs(&output, &config, &config.out)?;
            print!("{}", runner::summary_csv(&output.summaries)?);
            eprintln!(
                "{} records, {} discarded attempts, written to {}",
                output.records.len(),
                output.failures.len(),
                config.out.display()
            );
        }
        Command::Replay { run, trace } => {
            let config = run.into_config()?;
            let (&logic, &condition) =
                match (config.logics.as_slice(), config.conditions.as_slice()) {
                    ([l], [c]) => (l, c),
                    _ => bail!("replay needs exactly one --logic and one --condition"),
                };
            let sim = runner::replay(&config, logic, condition, config.base_seed)?;
            if let Some(path) = trace {
                std::fs::write(&path, serde_json::to_string_pretty(&sim.trace)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&sim.record)?);
        }
        Command::Summarize { dir } => {
            let summaries = runner::summarize_dir(&dir)?;
            print!("{}", runner::summary_csv(&summaries)?);
        }
    }
    Ok(())
}
