//! Seeded experiment runs: configuration, parallel simulation, aggregation
//! and output files.

mod aggregate;
mod output;
mod record;

pub use aggregate::{aggregate, summarize, CellId, CellSummary};
pub use output::{
    emit_outputs, read_records, summarize_dir, summary_csv, CONFIG_FILE, RECORDS_FILE, SUMMARY_FILE,
};
pub use record::{
    simulate, ItemRatingState, RunRecord, Simulation, SimulationError, SimulationSpec, WormChoice,
};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::live::ChatCompletionBackend;
use crate::gateway::scripted::ScriptedBackend;
use crate::gateway::{GatewayError, LanguageModel};
use crate::logics::Logic;
use crate::paradigms::{Condition, Experiment, ParadigmError, ScenarioLibrary};
use crate::persona::PersonaConfig;

pub const OFFLINE_SCRIPT: &str = include_str!("../../assets/scripts/offline.toml");
/// Total attempts allowed per cell, as a multiple of the cell size.
pub const RETRY_FACTOR: u32 = 3;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid run config: {0}")]
    ConfigInvalid(String),
    #[error("cell {logic}/{condition}: only {completed} of {needed} simulations succeeded after {attempts} attempts")]
    RetryBudgetExhausted {
        logic: Logic,
        condition: Condition,
        completed: usize,
        needed: usize,
        attempts: u32,
    },
    #[error("cannot aggregate an empty cell")]
    EmptyCell,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("record line {line}: {source}")]
    Record {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TomlRead(#[from] toml::de::Error),
    #[error(transparent)]
    TomlWrite(#[from] toml::ser::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Paradigm(#[from] ParadigmError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

pub type Result<T> = std::result::Result<T, RunnerError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSelector {
    /// The built-in offline script.
    Offline,
    /// Every `*.toml` script in a directory, in file-name order.
    Scripted { script_dir: PathBuf },
    /// Chat-completions endpoint configured through the environment.
    Live,
}

impl BackendSelector {
    pub fn build(&self) -> Result<Arc<dyn LanguageModel>> {
        Ok(match self {
            BackendSelector::Offline => Arc::new(ScriptedBackend::from_toml(OFFLINE_SCRIPT)?),
            BackendSelector::Scripted { script_dir } => {
                Arc::new(ScriptedBackend::from_dir(script_dir)?)
            }
            BackendSelector::Live => Arc::new(ChatCompletionBackend::from_env()?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub conditions: Vec<Condition>,
    pub logics: Vec<Logic>,
    #[serde(default)]
    pub affirmation: bool,
    pub n_per_cell: u32,
    #[serde(default)]
    pub base_seed: u64,
    pub backend: BackendSelector,
    pub out: PathBuf,
    /// Worker threads; defaults to the number of cells.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Overrides the built-in scenario files.
    #[serde(default)]
    pub scenario_dir: Option<PathBuf>,
    #[serde(default)]
    pub persona: PersonaConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RunnerError::ConfigInvalid(m));
        if self.n_per_cell == 0 {
            return bad("n_per_cell must be at least 1".into());
        }
        if self.conditions.is_empty() || self.logics.is_empty() {
            return bad("at least one condition and one logic are required".into());
        }
        if let Some(c) = self
            .conditions
            .iter()
            .find(|c| c.experiment() != self.experiment)
        {
            return bad(format!(
                "condition {c} does not belong to {}",
                self.experiment
            ));
        }
        if self.conditions.iter().collect::<BTreeSet<_>>().len() != self.conditions.len() {
            return bad("conditions are listed more than once".into());
        }
        if self.logics.iter().collect::<BTreeSet<_>>().len() != self.logics.len() {
            return bad("logics are listed more than once".into());
        }
        if self.parallelism == Some(0) {
            return bad("parallelism must be at least 1".into());
        }
        self.persona
            .validate()
            .map_err(|e| RunnerError::ConfigInvalid(e.to_string()))
    }

    /// Every (logic, condition) cell, each exactly once.
    pub fn cells(&self) -> Vec<(Logic, Condition)> {
        self.logics
            .iter()
            .flat_map(|l| self.conditions.iter().map(move |c| (*l, *c)))
            .collect()
    }

    pub fn scenarios(&self) -> Result<ScenarioLibrary> {
        Ok(match &self.scenario_dir {
            Some(dir) => ScenarioLibrary::from_dir(dir)?,
            None => ScenarioLibrary::builtin()?,
        })
    }

    pub fn spec(&self, logic: Logic, condition: Condition, seed: u64) -> SimulationSpec {
        SimulationSpec {
            experiment: self.experiment,
            condition,
            affirmation: self.affirmation,
            logic,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub logic: Logic,
    pub condition: Condition,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSeeds {
    pub logic: Logic,
    pub condition: Condition,
    pub seeds: Vec<u64>,
    pub failed_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<CellSummary>,
    pub failures: Vec<FailureRecord>,
    pub cells: Vec<CellSeeds>,
}

struct CellRun {
    records: Vec<RunRecord>,
    failures: Vec<FailureRecord>,
    seeds: CellSeeds,
}

fn run_cell(
    config: &RunConfig,
    logic: Logic,
    condition: Condition,
    backend: &Arc<dyn LanguageModel>,
    scenarios: &ScenarioLibrary,
) -> Result<CellRun> {
    let needed = config.n_per_cell as usize;
    let budget = config.n_per_cell * RETRY_FACTOR;
    let mut attempts = 0u32;
    let mut records = Vec::with_capacity(needed);
    let mut failures = Vec::new();
    // Each wave launches exactly as many fresh seeds as are still missing,
    // so the seeds used do not depend on thread timing.
    while records.len() < needed && attempts < budget {
        let wave = ((needed - records.len()) as u32).min(budget - attempts);
        let seeds: Vec<u64> = (attempts..attempts + wave)
            .map(|j| config.base_seed + u64::from(j))
            .collect();
        attempts += wave;
        let results: Vec<(u64, std::result::Result<Simulation, SimulationError>)> = seeds
            .par_iter()
            .map(|&seed| {
                (
                    seed,
                    simulate(
                        config.spec(logic, condition, seed),
                        backend.clone(),
                        &config.persona,
                        scenarios,
                    ),
                )
            })
            .collect();
        for (seed, result) in results {
            match result {
                Ok(sim) => {
                    tracing::debug!(%logic, %condition, seed, calls = sim.record.gateway_calls, "simulation finished");
                    records.push(sim.record);
                }
                Err(e) => {
                    tracing::warn!(%logic, %condition, seed, error = %e, "simulation discarded; resampling");
                    failures.push(FailureRecord {
                        logic,
                        condition,
                        seed,
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    if records.len() < needed {
        return Err(RunnerError::RetryBudgetExhausted {
            logic,
            condition,
            completed: records.len(),
            needed,
            attempts,
        });
    }
    let seeds = CellSeeds {
        logic,
        condition,
        seeds: records.iter().map(|r| r.seed).collect(),
        failed_seeds: failures.iter().map(|f| f.seed).collect(),
    };
    Ok(CellRun {
        records,
        failures,
        seeds,
    })
}

/// Runs every cell, then aggregates once all simulations have finished.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let backend = config.backend.build()?;
    let scenarios = config.scenarios()?;
    let cells = config.cells();
    let threads = config.parallelism.unwrap_or(cells.len()).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunnerError::ConfigInvalid(format!("thread pool: {e}")))?;
    let runs: Vec<Result<CellRun>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(logic, condition)| run_cell(config, logic, condition, &backend, &scenarios))
            .collect()
    });
    let mut output = RunOutput {
        records: Vec::new(),
        summaries: Vec::new(),
        failures: Vec::new(),
        cells: Vec::new(),
    };
    for run in runs {
        let run = run?;
        output.records.extend(run.records);
        output.failures.extend(run.failures);
        output.cells.push(run.seeds);
    }
    output
        .records
        .sort_by_key(|r| (r.logic, r.condition, r.seed));
    output.summaries = summarize(&output.records)?;
    Ok(output)
}

/// Re-runs one simulation from its seed.
pub fn replay(
    config: &RunConfig,
    logic: Logic,
    condition: Condition,
    seed: u64,
) -> Result<Simulation> {
    let backend = config.backend.build()?;
    let scenarios = config.scenarios()?;
    Ok(simulate(
        config.spec(logic, condition, seed),
        backend,
        &config.persona,
        &scenarios,
    )?)
}
