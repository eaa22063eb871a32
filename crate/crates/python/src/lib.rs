//! Python bindings: offline simulations, full runs and the small pure helpers.
//! Structured results cross the boundary as JSON and come back as dicts.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use attitude_core::gateway::scripted::ScriptedBackend;
use attitude_core::gateway::LanguageModel;
use attitude_core::logics::Logic;
use attitude_core::paradigms::{self, Condition, Experiment, ScenarioLibrary};
use attitude_core::persona::PersonaConfig;
use attitude_core::runner::{self, RunConfig, SimulationSpec, OFFLINE_SCRIPT};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_python<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

/// Runs one simulation and returns its record. Without `script_dir` the
/// built-in offline script answers every prompt.
#[pyfunction]
#[pyo3(signature = (experiment, condition, logic, seed, affirmation=false, script_dir=None))]
fn simulate<'py>(
    py: Python<'py>,
    experiment: &str,
    condition: &str,
    logic: &str,
    seed: u64,
    affirmation: bool,
    script_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = SimulationSpec {
        experiment: experiment.parse::<Experiment>().map_err(value_err)?,
        condition: condition.parse::<Condition>().map_err(value_err)?,
        logic: logic.parse::<Logic>().map_err(value_err)?,
        affirmation,
        seed,
    };
    let backend: Arc<dyn LanguageModel> = Arc::new(match script_dir {
        Some(dir) => ScriptedBackend::from_dir(&dir).map_err(value_err)?,
        None => ScriptedBackend::from_toml(OFFLINE_SCRIPT).map_err(runtime_err)?,
    });
    let library = ScenarioLibrary::builtin().map_err(runtime_err)?;
    let sim = py
        .detach(|| runner::simulate(spec, backend, &PersonaConfig::default(), &library))
        .map_err(runtime_err)?;
    to_python(py, &serde_json::to_value(&sim.record).map_err(runtime_err)?)
}

/// Runs a whole experiment from a TOML config. Writes the output files when
/// `write` is set; returns records, summaries and failures either way.
#[pyfunction]
#[pyo3(signature = (config_toml, write=false))]
fn run<'py>(py: Python<'py>, config_toml: &str, write: bool) -> PyResult<Bound<'py, PyAny>> {
    let config = RunConfig::from_toml(config_toml).map_err(value_err)?;
    let output = py.detach(|| runner::run(&config)).map_err(runtime_err)?;
    if write {
        runner::emit_outputs(&output, &config, &config.out).map_err(runtime_err)?;
    }
    let summaries: Vec<serde_json::Value> = output
        .summaries
        .iter()
        .map(|s| {
            serde_json::json!({
                "logic": s.cell.logic,
                "condition": s.cell.condition,
                "metric": s.cell.metric,
                "n": s.n,
                "mean": s.mean,
                "se": s.se,
            })
        })
        .collect();
    let value = serde_json::json!({
        "records": output.records,
        "summaries": summaries,
        "failures": output.failures,
        "cells": output.cells,
    });
    to_python(py, &value)
}

/// Mean and standard error of the mean.
#[pyfunction]
fn aggregate(values: Vec<f64>) -> PyResult<(f64, f64)> {
    runner::aggregate(&values).map_err(value_err)
}

/// Index pairs whose ratings fit an item-rating condition.
#[pyfunction]
fn qualifying_pairs(ratings: Vec<u8>, condition: &str) -> PyResult<Vec<(usize, usize)>> {
    let condition = condition.parse::<Condition>().map_err(value_err)?;
    paradigms::qualifying_pairs(&ratings, condition).map_err(value_err)
}

/// The pair of item names presented for the final choice.
#[pyfunction]
fn select_choice_pair(ratings: Vec<(String, u8)>, condition: &str, seed: u64) -> PyResult<(String, String)> {
    let condition = condition.parse::<Condition>().map_err(value_err)?;
    paradigms::select_choice_pair(&ratings, condition, seed).map_err(value_err)
}

#[pyfunction]
fn experiments<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for e in Experiment::ALL {
        let conditions: Vec<&str> = e.conditions().iter().map(|c| c.as_str()).collect();
        out.set_item(e.as_str(), conditions)?;
    }
    Ok(out)
}

#[pymodule]
fn attitude_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(qualifying_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(select_choice_pair, m)?)?;
    m.add_function(wrap_pyfunction!(experiments, m)?)?;
    m.add("LOGICS", Logic::ALL.iter().map(|l| l.to_string()).collect::<Vec<_>>())?;
    Ok(())
}
