//! Output files: record trace, summary table and config echo.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{
    io_err, summarize, CellSeeds, CellSummary, Result, RunConfig, RunOutput, RunRecord, RunnerError,
};
use crate::paradigms::Condition;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Serialize)]
struct ConfigEcho<'a> {
    #[serde(flatten)]
    config: &'a RunConfig,
    cells: &'a [CellSeeds],
}

/// Wide table: one row per logic and metric, a mean/se/n triple per condition.
pub fn summary_csv(summaries: &[CellSummary]) -> Result<String> {
    let conditions: BTreeSet<Condition> = summaries.iter().map(|s| s.cell.condition).collect();
    let mut rows: Vec<(crate::logics::Logic, String)> = Vec::new();
    for s in summaries {
        let key = (s.cell.logic, s.cell.metric.clone());
        if !rows.contains(&key) {
            rows.push(key);
        }
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["logic".to_string(), "metric".to_string()];
    for c in &conditions {
        header.extend([format!("{c}_mean"), format!("{c}_se"), format!("{c}_n")]);
    }
    writer.write_record(&header)?;
    for (logic, metric) in rows {
        let mut row = vec![logic.to_string(), metric.clone()];
        for c in &conditions {
            match summaries.iter().find(|s| {
                s.cell.logic == logic && s.cell.metric == metric && s.cell.condition == *c
            }) {
                Some(s) => row.extend([
                    format!("{:.6}", s.mean),
                    format!("{:.6}", s.se),
                    s.n.to_string(),
                ]),
                None => row.extend([String::new(), String::new(), "0".to_string()]),
            }
        }
        writer.write_record(&row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| RunnerError::ConfigInvalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn records_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_outputs(output: &RunOutput, config: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))
    };
    write(RECORDS_FILE, records_jsonl(&output.records)?)?;
    write(SUMMARY_FILE, summary_csv(&output.summaries)?)?;
    write(
        CONFIG_FILE,
        toml::to_string(&ConfigEcho {
            config,
            cells: &output.cells,
        })?,
    )?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| RunnerError::Record {
                line: i + 1,
                source,
            })
        })
        .collect()
}

/// Re-aggregates the records trace in `dir` and rewrites its summary table.
pub fn summarize_dir(dir: &Path) -> Result<Vec<CellSummary>> {
    let records = read_records(&dir.join(RECORDS_FILE))?;
    let summaries = summarize(&records)?;
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, summary_csv(&summaries)?).map_err(io_err(&path))?;
    Ok(summaries)
}
