//! Runs many parameter rows on a fixed number of server workspaces.

use std::time::Duration;

use thiserror::Error;

use super::stability::score_rows;
use super::AnalysisError;
use crate::client::{ClientError, RemoteWorkspace, ServerSession};

pub const WOLF_SHEEP_MODEL: &str = "Wolf Sheep Predation.nlogo";
const POLL_INTERVAL: Duration = Duration::from_millis(1);

/// How one row becomes a model run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPlan {
    pub model: String,
    /// Column names of each row. A `random-seed` column reseeds the run;
    /// every other column is set as a parameter.
    pub names: Vec<String>,
    /// Commands issued after the row values and before `setup`.
    pub fixed: Vec<String>,
    pub reporters: Vec<String>,
    pub stop_at_tick: i64,
    pub go_command: String,
    /// Without a `random-seed` column, row `i` is seeded with `base_seed + i`
    /// so results do not depend on which workspace ran the row.
    pub base_seed: i64,
    /// Draw every parameter at random (after seeding) before applying the row.
    pub randomize: bool,
}

impl RunPlan {
    fn wolf_sheep(names: Vec<String>, ticks: i64) -> RunPlan {
        RunPlan {
            model: WOLF_SHEEP_MODEL.to_string(),
            names,
            fixed: vec!["set model-version \"sheep-wolves-grass\"".to_string()],
            reporters: ["ticks", "count sheep", "count wolves"]
                .map(String::from)
                .to_vec(),
            stop_at_tick: ticks,
            go_command: "go".to_string(),
            base_seed: 0,
            randomize: false,
        }
    }

    /// Sensitivity runs: both initial populations fixed at 100.
    pub fn sensitivity(names: Vec<String>, ticks: i64) -> RunPlan {
        let mut plan = Self::wolf_sheep(names, ticks);
        plan.fixed.push("set initial-number-sheep 100".to_string());
        plan.fixed.push("set initial-number-wolves 100".to_string());
        plan
    }

    /// Calibration runs: every column is a gene.
    pub fn calibration(names: Vec<String>, ticks: i64) -> RunPlan {
        Self::wolf_sheep(names, ticks)
    }

    fn seed_text(&self, index: usize) -> Option<String> {
        (!self.names.iter().any(|n| n == "random-seed"))
            .then(|| format!("random-seed {}", self.base_seed + index as i64))
    }

    fn setup_text(&self, index: usize, row: &[f64]) -> String {
        let mut parts = Vec::new();
        if !self.randomize {
            parts.extend(self.seed_text(index));
        }
        for (name, value) in self.names.iter().zip(row) {
            if name == "random-seed" {
                parts.push(format!("random-seed {value}"));
            } else {
                parts.push(format!("set {name} {value}"));
            }
        }
        parts.extend(self.fixed.iter().cloned());
        parts.push("setup".to_string());
        parts.join(" ")
    }
}

#[derive(Debug, Error)]
#[error("batch failed after {} completed runs: {source}", completed.len())]
pub struct BatchError {
    /// Results of the leading runs that finished, in row order.
    pub completed: Vec<Vec<Vec<String>>>,
    #[source]
    pub source: Box<AnalysisError>,
}

/// Runs every row and returns the reporter rows of each run in input order.
pub fn run_batch(
    session: &ServerSession,
    plan: &RunPlan,
    rows: &[Vec<f64>],
    workers: usize,
) -> Result<Vec<Vec<Vec<String>>>, BatchError> {
    let mut results: Vec<Option<Vec<Vec<String>>>> = vec![None; rows.len()];
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let mut pool: Vec<RemoteWorkspace> = Vec::new();
    let outcome = drive(session, plan, rows, workers.max(1), &mut pool, &mut results);
    for ws in &pool {
        let _ = ws.delete();
    }
    match outcome {
        Ok(()) => Ok(results.into_iter().map(Option::unwrap).collect()),
        Err(e) => Err(BatchError {
            completed: results.into_iter().map_while(|r| r).collect(),
            source: Box::new(e),
        }),
    }
}

fn drive(
    session: &ServerSession,
    plan: &RunPlan,
    rows: &[Vec<f64>],
    workers: usize,
    pool: &mut Vec<RemoteWorkspace>,
    results: &mut [Option<Vec<Vec<String>>>],
) -> Result<(), AnalysisError> {
    let reporters: Vec<&str> = plan.reporters.iter().map(String::as_str).collect();
    let start = |ws: &RemoteWorkspace, index: usize| -> Result<(), ClientError> {
        if plan.randomize {
            if let Some(seed) = plan.seed_text(index) {
                ws.command(&seed)?;
            }
            ws.set_params_random()?;
        }
        ws.command(&plan.setup_text(index, &rows[index]))?;
        ws.schedule_reporters_and_run(&reporters, 0, 1, plan.stop_at_tick, &plan.go_command)
    };

    let mut next = 0;
    let mut running: Vec<(RemoteWorkspace, usize)> = Vec::new();
    while next < rows.len() && running.len() < workers {
        let ws = session.new_workspace()?;
        pool.push(ws.clone());
        ws.open_model(&plan.model)?;
        start(&ws, next)?;
        running.push((ws, next));
        next += 1;
    }
    while !running.is_empty() {
        let mut progressed = false;
        let mut i = 0;
        while i < running.len() {
            let (ws, index) = &running[i];
            let rows_out = ws.get_scheduled_reporter_results()?;
            if rows_out.is_empty() {
                i += 1;
                continue;
            }
            progressed = true;
            results[*index] = Some(rows_out);
            if next < rows.len() {
                start(ws, next)?;
                running[i].1 = next;
                next += 1;
                i += 1;
            } else {
                running.swap_remove(i);
            }
        }
        if !progressed {
            std::thread::sleep(POLL_INTERVAL);
        }
    }
    Ok(())
}

/// [`run_batch`] followed by the stability score of each run.
pub fn run_stability_batch(
    session: &ServerSession,
    plan: &RunPlan,
    rows: &[Vec<f64>],
    workers: usize,
) -> Result<Vec<f64>, BatchError> {
    let runs = run_batch(session, plan, rows, workers)?;
    let mut scores = Vec::with_capacity(runs.len());
    for run in &runs {
        match score_rows(run) {
            Ok(s) => scores.push(s),
            Err(e) => {
                return Err(BatchError {
                    completed: runs[..scores.len()].to_vec(),
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(scores)
}
