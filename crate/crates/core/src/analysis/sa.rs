//! Sobol' sensitivity analysis of Wolf Sheep Predation over its population
//! parameters, with the run seed as an extra input.

use serde::Serialize;

use super::batch::{run_stability_batch, RunPlan, WOLF_SHEEP_MODEL};
use super::saltelli::{saltelli_sample, BaseSequence, SobolProblem};
use super::sobol::{sobol_analyze, SensitivityResult};
use super::{invalid, Result};
use crate::client::{RemoteWorkspace, ServerSession};

pub const SEED_BOUNDS: [f64; 2] = [1.0, 100000.0];

/// `random-seed` plus every numeric parameter except the two initial
/// population sizes, with bounds read from the workspace's sliders.
pub fn wsp_problem(ws: &RemoteWorkspace) -> Result<SobolProblem> {
    let names = ws.get_param_names()?;
    let ranges = ws.get_param_ranges()?;
    let mut problem_names = vec!["random-seed".to_string()];
    let mut bounds = vec![SEED_BOUNDS];
    for (name, range) in names.iter().zip(&ranges) {
        if range.len() != 3 || name.starts_with("initial-number-") {
            continue;
        }
        let num = |i: usize| {
            range[i]
                .as_f64()
                .ok_or_else(|| invalid(format!("range of '{name}' is not numeric")))
        };
        problem_names.push(name.clone());
        bounds.push([num(0)?, num(2)?]);
    }
    SobolProblem::new(problem_names, bounds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaConfig {
    pub sample_sizes: Vec<usize>,
    pub workers: usize,
    pub ticks: i64,
    pub base: BaseSequence,
    /// Replaces the problem read from the model.
    pub problem: Option<SobolProblem>,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            sample_sizes: vec![8, 16, 32],
            workers: crate::server::default_workers(),
            ticks: 100,
            base: BaseSequence::default(),
            problem: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaRun {
    pub sample_size: usize,
    pub evaluations: usize,
    pub result: SensitivityResult,
}

pub fn run_sensitivity(session: &ServerSession, config: &SaConfig) -> Result<(SobolProblem, Vec<SaRun>)> {
    let problem = match &config.problem {
        Some(p) => {
            p.validate()?;
            p.clone()
        }
        None => {
            let probe = session.new_workspace()?;
            let problem = probe
                .open_model(WOLF_SHEEP_MODEL)
                .map_err(Into::into)
                .and_then(|_| wsp_problem(&probe));
            probe.delete()?;
            problem?
        }
    };

    let plan = RunPlan::sensitivity(problem.names.clone(), config.ticks);
    let mut runs = Vec::new();
    for &n in &config.sample_sizes {
        let x = saltelli_sample(&problem, n, &config.base)?;
        log::info!("sample size {n}: {} model runs", x.len());
        let y = run_stability_batch(session, &plan, &x, config.workers)?;
        runs.push(SaRun {
            sample_size: n,
            evaluations: y.len(),
            result: sobol_analyze(&problem, &y)?,
        });
    }
    Ok((problem, runs))
}
