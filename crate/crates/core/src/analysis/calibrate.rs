//! Evolutionary calibration of Wolf Sheep Predation toward stable,
//! non-extinct populations, and headless replay of a gene vector.

use super::batch::{run_stability_batch, RunPlan, WOLF_SHEEP_MODEL};
use super::ea::{ea_simple, EaConfig, EaOutcome, Lattice};
use super::{invalid, AnalysisError, Result};
use crate::client::{RemoteWorkspace, ServerSession};

/// Best genes and fitness of a published 200 x 100 calibration, kept for
/// comparison only.
pub const REFERENCE_BEST_GENES: [i64; 7] = [236, 3, 1, 47, 92, 0, 97];
pub const REFERENCE_BEST_FITNESS: f64 = 900_000.0;

/// Names and lattices of every numeric parameter, in interface order.
pub fn wsp_gene_space(ws: &RemoteWorkspace) -> Result<(Vec<String>, Vec<Lattice>)> {
    let names = ws.get_param_names()?;
    let ranges = ws.get_param_ranges()?;
    let mut genes = Vec::new();
    let mut lattices = Vec::new();
    for (name, range) in names.iter().zip(&ranges) {
        if range.len() != 3 {
            continue;
        }
        let v: Vec<i64> = range
            .iter()
            .filter_map(|x| x.as_f64())
            .map(|x| x as i64)
            .collect();
        if v.len() != 3 {
            return Err(invalid(format!("range of '{name}' is not numeric")));
        }
        genes.push(name.clone());
        lattices.push(Lattice::new(v[0], v[1], v[2]));
    }
    Ok((genes, lattices))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationConfig {
    pub ea: EaConfig,
    pub ticks: i64,
    pub workers: usize,
}

#[derive(Clone, Debug)]
pub struct Calibration {
    pub gene_names: Vec<String>,
    pub outcome: EaOutcome,
}

/// Runs the EA with stability over `ticks` as fitness. Empty lattices in
/// the config are filled from the model's sliders.
pub fn calibrate(session: &ServerSession, config: &CalibrationConfig) -> Result<Calibration> {
    let probe = session.new_workspace()?;
    let space = probe
        .open_model(WOLF_SHEEP_MODEL)
        .map_err(AnalysisError::from)
        .and_then(|_| wsp_gene_space(&probe));
    probe.delete()?;
    let (gene_names, lattices) = space?;

    let mut ea = config.ea.clone();
    if ea.lattices.is_empty() {
        ea.lattices = lattices;
    } else if ea.lattices.len() != gene_names.len() {
        return Err(invalid(format!(
            "{} lattices given for {} genes",
            ea.lattices.len(),
            gene_names.len()
        )));
    }
    let mut plan = RunPlan::calibration(gene_names.clone(), config.ticks);
    let outcome = ea_simple(&ea, |genes: &[Vec<i64>], seed| -> Result<Vec<f64>> {
        plan.base_seed = seed;
        let rows: Vec<Vec<f64>> = genes
            .iter()
            .map(|g| g.iter().map(|&v| v as f64).collect())
            .collect();
        Ok(run_stability_batch(session, &plan, &rows, config.workers)?)
    })?;
    Ok(Calibration { gene_names, outcome })
}

/// One `(tick, sheep, wolves)` sample.
pub type PopulationSample = (u64, u64, u64);

/// Sets `genes` on a fresh workspace, runs `ticks` ticks (or until the
/// model stops) and returns the population series.
pub fn best_params_replay(
    session: &ServerSession,
    genes: &[i64],
    ticks: i64,
    seed: i64,
) -> Result<Vec<PopulationSample>> {
    let ws = session.new_workspace()?;
    let series = replay_on(&ws, genes, ticks, seed);
    ws.delete()?;
    series
}

fn replay_on(ws: &RemoteWorkspace, genes: &[i64], ticks: i64, seed: i64) -> Result<Vec<PopulationSample>> {
    ws.open_model(WOLF_SHEEP_MODEL)?;
    let (names, lattices) = wsp_gene_space(ws)?;
    if genes.len() != names.len() {
        return Err(invalid(format!(
            "expected {} genes, got {}",
            names.len(),
            genes.len()
        )));
    }
    let mut text = format!("random-seed {seed}");
    for ((name, l), g) in names.iter().zip(&lattices).zip(genes) {
        if !l.contains(*g) {
            return Err(invalid(format!("{name} = {g} is outside {l:?}")));
        }
        text.push_str(&format!(" set {name} {g}"));
    }
    text.push_str(" set model-version \"sheep-wolves-grass\" setup");
    ws.command(&text)?;
    ws.schedule_reporters_and_run(&["ticks", "count sheep", "count wolves"], 0, 1, ticks, "go")?;
    let rows = loop {
        let rows = ws.get_scheduled_reporter_results()?;
        if !rows.is_empty() {
            break rows;
        }
        std::thread::sleep(std::time::Duration::from_millis(1));
    };
    rows.iter()
        .map(|r| {
            let n = |i: usize| r.get(i).and_then(|v| v.parse::<u64>().ok());
            match (n(0), n(1), n(2)) {
                (Some(t), Some(s), Some(w)) => Ok((t, s, w)),
                _ => Err(invalid(format!("unexpected reporter row {r:?}"))),
            }
        })
        .collect()
}
