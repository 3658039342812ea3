//! Wall-clock benchmark: many randomized runs over a pool of workspaces.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::analysis::{run_batch, BatchError, RunPlan};
use crate::client::ServerSession;

pub const CONNECTOR: &str = "simherd";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchModel {
    WolfSheep,
    Fire,
}

impl BenchModel {
    pub fn parse(s: &str) -> Option<BenchModel> {
        match s.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "wolf-sheep" | "wolf-sheep-predation" | "wolfsheeppredation" | "wsp" => {
                Some(BenchModel::WolfSheep)
            }
            "fire" => Some(BenchModel::Fire),
            _ => None,
        }
    }

    /// Label used in the CSV's first column.
    pub fn label(self) -> &'static str {
        match self {
            BenchModel::WolfSheep => "WolfSheepPredation",
            BenchModel::Fire => "Fire",
        }
    }

    pub fn model_file(self) -> &'static str {
        match self {
            BenchModel::WolfSheep => "Wolf Sheep Predation.nlogo",
            BenchModel::Fire => "Fire.nlogo",
        }
    }
}

/// Runs `runs` seeded runs with random parameters for up to `ticks` ticks
/// on `workers` workspaces and returns the elapsed wall time.
pub fn run_bench(
    session: &ServerSession,
    model: BenchModel,
    runs: usize,
    workers: usize,
    ticks: i64,
) -> Result<Duration, BatchError> {
    let plan = RunPlan {
        model: model.model_file().to_string(),
        names: Vec::new(),
        fixed: Vec::new(),
        reporters: vec!["ticks".to_string()],
        stop_at_tick: ticks,
        go_command: "go".to_string(),
        base_seed: 0,
        randomize: true,
    };
    let start = Instant::now();
    run_batch(session, &plan, &vec![Vec::new(); runs], workers)?;
    Ok(start.elapsed())
}

/// Appends `model,runs,connector,millis`.
pub fn append_row(out: &Path, model: BenchModel, runs: usize, elapsed: Duration) -> std::io::Result<String> {
    let line = format!("{},{},{},{}", model.label(), runs, CONNECTOR, elapsed.as_millis());
    let mut f = OpenOptions::new().create(true).append(true).open(out)?;
    writeln!(f, "{line}")?;
    Ok(line)
}
