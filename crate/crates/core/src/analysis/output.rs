//! Plot-ready CSV and JSON files for the analysis pipelines.

use std::fs::File;
use std::path::Path;

use serde_json::json;

use super::ea::EaOutcome;
use super::sa::SaRun;
use super::saltelli::SobolProblem;
use super::Result;

pub const S1_FILE: &str = "sa_s1.csv";
pub const ST_FILE: &str = "sa_st_relative.csv";
pub const LOG_FILE: &str = "calibration_log.csv";
pub const HOF_FILE: &str = "hall_of_fame.json";

/// Writes `sa_s1.csv` (`sample_size, names..., interactions`) and
/// `sa_st_relative.csv` (`sample_size, names...`).
pub fn write_sensitivity(dir: &Path, problem: &SobolProblem, runs: &[SaRun]) -> Result<()> {
    let mut s1 = csv::Writer::from_path(dir.join(S1_FILE))?;
    let mut header = vec!["sample_size".to_string()];
    header.extend(problem.names.iter().cloned());
    let mut st = csv::Writer::from_path(dir.join(ST_FILE))?;
    st.write_record(&header)?;
    header.push("interactions".to_string());
    s1.write_record(&header)?;
    for run in runs {
        let row = |values: &[f64]| {
            std::iter::once(run.sample_size.to_string())
                .chain(values.iter().map(f64::to_string))
                .collect::<Vec<_>>()
        };
        s1.write_record(row(&run.result.s1_with_interactions))?;
        st.write_record(row(&run.result.st_relative))?;
    }
    s1.flush()?;
    st.flush()?;
    Ok(())
}

/// Writes `calibration_log.csv` (`gen, max, mean`) and `hall_of_fame.json`.
pub fn write_calibration(dir: &Path, gene_names: &[String], outcome: &EaOutcome) -> Result<()> {
    let mut log = csv::Writer::from_path(dir.join(LOG_FILE))?;
    log.write_record(["gen", "max", "mean"])?;
    for g in &outcome.log {
        log.write_record([g.gen.to_string(), g.max.to_string(), g.mean.to_string()])?;
    }
    log.flush()?;

    let hof: Vec<_> = outcome
        .hall_of_fame
        .iter()
        .map(|ind| {
            let params: serde_json::Map<_, _> = gene_names
                .iter()
                .cloned()
                .zip(ind.genes.iter().map(|g| json!(g)))
                .collect();
            json!({ "genes": ind.genes, "params": params, "fitness": ind.fitness })
        })
        .collect();
    let file = File::create(dir.join(HOF_FILE))?;
    serde_json::to_writer_pretty(file, &json!({ "gene_names": gene_names, "hall_of_fame": hof }))
        .map_err(std::io::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ea::{GenerationStats, Individual};
    use crate::analysis::SensitivityResult;

    #[test]
    fn sensitivity_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let problem = SobolProblem::new(vec!["a".into(), "b".into()], vec![[0.0, 1.0]; 2]).unwrap();
        let run = SaRun {
            sample_size: 8,
            evaluations: 48,
            result: SensitivityResult {
                s1: vec![0.5, -0.25],
                st: vec![0.6, 0.3],
                s1_with_interactions: vec![0.5, 0.25, 0.25],
                st_relative: vec![2.0 / 3.0, 1.0 / 3.0],
            },
        };
        write_sensitivity(dir.path(), &problem, &[run]).unwrap();
        let mut r = csv::Reader::from_path(dir.path().join(S1_FILE)).unwrap();
        assert_eq!(
            r.headers().unwrap(),
            vec!["sample_size", "a", "b", "interactions"]
        );
        let rows: Vec<Vec<f64>> = r
            .records()
            .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows, vec![vec![8.0, 0.5, 0.25, 0.25]]);
        let mut r = csv::Reader::from_path(dir.path().join(ST_FILE)).unwrap();
        let rec = r.records().next().unwrap().unwrap();
        assert_eq!(rec[1].parse::<f64>().unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn calibration_files() {
        let dir = tempfile::tempdir().unwrap();
        let stats = |gen| GenerationStats {
            gen,
            evals: 3,
            max: 2.5,
            mean: 1.0,
            best: 2.5,
        };
        let outcome = EaOutcome {
            hall_of_fame: vec![Individual {
                genes: vec![1, 2],
                fitness: Some(2.5),
            }],
            initial: stats(0),
            log: vec![stats(1), stats(2)],
            population: Vec::new(),
        };
        write_calibration(dir.path(), &["x".into(), "y".into()], &outcome).unwrap();
        let text = std::fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
        assert_eq!(text, "gen,max,mean\n1,2.5,1\n2,2.5,1\n");
        let hof: serde_json::Value =
            serde_json::from_reader(File::open(dir.path().join(HOF_FILE)).unwrap()).unwrap();
        assert_eq!(hof["hall_of_fame"][0]["params"]["y"], 2);
    }
}
