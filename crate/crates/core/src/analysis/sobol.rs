//! First-order (Saltelli 2010) and total-order (Jansen) index estimates
//! from outputs laid out as produced by [`saltelli_sample`].
//!
//! [`saltelli_sample`]: super::saltelli_sample

use serde::Serialize;

use super::saltelli::SobolProblem;
use super::{invalid, AnalysisError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityResult {
    pub s1: Vec<f64>,
    pub st: Vec<f64>,
    /// `|S1_i|` followed by the interactions remainder `1 - sum |S1_i|`.
    pub s1_with_interactions: Vec<f64>,
    /// `ST_i / sum ST`.
    pub st_relative: Vec<f64>,
}

pub fn sobol_analyze(problem: &SobolProblem, y: &[f64]) -> Result<SensitivityResult> {
    problem.validate()?;
    let d = problem.num_vars;
    let block = problem.block_len();
    if y.is_empty() || !y.len().is_multiple_of(block) {
        return Err(invalid(format!(
            "{} outputs is not a multiple of 2D+2 = {block}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("outputs must be finite"));
    }
    let n = y.len() / block;
    // Centring does not change the estimands but reduces estimator bias.
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let y: Vec<f64> = y.iter().map(|v| v - mean).collect();

    let a: Vec<f64> = (0..n).map(|j| y[j * block]).collect();
    let b: Vec<f64> = (0..n).map(|j| y[j * block + block - 1]).collect();
    let ab = |i: usize, j: usize| y[j * block + 1 + i];

    let ends: Vec<f64> = a.iter().chain(&b).copied().collect();
    let (lo, hi) = ends
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let ends_mean = ends.iter().sum::<f64>() / ends.len() as f64;
    let var = ends.iter().map(|v| (v - ends_mean).powi(2)).sum::<f64>() / ends.len() as f64;
    if hi - lo <= f64::EPSILON || var <= f64::EPSILON {
        return Err(AnalysisError::Degenerate("model output has zero variance".into()));
    }

    let nf = n as f64;
    let s1: Vec<f64> = (0..d)
        .map(|i| (0..n).map(|j| b[j] * (ab(i, j) - a[j])).sum::<f64>() / nf / var)
        .collect();
    let st: Vec<f64> = (0..d)
        .map(|i| 0.5 * (0..n).map(|j| (a[j] - ab(i, j)).powi(2)).sum::<f64>() / nf / var)
        .collect();

    let mut s1_with_interactions: Vec<f64> = s1.iter().map(|v| v.abs()).collect();
    s1_with_interactions.push(1.0 - s1_with_interactions.iter().sum::<f64>());
    let st_sum: f64 = st.iter().sum();
    let st_relative = st.iter().map(|v| v / st_sum).collect();
    Ok(SensitivityResult {
        s1,
        st,
        s1_with_interactions,
        st_relative,
    })
}
