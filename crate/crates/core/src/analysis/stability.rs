//! Mean total population stability of a two-species run.

use super::{invalid, Result};

/// Added to every absolute change before taking its reciprocal.
pub const EPSILON: f64 = 1e-6;

/// Stability of one species at one tick: the reciprocal of its absolute
/// change plus [`EPSILON`], or zero once the species is extinct.
///
/// Written as `1e6 / (1e6 * d + 1)` so that a zero change yields exactly
/// `1e6`, which `1.0 / (0.0 + 1e-6)` does not.
pub fn species_stability(previous: f64, current: f64) -> f64 {
    if current > 0.0 {
        let d = (current - previous).abs();
        (1.0 / EPSILON) / (d / EPSILON + 1.0)
    } else {
        0.0
    }
}

/// Averages `(E_sheep + E_wolves) / 2` over ticks `1..=k`. The first sample
/// has no predecessor and contributes no term.
pub fn stability_score(sheep: &[f64], wolves: &[f64]) -> Result<f64> {
    if sheep.len() != wolves.len() {
        return Err(invalid(format!(
            "series lengths differ: {} sheep samples, {} wolf samples",
            sheep.len(),
            wolves.len()
        )));
    }
    if sheep.len() < 2 {
        return Err(invalid("at least two samples are needed"));
    }
    if sheep.iter().chain(wolves).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("population counts must be finite and non-negative"));
    }
    let k = sheep.len() - 1;
    let total: f64 = (1..=k)
        .map(|t| {
            (species_stability(sheep[t - 1], sheep[t]) + species_stability(wolves[t - 1], wolves[t])) / 2.0
        })
        .sum();
    Ok(total / k as f64)
}

/// Scores rows of `[ticks, sheep, wolves]` reporter strings.
pub fn score_rows(rows: &[Vec<String>]) -> Result<f64> {
    let column = |i: usize| -> Result<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| invalid(format!("row {r:?} has no numeric column {i}")))
            })
            .collect()
    };
    stability_score(&column(1)?, &column(2)?)
}
