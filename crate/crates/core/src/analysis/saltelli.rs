//! Saltelli cross-sampling for first- and total-order Sobol' indices.

use serde::{Deserialize, Serialize};

use super::sobol_seq::{Sobol, MAX_DIMS};
use super::{invalid, Result};
use crate::engine::Prng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolProblem {
    pub num_vars: usize,
    pub names: Vec<String>,
    pub bounds: Vec<[f64; 2]>,
}

impl SobolProblem {
    pub fn new(names: Vec<String>, bounds: Vec<[f64; 2]>) -> Result<SobolProblem> {
        let problem = SobolProblem {
            num_vars: names.len(),
            names,
            bounds,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(invalid("problem has no variables"));
        }
        if self.names.len() != self.num_vars || self.bounds.len() != self.num_vars {
            return Err(invalid(format!(
                "num_vars is {} but {} names and {} bounds were given",
                self.num_vars,
                self.names.len(),
                self.bounds.len()
            )));
        }
        for (i, name) in self.names.iter().enumerate() {
            if self.names[..i].contains(name) {
                return Err(invalid(format!("duplicate variable name '{name}'")));
            }
        }
        for (name, [lo, hi]) in self.names.iter().zip(&self.bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(format!(
                    "bounds [{lo}, {hi}] for '{name}' are not increasing"
                )));
            }
        }
        Ok(())
    }

    /// Rows evaluated per base point.
    pub fn block_len(&self) -> usize {
        2 * self.num_vars + 2
    }
}

/// Where the base points `(A_j, B_j)` come from.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseSequence {
    /// Unscrambled Sobol' points after discarding `skip` leading points;
    /// `None` skips the smallest power of two not below `N`.
    Sobol { skip: Option<u64> },
    /// Independent uniform draws.
    Uniform { seed: i64 },
}

impl Default for BaseSequence {
    fn default() -> Self {
        BaseSequence::Sobol { skip: None }
    }
}

/// Returns `N * (2D + 2)` rows. Each base point contributes the block
/// `A, AB_1..AB_D, BA_1..BA_D, B`, where `AB_i` is `A` with coordinate `i`
/// taken from `B` and `BA_i` the converse.
pub fn saltelli_sample(problem: &SobolProblem, n: usize, base: &BaseSequence) -> Result<Vec<Vec<f64>>> {
    problem.validate()?;
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let d = problem.num_vars;
    let base_points: Vec<Vec<f64>> = match base {
        BaseSequence::Sobol { skip } => {
            if 2 * d > MAX_DIMS {
                return Err(invalid(format!(
                    "at most {} variables are supported with Sobol' base points",
                    MAX_DIMS / 2
                )));
            }
            let mut seq = Sobol::new(2 * d);
            seq.skip(skip.unwrap_or((n as u64).next_power_of_two()));
            (0..n).map(|_| seq.next_point()).collect()
        }
        BaseSequence::Uniform { seed } => {
            let mut rng = Prng::seed_from(*seed);
            (0..n)
                .map(|_| (0..2 * d).map(|_| rng.next_f64()).collect())
                .collect()
        }
    };

    let scale = |i: usize, u: f64| {
        let [lo, hi] = problem.bounds[i];
        lo + u * (hi - lo)
    };
    let mut rows = Vec::with_capacity(n * problem.block_len());
    for p in &base_points {
        let (a, b) = p.split_at(d);
        rows.push(a.to_vec());
        for k in 0..d {
            rows.push((0..d).map(|j| if j == k { b[j] } else { a[j] }).collect());
        }
        for k in 0..d {
            rows.push((0..d).map(|j| if j == k { a[j] } else { b[j] }).collect());
        }
        rows.push(b.to_vec());
    }
    for row in &mut rows {
        for (i, v) in row.iter_mut().enumerate() {
            *v = scale(i, *v);
        }
    }
    Ok(rows)
}
