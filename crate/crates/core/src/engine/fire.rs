//! Forest fire percolation on a bounded grid. The left column ignites at
//! setup and fire spreads to the four orthogonal neighbours each tick.

use std::sync::LazyLock;

use super::params::{ParamSet, ParamSpec};
use super::prng::Prng;
use super::{EngineError, StepOutcome};

pub const WORLD_SIZE: usize = 101;

static PARAMS: LazyLock<Vec<ParamSpec>> =
    LazyLock::new(|| vec![ParamSpec::numeric("density", 0.0, 1.0, 99.0, 57.0)]);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Empty,
    Tree,
    Burning,
    Burned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestState {
    pub tick: u64,
    pub cells: Vec<Cell>,
    pub initial_trees: u64,
    pub burned_trees: u64,
    burning: Vec<usize>,
}

impl ForestState {
    pub fn burning_count(&self) -> usize {
        self.burning.len()
    }

    pub fn count(&self, kind: Cell) -> usize {
        self.cells.iter().filter(|c| **c == kind).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fire {
    params: ParamSet,
    state: Option<ForestState>,
}

impl Default for Fire {
    fn default() -> Self {
        Fire {
            params: ParamSet::new(&PARAMS),
            state: None,
        }
    }
}

impl Fire {
    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn state(&self) -> Option<&ForestState> {
        self.state.as_ref()
    }

    pub fn setup(&mut self, rng: &mut Prng) -> Result<(), EngineError> {
        let density = self.params.number("density");
        let mut cells: Vec<Cell> = (0..WORLD_SIZE * WORLD_SIZE)
            .map(|_| {
                if (rng.below(100) as f64) < density {
                    Cell::Tree
                } else {
                    Cell::Empty
                }
            })
            .collect();
        let initial_trees = cells.iter().filter(|c| **c == Cell::Tree).count() as u64;
        let mut burning = Vec::new();
        for y in 0..WORLD_SIZE {
            let i = y * WORLD_SIZE;
            if cells[i] == Cell::Tree {
                cells[i] = Cell::Burning;
                burning.push(i);
            }
        }
        self.state = Some(ForestState {
            tick: 0,
            cells,
            initial_trees,
            burned_trees: burning.len() as u64,
            burning,
        });
        Ok(())
    }

    pub fn step(&mut self) -> Result<StepOutcome, EngineError> {
        let st = self.state.as_mut().ok_or(EngineError::NotSetUp)?;
        let mut ignited = Vec::new();
        for &i in &st.burning {
            let (x, y) = (i % WORLD_SIZE, i / WORLD_SIZE);
            let mut try_ignite = |j: usize| {
                if st.cells[j] == Cell::Tree {
                    st.cells[j] = Cell::Burning;
                    ignited.push(j);
                }
            };
            if x > 0 {
                try_ignite(i - 1);
            }
            if x + 1 < WORLD_SIZE {
                try_ignite(i + 1);
            }
            if y > 0 {
                try_ignite(i - WORLD_SIZE);
            }
            if y + 1 < WORLD_SIZE {
                try_ignite(i + WORLD_SIZE);
            }
        }
        for &i in &st.burning {
            st.cells[i] = Cell::Burned;
        }
        st.burned_trees += ignited.len() as u64;
        st.burning = ignited;
        st.tick += 1;
        Ok(if st.burning.is_empty() {
            StepOutcome::Stopped
        } else {
            StepOutcome::Running
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::params::ParamValue;

    fn forest(density: f64, seed: i64) -> (Fire, Prng) {
        let mut f = Fire::default();
        f.params_mut()
            .set("density", &ParamValue::Number(density))
            .unwrap();
        let mut rng = Prng::seed_from(seed);
        f.setup(&mut rng).unwrap();
        (f, rng)
    }

    #[test]
    fn zero_density_is_empty() {
        let (mut f, _) = forest(0.0, 1);
        let st = f.state().unwrap();
        assert_eq!(st.initial_trees, 0);
        assert_eq!(st.burning_count(), 0);
        assert_eq!(f.step().unwrap(), StepOutcome::Stopped);
    }

    #[test]
    fn density_out_of_range() {
        let mut f = Fire::default();
        assert!(matches!(
            f.params_mut().set("density", &ParamValue::Number(150.0)),
            Err(EngineError::OutOfRange { .. })
        ));
    }

    #[test]
    fn burning_cells_become_burned_and_counts_are_conserved() {
        let (mut f, _) = forest(62.0, 9);
        let initial = f.state().unwrap().initial_trees;
        let mut last_burned = f.state().unwrap().burned_trees;
        loop {
            let before: Vec<usize> = f.state().unwrap().burning.clone();
            let outcome = f.step().unwrap();
            let st = f.state().unwrap();
            assert!(before.iter().all(|&i| st.cells[i] == Cell::Burned));
            let live = st.count(Cell::Tree) + st.count(Cell::Burning) + st.count(Cell::Burned);
            assert_eq!(live as u64, initial);
            assert!(st.burned_trees >= last_burned);
            assert_eq!(
                st.burned_trees as usize,
                st.count(Cell::Burning) + st.count(Cell::Burned)
            );
            last_burned = st.burned_trees;
            if outcome == StepOutcome::Stopped {
                assert_eq!(st.burning_count(), 0);
                break;
            }
        }
    }
}
