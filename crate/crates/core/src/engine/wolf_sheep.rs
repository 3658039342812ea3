//! Wolf Sheep Predation, sheep-wolves-grass variant, on a discrete patch grid.
//!
//! Agents step to one of the eight neighbouring patches per tick and are
//! processed in id order, so a run is a pure function of its seed and
//! parameters.

use std::sync::LazyLock;

use super::params::{ParamSet, ParamSpec, ParamValue};
use super::prng::Prng;
use super::{EngineError, StepOutcome};

pub const WORLD_SIZE: usize = 51;
pub const DEFAULT_MAX_SHEEP: u64 = 1000;
pub const GRASS_VERSION: &str = "sheep-wolves-grass";

static PARAMS: LazyLock<Vec<ParamSpec>> = LazyLock::new(|| {
    vec![
        ParamSpec::numeric("initial-number-sheep", 0.0, 1.0, 250.0, 100.0),
        ParamSpec::numeric("sheep-gain-from-food", 0.0, 1.0, 50.0, 4.0),
        ParamSpec::numeric("sheep-reproduce", 1.0, 1.0, 20.0, 4.0),
        ParamSpec::numeric("initial-number-wolves", 0.0, 1.0, 250.0, 50.0),
        ParamSpec::numeric("wolf-gain-from-food", 0.0, 1.0, 100.0, 20.0),
        ParamSpec::numeric("wolf-reproduce", 0.0, 1.0, 20.0, 5.0),
        ParamSpec::numeric("grass-regrowth-time", 0.0, 1.0, 100.0, 30.0),
        ParamSpec::choice("model-version", &["sheep-wolves", GRASS_VERSION], GRASS_VERSION),
        ParamSpec::boolean("show-energy?", false),
    ]
});

const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Patch {
    Grass,
    Dirt { countdown: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Animal {
    pub id: u64,
    pub x: usize,
    pub y: usize,
    pub energy: i64,
}

/// Cumulative population events since setup.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Events {
    pub sheep_births: u64,
    pub sheep_starved: u64,
    pub sheep_eaten: u64,
    pub wolf_births: u64,
    pub wolves_starved: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub tick: u64,
    pub patches: Vec<Patch>,
    pub sheep: Vec<Animal>,
    pub wolves: Vec<Animal>,
    pub events: Events,
    next_id: u64,
}

impl WorldState {
    fn patch_index(x: usize, y: usize) -> usize {
        y * WORLD_SIZE + x
    }

    pub fn grass_count(&self) -> usize {
        self.patches.iter().filter(|p| **p == Patch::Grass).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WolfSheep {
    params: ParamSet,
    max_sheep: u64,
    state: Option<WorldState>,
}

impl Default for WolfSheep {
    fn default() -> Self {
        WolfSheep {
            params: ParamSet::new(&PARAMS),
            max_sheep: DEFAULT_MAX_SHEEP,
            state: None,
        }
    }
}

fn step_to_neighbour(x: usize, y: usize, rng: &mut Prng) -> (usize, usize) {
    let (dx, dy) = NEIGHBOURS[rng.below(8) as usize];
    let n = WORLD_SIZE as isize;
    (
        (x as isize + dx).rem_euclid(n) as usize,
        (y as isize + dy).rem_euclid(n) as usize,
    )
}

fn chance_percent(percent: f64, rng: &mut Prng) -> bool {
    (rng.below(100) as f64) < percent
}

impl WolfSheep {
    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn state(&self) -> Option<&WorldState> {
        self.state.as_ref()
    }

    pub fn max_sheep(&self) -> u64 {
        self.max_sheep
    }

    pub fn set_max_sheep(&mut self, cap: u64) {
        self.max_sheep = cap;
    }

    fn int_param(&self, name: &str) -> i64 {
        self.params.number(name) as i64
    }

    pub fn setup(&mut self, rng: &mut Prng) -> Result<(), EngineError> {
        let version = self.params.get("model-version").cloned();
        if version != Some(ParamValue::Text(GRASS_VERSION.to_string())) {
            return Err(EngineError::Setup(format!(
                "model-version must be \"{GRASS_VERSION}\", got {}",
                version.map(|v| v.to_string()).unwrap_or_default()
            )));
        }
        let regrowth = self.int_param("grass-regrowth-time") as u64;
        let patches = (0..WORLD_SIZE * WORLD_SIZE)
            .map(|_| {
                if rng.below(2) == 0 {
                    Patch::Grass
                } else {
                    Patch::Dirt {
                        countdown: rng.below(regrowth + 1) as u32,
                    }
                }
            })
            .collect();

        let mut next_id = 0;
        let mut spawn = |count: i64, gain: i64, rng: &mut Prng| -> Vec<Animal> {
            (0..count)
                .map(|_| {
                    let x = rng.below(WORLD_SIZE as u64) as usize;
                    let y = rng.below(WORLD_SIZE as u64) as usize;
                    let energy = rng.below((2 * gain).max(0) as u64) as i64;
                    let id = next_id;
                    next_id += 1;
                    Animal { id, x, y, energy }
                })
                .collect()
        };
        let sheep = spawn(
            self.int_param("initial-number-sheep"),
            self.int_param("sheep-gain-from-food"),
            rng,
        );
        let wolves = spawn(
            self.int_param("initial-number-wolves"),
            self.int_param("wolf-gain-from-food"),
            rng,
        );

        self.state = Some(WorldState {
            tick: 0,
            patches,
            sheep,
            wolves,
            events: Events::default(),
            next_id,
        });
        Ok(())
    }

    pub fn step(&mut self, rng: &mut Prng) -> Result<StepOutcome, EngineError> {
        let sheep_gain = self.int_param("sheep-gain-from-food");
        let sheep_reproduce = self.params.number("sheep-reproduce");
        let wolf_gain = self.int_param("wolf-gain-from-food");
        let wolf_reproduce = self.params.number("wolf-reproduce");
        let regrowth = self.int_param("grass-regrowth-time") as u32;
        let max_sheep = self.max_sheep;
        let st = self.state.as_mut().ok_or(EngineError::NotSetUp)?;

        // Sheep.
        let mut survivors = Vec::with_capacity(st.sheep.len());
        let mut newborn = Vec::new();
        for mut sheep in std::mem::take(&mut st.sheep) {
            (sheep.x, sheep.y) = step_to_neighbour(sheep.x, sheep.y, rng);
            sheep.energy -= 1;
            let patch = &mut st.patches[WorldState::patch_index(sheep.x, sheep.y)];
            if *patch == Patch::Grass {
                sheep.energy += sheep_gain;
                *patch = Patch::Dirt { countdown: regrowth };
            }
            if sheep.energy < 0 {
                st.events.sheep_starved += 1;
                continue;
            }
            if chance_percent(sheep_reproduce, rng) {
                let kept = sheep.energy / 2;
                newborn.push(Animal {
                    id: st.next_id,
                    energy: sheep.energy - kept,
                    ..sheep
                });
                st.next_id += 1;
                sheep.energy = kept;
                st.events.sheep_births += 1;
            }
            survivors.push(sheep);
        }
        survivors.extend(newborn);
        st.sheep = survivors;

        // Wolves. Sheep do not move during this phase, so a per-patch index
        // built once (ascending id) stays valid; eaten sheep are tombstoned.
        let mut by_patch: Vec<Vec<usize>> = vec![Vec::new(); WORLD_SIZE * WORLD_SIZE];
        for (i, s) in st.sheep.iter().enumerate() {
            by_patch[WorldState::patch_index(s.x, s.y)].push(i);
        }
        let mut eaten = vec![false; st.sheep.len()];
        let mut survivors = Vec::with_capacity(st.wolves.len());
        let mut newborn = Vec::new();
        for mut wolf in std::mem::take(&mut st.wolves) {
            (wolf.x, wolf.y) = step_to_neighbour(wolf.x, wolf.y, rng);
            wolf.energy -= 1;
            let prey = by_patch[WorldState::patch_index(wolf.x, wolf.y)]
                .iter()
                .copied()
                .find(|&i| !eaten[i]);
            if let Some(i) = prey {
                eaten[i] = true;
                st.events.sheep_eaten += 1;
                wolf.energy += wolf_gain;
            }
            if wolf.energy < 0 {
                st.events.wolves_starved += 1;
                continue;
            }
            if chance_percent(wolf_reproduce, rng) {
                let kept = wolf.energy / 2;
                newborn.push(Animal {
                    id: st.next_id,
                    energy: wolf.energy - kept,
                    ..wolf
                });
                st.next_id += 1;
                wolf.energy = kept;
                st.events.wolf_births += 1;
            }
            survivors.push(wolf);
        }
        survivors.extend(newborn);
        st.wolves = survivors;
        if eaten.iter().any(|&e| e) {
            let mut i = 0;
            st.sheep.retain(|_| {
                let keep = !eaten[i];
                i += 1;
                keep
            });
        }

        // Grass regrowth.
        for patch in st.patches.iter_mut() {
            if let Patch::Dirt { countdown } = patch {
                if *countdown <= 1 {
                    *patch = Patch::Grass;
                } else {
                    *countdown -= 1;
                }
            }
        }

        st.tick += 1;

        let extinct = st.sheep.is_empty() && st.wolves.is_empty();
        let sheep_explosion = st.wolves.is_empty() && st.sheep.len() as u64 > max_sheep;
        Ok(if extinct || sheep_explosion {
            StepOutcome::Stopped
        } else {
            StepOutcome::Running
        })
    }
}
