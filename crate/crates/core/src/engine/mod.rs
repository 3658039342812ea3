//! Headless simulation models and the workspace that hosts one of them.

pub mod fire;
pub mod params;
pub mod prng;
pub mod wolf_sheep;

use std::path::Path;

use thiserror::Error;

pub use fire::Fire;
pub use params::{format_number, ParamKind, ParamSpec, ParamValue};
pub use prng::Prng;
pub use wolf_sheep::WolfSheep;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("no model is open")]
    NoModel,
    #[error("unknown model \"{0}\" (known: wolf-sheep-predation, fire)")]
    UnknownModel(String),
    #[error("the model has not been set up yet")]
    NotSetUp,
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("nothing named {0} has been defined")]
    UnknownParam(String),
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: String,
        value: String,
        min: f64,
        max: f64,
    },
    #[error("invalid value for {name}: {reason}")]
    InvalidValue { name: String, reason: String },
    #[error("unknown breed {0}")]
    UnknownBreed(String),
    #[error("nothing named {0} can be reported")]
    UnknownReporter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Running,
    Stopped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    WolfSheepPredation,
    Fire,
}

impl ModelKind {
    pub fn key(self) -> &'static str {
        match self {
            ModelKind::WolfSheepPredation => "wolf-sheep-predation",
            ModelKind::Fire => "fire",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "wolf-sheep-predation" => Some(ModelKind::WolfSheepPredation),
            "fire" => Some(ModelKind::Fire),
            _ => None,
        }
    }

    /// Maps a registry key or a `.nlogo` path such as
    /// `models/Wolf Sheep Predation.nlogo` onto a model.
    pub fn resolve(path: &str) -> Result<Self, EngineError> {
        let stem = Path::new(path.trim())
            .file_name()
            .and_then(|f| f.to_str())
            .unwrap_or("");
        let stem = stem.strip_suffix(".nlogo").unwrap_or(stem);
        let key = stem
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("-")
            .to_lowercase();
        Self::from_key(&key).ok_or_else(|| EngineError::UnknownModel(path.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    WolfSheep(WolfSheep),
    Fire(Fire),
}

impl Model {
    pub fn new(kind: ModelKind) -> Self {
        match kind {
            ModelKind::WolfSheepPredation => Model::WolfSheep(WolfSheep::default()),
            ModelKind::Fire => Model::Fire(Fire::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::WolfSheep(_) => ModelKind::WolfSheepPredation,
            Model::Fire(_) => ModelKind::Fire,
        }
    }

    pub fn params(&self) -> &params::ParamSet {
        match self {
            Model::WolfSheep(m) => m.params(),
            Model::Fire(m) => m.params(),
        }
    }

    fn params_mut(&mut self) -> &mut params::ParamSet {
        match self {
            Model::WolfSheep(m) => m.params_mut(),
            Model::Fire(m) => m.params_mut(),
        }
    }

    pub fn breeds(&self) -> &'static [&'static str] {
        match self {
            Model::WolfSheep(_) => &["sheep", "wolves", "turtles"],
            Model::Fire(_) => &["fires", "turtles"],
        }
    }

    pub fn ticks(&self) -> Option<u64> {
        match self {
            Model::WolfSheep(m) => m.state().map(|s| s.tick),
            Model::Fire(m) => m.state().map(|s| s.tick),
        }
    }
}

/// One isolated simulation instance: an optional open model plus its own
/// random stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Workspace {
    model: Option<Model>,
    rng: Prng,
}

impl Workspace {
    pub fn new(seed: i64) -> Self {
        Workspace {
            model: None,
            rng: Prng::seed_from(seed),
        }
    }

    pub fn open_model(&mut self, path: &str) -> Result<ModelKind, EngineError> {
        let kind = ModelKind::resolve(path)?;
        self.model = Some(Model::new(kind));
        Ok(kind)
    }

    pub fn close_model(&mut self) {
        self.model = None;
    }

    pub fn model(&self) -> Option<&Model> {
        self.model.as_ref()
    }

    fn model_ref(&self) -> Result<&Model, EngineError> {
        self.model.as_ref().ok_or(EngineError::NoModel)
    }

    pub fn reseed(&mut self, seed: i64) {
        self.rng = Prng::seed_from(seed);
    }

    pub fn rng_mut(&mut self) -> &mut Prng {
        &mut self.rng
    }

    pub fn setup(&mut self) -> Result<(), EngineError> {
        match self.model.as_mut().ok_or(EngineError::NoModel)? {
            Model::WolfSheep(m) => m.setup(&mut self.rng),
            Model::Fire(m) => m.setup(&mut self.rng),
        }
    }

    pub fn step(&mut self) -> Result<StepOutcome, EngineError> {
        match self.model.as_mut().ok_or(EngineError::NoModel)? {
            Model::WolfSheep(m) => m.step(&mut self.rng),
            Model::Fire(m) => m.step(),
        }
    }

    pub fn param_specs(&self) -> Result<&'static [ParamSpec], EngineError> {
        Ok(self.model_ref()?.params().specs())
    }

    pub fn set_param(&mut self, name: &str, value: &ParamValue) -> Result<(), EngineError> {
        let model = self.model.as_mut().ok_or(EngineError::NoModel)?;
        if let (Model::WolfSheep(m), "max-sheep") = (&mut *model, name) {
            return match value {
                ParamValue::Number(v) if *v >= 0.0 && v.is_finite() => {
                    m.set_max_sheep(*v as u64);
                    Ok(())
                }
                _ => Err(EngineError::InvalidValue {
                    name: name.to_string(),
                    reason: "expected a non-negative number".to_string(),
                }),
            };
        }
        model.params_mut().set(name, value)
    }

    pub fn set_params_random(&mut self) -> Result<(), EngineError> {
        let model = self.model.as_mut().ok_or(EngineError::NoModel)?;
        model.params_mut().randomize(&mut self.rng);
        Ok(())
    }

    pub fn ticks(&self) -> Result<u64, EngineError> {
        self.model_ref()?.ticks().ok_or(EngineError::NotSetUp)
    }

    pub fn count(&self, breed: &str) -> Result<u64, EngineError> {
        let model = self.model_ref()?;
        if !model.breeds().contains(&breed) {
            return Err(EngineError::UnknownBreed(breed.to_string()));
        }
        let n = match model {
            Model::WolfSheep(m) => m.state().map_or(0, |s| match breed {
                "sheep" => s.sheep.len(),
                "wolves" => s.wolves.len(),
                _ => s.sheep.len() + s.wolves.len(),
            }),
            Model::Fire(m) => m.state().map_or(0, |s| s.burning_count()),
        };
        Ok(n as u64)
    }

    pub fn any_turtles(&self) -> Result<bool, EngineError> {
        Ok(self.count("turtles")? > 0)
    }

    /// Reports a model global or an interface parameter by name.
    pub fn named(&self, name: &str) -> Result<String, EngineError> {
        let model = self.model_ref()?;
        match (model, name) {
            (Model::Fire(m), "burned-trees") => {
                return Ok(m.state().map_or(0, |s| s.burned_trees).to_string())
            }
            (Model::Fire(m), "initial-trees") => {
                return Ok(m.state().map_or(0, |s| s.initial_trees).to_string())
            }
            (Model::WolfSheep(m), "max-sheep") => return Ok(m.max_sheep().to_string()),
            (Model::WolfSheep(m), "grass") => {
                return Ok(m.state().map_or(0, |s| s.grass_count()).to_string())
            }
            _ => {}
        }
        model
            .params()
            .get(name)
            .map(|v| match v {
                ParamValue::Text(s) => format!("\"{s}\""),
                other => other.to_string(),
            })
            .ok_or_else(|| EngineError::UnknownReporter(name.to_string()))
    }
}
