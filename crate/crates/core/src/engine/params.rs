use std::fmt;

use serde::{Deserialize, Serialize};

use super::prng::Prng;
use super::EngineError;

/// A value held by an interface widget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Bool(bool),
    Text(String),
}

impl ParamValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            ParamValue::Number(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => f.write_str(&format_number(*v)),
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// Renders integral values without a fractional part, the way reporters print counts.
pub fn format_number(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamKind {
    /// Slider: values on the lattice `min, min + step, ..., <= max`.
    Numeric { min: f64, step: f64, max: f64 },
    /// Chooser with its list of options.
    Choice { options: Vec<String> },
    /// Switch.
    Boolean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub default: ParamValue,
}

impl ParamSpec {
    pub fn numeric(name: &str, min: f64, step: f64, max: f64, default: f64) -> Self {
        debug_assert!(min <= max && step > 0.0);
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Numeric { min, step, max },
            default: ParamValue::Number(default),
        }
    }

    pub fn choice(name: &str, options: &[&str], default: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Choice {
                options: options.iter().map(|s| s.to_string()).collect(),
            },
            default: ParamValue::Text(default.to_string()),
        }
    }

    pub fn boolean(name: &str, default: bool) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Boolean,
            default: ParamValue::Bool(default),
        }
    }

    /// The `(min, step, max)` triple of a numeric parameter.
    pub fn range(&self) -> Option<(f64, f64, f64)> {
        match self.kind {
            ParamKind::Numeric { min, step, max } => Some((min, step, max)),
            _ => None,
        }
    }

    /// Checks `value` against the widget kind and snaps numbers onto the
    /// step lattice, rounding toward `min`.
    pub fn coerce(&self, value: &ParamValue) -> Result<ParamValue, EngineError> {
        match (&self.kind, value) {
            (ParamKind::Numeric { min, step, max }, ParamValue::Number(v)) => {
                if !v.is_finite() || *v < *min || *v > *max {
                    return Err(EngineError::OutOfRange {
                        name: self.name.clone(),
                        value: format_number(*v),
                        min: *min,
                        max: *max,
                    });
                }
                let steps = ((v - min) / step + 1e-9).floor();
                Ok(ParamValue::Number((min + steps * step).min(*max)))
            }
            (ParamKind::Choice { options }, ParamValue::Text(s)) => {
                if options.iter().any(|o| o == s) {
                    Ok(value.clone())
                } else {
                    Err(EngineError::InvalidValue {
                        name: self.name.clone(),
                        reason: format!("\"{s}\" is not one of {options:?}"),
                    })
                }
            }
            (ParamKind::Boolean, ParamValue::Bool(_)) => Ok(value.clone()),
            _ => Err(EngineError::InvalidValue {
                name: self.name.clone(),
                reason: format!("wrong kind of value {value}"),
            }),
        }
    }

    /// Uniform draw from the lattice; non-numeric widgets return their default.
    pub fn random_value(&self, rng: &mut Prng) -> ParamValue {
        match self.kind {
            ParamKind::Numeric { min, step, max } => {
                let points = ((max - min) / step + 1e-9).floor() as u64 + 1;
                ParamValue::Number(min + rng.below(points) as f64 * step)
            }
            _ => self.default.clone(),
        }
    }
}

/// Current values of a model's interface parameters, in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    specs: &'static [ParamSpec],
    values: Vec<ParamValue>,
}

impl ParamSet {
    pub fn new(specs: &'static [ParamSpec]) -> Self {
        let values = specs.iter().map(|s| s.default.clone()).collect();
        ParamSet { specs, values }
    }

    pub fn specs(&self) -> &'static [ParamSpec] {
        self.specs
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.index(name).map(|i| &self.values[i])
    }

    pub fn number(&self, name: &str) -> f64 {
        self.get(name).and_then(ParamValue::as_number).unwrap_or(0.0)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index(name).is_some()
    }

    pub fn set(&mut self, name: &str, value: &ParamValue) -> Result<(), EngineError> {
        let i = self
            .index(name)
            .ok_or_else(|| EngineError::UnknownParam(name.to_string()))?;
        self.values[i] = self.specs[i].coerce(value)?;
        Ok(())
    }

    pub fn randomize(&mut self, rng: &mut Prng) {
        for (value, spec) in self.values.iter_mut().zip(self.specs) {
            *value = spec.random_value(rng);
        }
    }
}
