//! Named parameter sets and their on-disk form.
//!
//! A scenario file is TOML with a `name`, every [`ModelParams`] field at the
//! top level, and an optional `phi_grid` array:
//!
//! ```toml
//! name = "base"
//! mu_s = 0.06
//! # ... remaining parameters ...
//! theta = 0.0
//! phi_grid = [1.0, 1.1, 1.2]
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    /// Loading factors for sweeps; strictly increasing, each `>= 1`.
    pub phi_grid: Vec<f64>,
}

/// The loading grid `1.0, 1.1, ..., 1.5` used by the loading sweeps.
pub fn default_phi_grid() -> Vec<f64> {
    (0..=5).map(|i| snap(1.0 + 0.1 * i as f64)).collect()
}

/// Inclusive arithmetic grid `start, start + step, ..., <= stop`, with each
/// entry rounded to 12 decimals so that e.g. `1.0 + 2 * 0.1` prints as `1.2`.
pub fn arithmetic_grid(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::Config(format!(
            "bad grid {start}:{step}:{stop}; need step > 0 and start <= stop"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| snap(start + step * i as f64)).collect())
}

fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl Scenario {
    pub fn new(name: impl Into<String>, params: ModelParams, phi_grid: Vec<f64>) -> Result<Self> {
        let scenario = Self {
            name: name.into(),
            params,
            phi_grid,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Frictionless experiments: `a` is the base case, `b` adds market
    /// crashes, `c` flips the price correlation and `d` raises risk aversion.
    pub fn frictionless(label: char) -> Result<Self> {
        let base = ModelParams::base();
        let params = match label {
            'a' => base,
            'b' => ModelParams {
                lambda_1: 0.2,
                ..base
            },
            'c' => ModelParams {
                sigma_p1: -0.1,
                ..base
            },
            'd' => ModelParams { gamma: 2.0, ..base },
            other => {
                return Err(Error::Config(format!(
                    "unknown frictionless scenario '{other}', expected a, b, c or d"
                )))
            }
        };
        Self::new(format!("scenario_{label}"), params, default_phi_grid())
    }

    pub fn transaction_cost() -> Self {
        Self {
            name: "transaction_cost".into(),
            params: ModelParams::transaction_cost_base(),
            phi_grid: default_phi_grid(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("scenario name is empty".into()));
        }
        if let Some(bad) = self.phi_grid.iter().find(|&&phi| !(phi >= 1.0)) {
            return Err(Error::Config(format!("phi_grid entry {bad} is below 1")));
        }
        if self.phi_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("phi_grid must be strictly increasing".into()));
        }
        self.params.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let name = match table.remove("name") {
            Some(toml::Value::String(s)) => s,
            Some(other) => {
                return Err(Error::Config(format!(
                    "key `name` must be a string, found {}",
                    other.type_str()
                )))
            }
            None => return Err(Error::Config("missing key `name`".into())),
        };
        let phi_grid = match table.remove("phi_grid") {
            None => Vec::new(),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|item| match item {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    other => Err(Error::Config(format!(
                        "phi_grid entries must be numbers, found {}",
                        other.type_str()
                    ))),
                })
                .collect::<Result<_>>()?,
            Some(other) => {
                return Err(Error::Config(format!(
                    "key `phi_grid` must be an array, found {}",
                    other.type_str()
                )))
            }
        };
        // Integers are accepted for float fields (e.g. `gamma = 2`).
        for (_, value) in table.iter_mut() {
            if let toml::Value::Integer(i) = *value {
                *value = toml::Value::Float(i as f64);
            }
        }
        let params: ModelParams = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        Self::new(name, params, phi_grid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other.context(path.display().to_string()),
        })
    }

    pub fn to_toml(&self) -> String {
        let mut table = toml::Table::new();
        table.insert("name".into(), toml::Value::String(self.name.clone()));
        let params = toml::Table::try_from(self.params).expect("parameters serialize to TOML");
        table.extend(params);
        if !self.phi_grid.is_empty() {
            table.insert(
                "phi_grid".into(),
                toml::Value::Array(self.phi_grid.iter().map(|&x| x.into()).collect()),
            );
        }
        toml::to_string(&table).expect("scenario serializes to TOML")
    }
}
