//! JSON configs and scripted scenarios.
//!
//! A config is a (possibly partial) [`SimConfig`] object; missing fields
//! take their defaults. A scenario looks like:
//!
//! ```json
//! {
//!   "description": "infect red, then lock it down",
//!   "seed": 42,
//!   "total_ticks": 600,
//!   "config": { "base_infection_prob": 0.1 },
//!   "events": [
//!     { "at_tick": 0,   "switch": "infect-red",   "value": true },
//!     { "at_tick": 300, "switch": "lockdown-red", "value": true }
//!   ]
//! }
//! ```
//!
//! `config` overrides top-level fields of the base config. An event with
//! `at_tick: t` is applied at the boundary before tick `t` runs; events on
//! the same tick apply in file order.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::metrics::MetricsSeries;
use crate::sim::Simulation;
use crate::world::{init_world, SimConfig, SwitchBoard, SwitchError, SwitchId, Topology, Violation, WorldError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown field `{field}` at `{path}`")]
    UnknownField { path: String, field: String },
    #[error("invalid value at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid config: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("event {index}: negative tick {at_tick}")]
    NegativeTick { index: usize, at_tick: i64 },
    #[error("event {index} at tick {at_tick}: {source}")]
    Switch {
        index: usize,
        at_tick: u64,
        #[source]
        source: SwitchError,
    },
}

impl ParseError {
    /// Name of the offending field, when the error concerns one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ParseError::UnknownField { field, .. } => Some(field),
            ParseError::Schema { path, .. } => Some(path),
            ParseError::Invalid(v) => v.first().map(|v| v.field.as_str()),
            _ => None,
        }
    }
}

fn decode<T: DeserializeOwned>(value: Value) -> Result<T, ParseError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        classify(inner, path)
    })
}

fn classify(err: serde_json::Error, path: String) -> ParseError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Syntax | Category::Eof | Category::Io => ParseError::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        },
        Category::Data => {
            let message = err.to_string();
            if let Some(rest) = message.strip_prefix("unknown field `") {
                let field = rest.split('`').next().unwrap_or_default().to_owned();
                ParseError::UnknownField { path, field }
            } else {
                ParseError::Schema { path, message }
            }
        }
    }
}

fn parse_value(text: &str) -> Result<Value, ParseError> {
    serde_json::from_str(text).map_err(|e| classify(e, String::new()))
}

/// Parses a config document; absent fields take their defaults.
pub fn parse_config(text: &str) -> Result<SimConfig, ParseError> {
    config_from_value(parse_value(text)?)
}

fn config_from_value(value: Value) -> Result<SimConfig, ParseError> {
    let config: SimConfig = decode(value)?;
    let violations = validate_world(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ParseError::Invalid(violations))
    }
}

/// Structural checks on a config; empty means valid.
pub fn validate_world(config: &SimConfig) -> Vec<Violation> {
    config.validate()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEvent {
    pub at_tick: u64,
    pub switch: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_ticks: Option<u64>,
    /// Overrides for top-level config fields.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub config: Map<String, Value>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    at_tick: i64,
    switch: String,
    value: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    total_ticks: Option<u64>,
    #[serde(default)]
    config: Map<String, Value>,
    #[serde(default)]
    events: Vec<RawEvent>,
}

/// Parses a scenario against the default config.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    parse_scenario_with_base(text, &SimConfig::default())
}

/// Parses and normalizes a scenario: events are sorted by tick (stable),
/// switch names are canonicalized, and the whole switch schedule is
/// replayed on a fresh board so that any latching or closure violation is
/// rejected here rather than mid-run.
pub fn parse_scenario_with_base(text: &str, base: &SimConfig) -> Result<Scenario, ParseError> {
    let raw: RawScenario = decode(parse_value(text)?)?;
    let mut events = Vec::with_capacity(raw.events.len());
    for (index, e) in raw.events.into_iter().enumerate() {
        let at_tick = u64::try_from(e.at_tick).map_err(|_| ParseError::NegativeTick { index, at_tick: e.at_tick })?;
        events.push((index, ScenarioEvent { at_tick, switch: e.switch, value: e.value }));
    }
    events.sort_by_key(|(_, e)| e.at_tick);

    let scenario = Scenario {
        description: raw.description,
        seed: raw.seed,
        total_ticks: raw.total_ticks,
        config: raw.config,
        events: Vec::new(),
    };
    let config = scenario.effective_config(base)?;
    let mut board = SwitchBoard::new(Topology::from_config(&config));
    let mut normalized = Vec::with_capacity(events.len());
    for (index, mut e) in events {
        let at_tick = e.at_tick;
        let id = board
            .apply_named(&e.switch, e.value)
            .map_err(|source| ParseError::Switch { index, at_tick, source })?;
        e.switch = board.topology().name(id);
        normalized.push(e);
    }
    Ok(Scenario { events: normalized, ..scenario })
}

/// A scenario resolved against a concrete config, ready to run.
#[derive(Debug, Clone)]
pub struct ScenarioPlan {
    pub config: SimConfig,
    pub seed: u64,
    pub total_ticks: Option<u64>,
    pub events: Vec<(u64, SwitchId, bool)>,
}

impl Scenario {
    pub fn effective_config(&self, base: &SimConfig) -> Result<SimConfig, ParseError> {
        let mut merged = serde_json::to_value(base).expect("config serializes");
        let obj = merged.as_object_mut().expect("config is an object");
        for (k, v) in &self.config {
            obj.insert(k.clone(), v.clone());
        }
        config_from_value(merged).map_err(|e| match e {
            ParseError::Schema { path, message } => ParseError::Schema { path: format!("config.{path}"), message },
            ParseError::UnknownField { path, field } => ParseError::UnknownField { path: format!("config.{path}"), field },
            other => other,
        })
    }

    pub fn plan(&self, base: &SimConfig) -> Result<ScenarioPlan, ParseError> {
        let config = self.effective_config(base)?;
        let topology = Topology::from_config(&config);
        let events = self
            .events
            .iter()
            .enumerate()
            .map(|(index, e)| {
                topology
                    .resolve(&e.switch)
                    .map(|id| (e.at_tick, id, e.value))
                    .map_err(|source| ParseError::Switch { index, at_tick: e.at_tick, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(ScenarioPlan { config, seed: self.seed, total_ticks: self.total_ticks, events })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("tick {tick}: {source}")]
    Switch {
        tick: u64,
        #[source]
        source: SwitchError,
    },
}

impl ScenarioPlan {
    pub fn start(&self) -> Result<Simulation, RunError> {
        Ok(Simulation::new(init_world(self.config.clone(), self.seed)?))
    }

    /// Events scheduled for tick boundary `tick`, in application order.
    pub fn events_at(&self, tick: u64) -> impl Iterator<Item = (SwitchId, bool)> + '_ {
        self.events
            .iter()
            .filter(move |(t, _, _)| *t == tick)
            .map(|&(_, id, v)| (id, v))
    }

    /// Runs `ticks` ticks from a fresh world, applying events at their
    /// boundaries. Events scheduled at or after `ticks` never fire.
    pub fn run(&self, ticks: u64) -> Result<Simulation, RunError> {
        let mut sim = self.start()?;
        self.advance(&mut sim, ticks)?;
        Ok(sim)
    }

    /// Continues `sim` until it has completed `until` ticks.
    pub fn advance(&self, sim: &mut Simulation, until: u64) -> Result<(), RunError> {
        let mut next = self.events.partition_point(|(t, _, _)| *t < sim.world().tick_count());
        while sim.world().tick_count() < until {
            let tick = sim.world().tick_count();
            while let Some(&(t, id, value)) = self.events.get(next) {
                if t != tick {
                    break;
                }
                sim.world_mut()
                    .apply_switch(id, value)
                    .map_err(|source| RunError::Switch { tick, source })?;
                next += 1;
            }
            sim.step();
        }
        Ok(())
    }
}

/// Convenience: run a scenario to its own `total_ticks` (or `ticks` when
/// given) and return the metrics.
pub fn run_scenario(scenario: &Scenario, ticks: Option<u64>) -> Result<MetricsSeries, Box<dyn std::error::Error + Send + Sync>> {
    let plan = scenario.plan(&SimConfig::default())?;
    let ticks = ticks.or(plan.total_ticks).unwrap_or(0);
    Ok(plan.run(ticks)?.into_parts().1)
}
