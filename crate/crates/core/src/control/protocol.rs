//! Newline-delimited JSON frames exchanged with live clients.
//!
//! Every frame is one JSON object with a `type` field, one of `command`,
//! `ack`, `error`, `metrics`, `snapshot` or `hello`, terminated by `\n`.
//! Command frames carry a `kind`:
//!
//! ```json
//! {"type":"command","kind":"toggle_switch","switch":"lockdown-red","value":true}
//! {"type":"command","kind":"pause"}
//! {"type":"command","kind":"set_speed","tick_rate":5.0}
//! {"type":"command","kind":"reset","seed":7}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricsSample;
use crate::mobility::route_open;
use crate::scenario::Scenario;
use crate::world::{AgentState, Location, SimConfig, WorldState};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Command {
    ToggleSwitch {
        switch: String,
        value: bool,
    },
    Pause,
    Resume,
    /// Ticks per second; `0` runs unthrottled.
    SetSpeed {
        tick_rate: f64,
    },
    Reset {
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scenario: Option<Scenario>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub command: Command,
    /// Tick boundary at which the command was accepted.
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
}

impl ErrorEvent {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self { code: code.to_owned(), message: message.into(), switch: None, tick: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub schema_version: u32,
    pub config: SimConfig,
    pub seed: u64,
    /// Every switch name, in panel order.
    pub switches: Vec<String>,
    pub tick: u64,
    pub paused: bool,
    pub tick_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub state: AgentState,
    pub home: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteView {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub locked: bool,
    pub local_mobility: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteView {
    pub name: String,
    pub a: String,
    pub b: String,
    pub enabled: bool,
    pub locked: bool,
    pub open: bool,
}

/// The world as seen at one tick boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Completed ticks.
    pub tick: u64,
    pub agents: Vec<AgentView>,
    pub sites: Vec<SiteView>,
    pub routes: Vec<RouteView>,
    pub switchboard: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSample>,
}

impl Snapshot {
    pub fn capture(world: &WorldState, metrics: Option<MetricsSample>) -> Self {
        let topo = world.topology();
        let sw = world.switches();
        let site_name = |s: usize| topo.sites[s].clone();
        let agents = world
            .agents
            .iter()
            .map(|a| {
                let (site, route, destination) = match a.location {
                    Location::Site(s) => (Some(site_name(s)), None, None),
                    Location::Transit(plan) => {
                        (None, Some(topo.route_name(plan.route)), Some(site_name(plan.destination)))
                    }
                };
                AgentView {
                    id: a.id,
                    x: a.position[0],
                    y: a.position[1],
                    state: a.state,
                    home: site_name(a.home_site),
                    site,
                    route,
                    destination,
                }
            })
            .collect();
        let sites = world
            .sites()
            .iter()
            .enumerate()
            .map(|(i, s)| SiteView {
                name: s.name.clone(),
                x: s.center[0],
                y: s.center[1],
                radius: s.radius,
                locked: sw.site_locked(i),
                local_mobility: sw.local_mobility_allowed(i),
            })
            .collect();
        let routes = topo
            .routes
            .iter()
            .enumerate()
            .map(|(r, &(a, b))| RouteView {
                name: topo.route_name(r),
                a: site_name(a),
                b: site_name(b),
                enabled: sw.route_enabled(r),
                locked: sw.route_locked(r),
                open: route_open(sw, r).unwrap_or(false),
            })
            .collect();
        Self {
            tick: world.tick_count(),
            agents,
            sites,
            routes,
            switchboard: sw.entries().into_iter().collect(),
            metrics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Frame {
    Command(Command),
    Ack(Ack),
    Error(ErrorEvent),
    Metrics(MetricsSample),
    Snapshot(Snapshot),
    Hello(Hello),
}

#[derive(Debug, Error)]
#[error("malformed frame: {0}")]
pub struct DecodeError(#[from] serde_json::Error);

impl DecodeError {
    pub fn to_event(&self) -> ErrorEvent {
        ErrorEvent::new("malformed_frame", self.to_string())
    }
}

/// One frame as a JSON line, `\n` included.
pub fn encode_message(frame: &Frame) -> Vec<u8> {
    let mut out = serde_json::to_vec(frame).expect("frames serialize");
    out.push(b'\n');
    out
}

/// Decodes one frame. A single trailing line terminator is allowed.
pub fn decode_message(bytes: &[u8]) -> Result<Frame, DecodeError> {
    let line = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    Ok(serde_json::from_slice(line)?)
}

/// Splits a buffer into frames, one per non-blank line.
pub fn decode_lines(text: &str) -> Vec<Result<Frame, DecodeError>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| decode_message(l.as_bytes()))
        .collect()
}
