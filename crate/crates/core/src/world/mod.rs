//! Domain types, world construction and the per-tick phase order.

pub mod config;
pub mod switches;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epidemic;
use crate::metrics::{self, MetricsSample};
use crate::mobility;
use crate::rng::SimRng;

pub use config::{CountRange, SimConfig, SiteConfig, UnitRange, Violation};
pub use switches::{SwitchBoard, SwitchError, SwitchId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentState {
    Susceptible,
    Infected,
    Precaution,
    Recovered,
}

impl AgentState {
    pub const ALL: [AgentState; 4] = [
        AgentState::Susceptible,
        AgentState::Infected,
        AgentState::Precaution,
        AgentState::Recovered,
    ];

    /// Glyph the operator panel draws for this state.
    pub fn shape(self) -> &'static str {
        match self {
            AgentState::Susceptible => "circle",
            AgentState::Infected => "triangle",
            AgentState::Precaution => "square",
            AgentState::Recovered => "star",
        }
    }
}

/// An agent travelling along a route toward `destination`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitPlan {
    pub route: usize,
    pub destination: usize,
    /// Unit vector from the departure point to the destination center.
    pub direction: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Site(usize),
    Transit(TransitPlan),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub home_site: usize,
    pub location: Location,
    pub position: [f64; 2],
    pub state: AgentState,
    pub immunity: f64,
    /// Destination site while in transit.
    pub heading: Option<usize>,
}

impl Agent {
    pub fn resident_of(&self) -> Option<usize> {
        match self.location {
            Location::Site(s) => Some(s),
            Location::Transit(_) => None,
        }
    }

    pub fn is_infected(&self) -> bool {
        self.state == AgentState::Infected
    }

    pub fn takes_precaution(&self) -> bool {
        self.state == AgentState::Precaution
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub name: String,
    pub center: [f64; 2],
    pub radius: f64,
}

impl Site {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        config::distance(p, self.center) <= self.radius
    }
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid config: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidConfig(Vec<Violation>),
}

/// The complete simulation state at one tick boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub(crate) tick: u64,
    pub(crate) config: SimConfig,
    pub(crate) sites: Vec<Site>,
    pub(crate) switches: SwitchBoard,
    pub agents: Vec<Agent>,
    /// Sites whose infection seeding has already run.
    pub(crate) seeded: Vec<bool>,
    pub(crate) rng: SimRng,
}

/// Builds the initial world: `agents_per_site` agents placed uniformly in
/// each site disc with immunity drawn from `immunity_range`.
///
/// Draw order: sites in config order, and per agent the radius draw, the
/// angle draw, then the immunity draw.
pub fn init_world(config: SimConfig, seed: u64) -> Result<WorldState, WorldError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(WorldError::InvalidConfig(violations));
    }
    let mut rng = SimRng::seeded(seed);
    let sites: Vec<Site> = config
        .sites
        .iter()
        .map(|s| Site { name: s.name.clone(), center: s.center, radius: s.radius })
        .collect();

    let mut agents = Vec::with_capacity(config.total_agents());
    for (s, site) in sites.iter().enumerate() {
        for _ in 0..config.agents_per_site {
            let r = site.radius * rng.unit().sqrt();
            let theta = TAU * rng.unit();
            let position = [site.center[0] + r * theta.cos(), site.center[1] + r * theta.sin()];
            let im = config.immunity_range;
            let immunity = (im.lo + (im.hi - im.lo) * rng.unit()).clamp(im.lo, im.hi);
            agents.push(Agent {
                id: agents.len() as u32,
                home_site: s,
                location: Location::Site(s),
                position,
                state: AgentState::Susceptible,
                immunity,
                heading: None,
            });
        }
    }

    Ok(WorldState {
        tick: 0,
        switches: SwitchBoard::new(Topology::from_config(&config)),
        seeded: vec![false; sites.len()],
        sites,
        config,
        agents,
        rng,
    })
}

impl WorldState {
    /// Number of completed ticks.
    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn switches(&self) -> &SwitchBoard {
        &self.switches
    }

    pub fn topology(&self) -> &Topology {
        self.switches.topology()
    }

    pub fn rng(&self) -> &SimRng {
        &self.rng
    }

    /// Whether seeding has already run for each site.
    pub fn seeded_sites(&self) -> &[bool] {
        &self.seeded
    }

    pub fn apply_switch(&mut self, id: SwitchId, value: bool) -> Result<(), SwitchError> {
        self.switches.apply(id, value)
    }

    pub fn apply_named(&mut self, name: &str, value: bool) -> Result<SwitchId, SwitchError> {
        self.switches.apply_named(name, value)
    }

    /// Site is locked down with local mobility off.
    pub fn site_frozen(&self, site: usize) -> bool {
        self.switches.site_locked(site) && !self.switches.local_mobility_allowed(site)
    }

    pub fn count(&self, state: AgentState) -> usize {
        self.agents.iter().filter(|a| a.state == state).count()
    }

    /// Runs one tick and returns the metrics sample for it.
    ///
    /// Phases, in order: infection seeding for newly latched sites,
    /// traveler assignment, movement, propagation, precautions, recovery,
    /// metrics. The sample is labelled with the pre-increment tick.
    pub fn step(&mut self) -> MetricsSample {
        epidemic::seed_pending(self);
        mobility::assign_travelers(self);
        mobility::move_agents(self);
        if self.switches.propagate_infection() {
            epidemic::propagate(self);
        }
        if self.switches.take_precautions() {
            epidemic::do_precautions(self);
        }
        if self.switches.start_recovery() {
            epidemic::do_recovery(self);
        }
        let sample = metrics::compute_metrics(self);
        self.tick += 1;
        sample
    }
}
