//! Multi-site agent-based epidemic simulator.
//!
//! Agents live in disc-shaped sites joined by routes, random-walk inside
//! their site, travel along open routes, and move through the states
//! Susceptible, Infected, Precaution and Recovered. Operators drive the run
//! through a panel of switches (route enables, route and site lockdowns,
//! local mobility, infection seeding, propagation, precautions, recovery),
//! either live through [`control`] or from a scripted [`scenario`].

pub mod cli;
pub mod control;
pub mod epidemic;
pub mod metrics;
pub mod mobility;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod world;

pub use metrics::{MetricsSample, MetricsSeries};
pub use scenario::{parse_config, parse_scenario, Scenario, ScenarioEvent};
pub use sim::Simulation;
pub use world::{init_world, Agent, AgentState, Location, SimConfig, WorldState};
