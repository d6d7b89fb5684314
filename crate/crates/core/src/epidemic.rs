//! Infection seeding, propagation, precautions and recovery.
//!
//! The only state transitions are Susceptible to Infected, Susceptible to
//! Precaution, and Infected to Recovered. Precaution and Recovered are
//! absorbing.

use std::collections::HashMap;

use thiserror::Error;

use crate::rng::SimRng;
use crate::world::{AgentState, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("probability {0} outside [0, 1]")]
pub struct InvalidProbability(pub f64);

/// Bernoulli gate: true with probability `p`. Always consumes one draw.
pub fn toss_a_coin(rng: &mut SimRng, p: f64) -> Result<bool, InvalidProbability> {
    if !(0.0..=1.0).contains(&p) {
        return Err(InvalidProbability(p));
    }
    Ok(rng.unit() < p)
}

/// Per-contact infection chance for a target with the given immunity and
/// state. Only Susceptible targets can be infected.
pub fn infection_probability(base: f64, immunity: f64, target: AgentState) -> f64 {
    match target {
        AgentState::Susceptible => base * (1.0 - immunity),
        AgentState::Infected | AgentState::Precaution | AgentState::Recovered => 0.0,
    }
}

/// Seeds infection in every site whose infect switch is on and which has
/// not been seeded yet. Sites are visited in order; each draws its count
/// then picks that many Susceptible residents.
pub fn seed_pending(world: &mut WorldState) {
    for site in 0..world.sites.len() {
        if !world.switches.infect_requested(site) || world.seeded[site] {
            continue;
        }
        world.seeded[site] = true;
        seed_infection(world, site);
    }
}

/// Infects a random batch of Susceptible residents of `site` (fewer if not
/// enough are available).
pub fn seed_infection(world: &mut WorldState, site: usize) {
    let k = world.rng.in_range(world.config.seed_infect_range);
    let pool: Vec<usize> = world
        .agents
        .iter()
        .filter(|a| a.resident_of() == Some(site) && a.state == AgentState::Susceptible)
        .map(|a| a.id as usize)
        .collect();
    for id in world.rng.pick(&pool, k) {
        world.agents[id].state = AgentState::Infected;
    }
}

/// Uniform grid over agent positions with cell size equal to the infection
/// radius, so every contact lies in the 3x3 block around a cell.
struct ContactGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl ContactGrid {
    fn new(cell: f64) -> Self {
        Self { cell, buckets: HashMap::new() }
    }

    fn key(&self, p: [f64; 2]) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    fn insert(&mut self, id: usize, p: [f64; 2]) {
        let key = self.key(p);
        self.buckets.entry(key).or_default().push(id);
    }

    /// Ids in the neighbourhood of `p`, ascending.
    fn around(&self, p: [f64; 2]) -> Vec<usize> {
        let (cx, cy) = self.key(p);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(cx + dx, cy + dy)) {
                    out.extend_from_slice(ids);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Synchronous propagation over the agents infected before this phase.
///
/// Infectors are visited by ascending id; for each, every still-Susceptible
/// agent within `infection_radius` (any site or route) is visited by
/// ascending id and gets one coin toss. Agents infected here do not spread
/// until the next tick.
pub fn propagate(world: &mut WorldState) {
    let radius = world.config.infection_radius;
    let base = world.config.base_infection_prob;
    let infectors: Vec<usize> = world
        .agents
        .iter()
        .filter(|a| a.is_infected())
        .map(|a| a.id as usize)
        .collect();
    if infectors.is_empty() {
        return;
    }
    let mut grid = ContactGrid::new(radius);
    for a in world.agents.iter().filter(|a| a.state == AgentState::Susceptible) {
        grid.insert(a.id as usize, a.position);
    }
    for src in infectors {
        let origin = world.agents[src].position;
        for dst in grid.around(origin) {
            let target = &world.agents[dst];
            if target.state != AgentState::Susceptible {
                continue;
            }
            let (dx, dy) = (target.position[0] - origin[0], target.position[1] - origin[1]);
            if dx.hypot(dy) > radius {
                continue;
            }
            let p = infection_probability(base, target.immunity, target.state);
            if toss_a_coin(&mut world.rng, p).expect("validated probability") {
                world.agents[dst].state = AgentState::Infected;
            }
        }
    }
}

/// A random batch of Susceptible agents, world-wide, adopt precautions.
pub fn do_precautions(world: &mut WorldState) {
    convert_batch(
        world,
        world.config.precaution_per_tick_range,
        AgentState::Susceptible,
        AgentState::Precaution,
    );
}

/// A random batch of Infected agents recover.
pub fn do_recovery(world: &mut WorldState) {
    convert_batch(
        world,
        world.config.recovery_per_tick_range,
        AgentState::Infected,
        AgentState::Recovered,
    );
}

fn convert_batch(
    world: &mut WorldState,
    range: crate::world::CountRange,
    from: AgentState,
    to: AgentState,
) {
    let k = world.rng.in_range(range);
    let pool: Vec<usize> = world
        .agents
        .iter()
        .filter(|a| a.state == from)
        .map(|a| a.id as usize)
        .collect();
    for id in world.rng.pick(&pool, k) {
        world.agents[id].state = to;
    }
}
