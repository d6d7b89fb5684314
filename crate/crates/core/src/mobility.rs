//! Movement inside sites and transit between them.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::rng::SimRng;
use crate::world::{Agent, Location, Site, SwitchBoard, TransitPlan, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown route index {0}")]
pub struct UnknownRoute(pub usize);

/// A route carries new travelers only when it is enabled and neither it nor
/// either endpoint site is locked down.
pub fn route_open(switches: &SwitchBoard, route: usize) -> Result<bool, UnknownRoute> {
    let &(a, b) = switches.topology().routes.get(route).ok_or(UnknownRoute(route))?;
    Ok(switches.route_enabled(route)
        && !switches.route_locked(route)
        && !switches.site_locked(a)
        && !switches.site_locked(b))
}

/// `(route, neighbor site)` for every open route touching `site`, in route
/// order.
pub fn open_neighbors(switches: &SwitchBoard, site: usize) -> Vec<(usize, usize)> {
    let topo = switches.topology();
    topo.incident_routes(site)
        .filter(|&r| route_open(switches, r).unwrap_or(false))
        .map(|r| {
            let (a, b) = topo.routes[r];
            (r, if a == site { b } else { a })
        })
        .collect()
}

/// One random-walk step of length `step` inside `site`.
///
/// Consumes one draw for the heading. A step that would leave the disc is
/// reversed; if the reversed step also leaves it, the point is pulled back
/// onto the boundary.
pub fn local_move(position: [f64; 2], site: &Site, step: f64, rng: &mut SimRng) -> [f64; 2] {
    let theta = TAU * rng.unit();
    let (dx, dy) = (step * theta.cos(), step * theta.sin());
    let forward = [position[0] + dx, position[1] + dy];
    if site.contains(forward) {
        return forward;
    }
    let back = [position[0] - dx, position[1] - dy];
    if site.contains(back) {
        return back;
    }
    let [cx, cy] = site.center;
    let (ox, oy) = (forward[0] - cx, forward[1] - cy);
    let scale = site.radius / ox.hypot(oy) * (1.0 - 4.0 * f64::EPSILON);
    [cx + ox * scale, cy + oy * scale]
}

/// Picks a destination uniformly among `open` (one draw when non-empty).
pub fn mobility_direction(open: &[(usize, usize)], rng: &mut SimRng) -> Option<(usize, usize)> {
    if open.is_empty() {
        return None;
    }
    Some(open[rng.below(open.len())])
}

fn plan_toward(from: [f64; 2], route: usize, destination: usize, target: [f64; 2]) -> TransitPlan {
    let (dx, dy) = (target[0] - from[0], target[1] - from[1]);
    let len = dx.hypot(dy);
    let direction = if len > 0.0 { [dx / len, dy / len] } else { [0.0, 0.0] };
    TransitPlan { route, destination, direction }
}

/// Sends batches of residents out along open routes.
///
/// Runs on ticks where `(tick + 1)` is a multiple of `travel_period`, so the
/// first travelers appear in the state after tick `travel_period`. For each
/// site with an open route, in site order: draw the batch size, pick that
/// many non-frozen residents, then draw each one's destination in id order.
pub fn assign_travelers(world: &mut WorldState) {
    let period = u64::from(world.config.travel_period);
    if !(world.tick + 1).is_multiple_of(period) {
        return;
    }
    for site in 0..world.sites.len() {
        let open = open_neighbors(&world.switches, site);
        if open.is_empty() {
            continue;
        }
        let k = world.rng.in_range(world.config.travel_batch_range);
        let frozen = world.site_frozen(site);
        let residents: Vec<usize> = world
            .agents
            .iter()
            .filter(|a| !frozen && a.resident_of() == Some(site))
            .map(|a| a.id as usize)
            .collect();
        for id in world.rng.pick(&residents, k) {
            let Some((route, dest)) = mobility_direction(&open, &mut world.rng) else { continue };
            let agent = &mut world.agents[id];
            let plan = plan_toward(agent.position, route, dest, world.sites[dest].center);
            agent.location = Location::Transit(plan);
            agent.heading = Some(dest);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance {
    Moving,
    Arrived,
}

/// Moves a traveler `speed` units toward its destination center. Entering
/// the destination disc makes it a resident there. Route or site lockdowns
/// applied after departure do not stop it.
pub fn advance_transit(agent: &mut Agent, sites: &[Site], speed: f64) -> Advance {
    let Location::Transit(plan) = agent.location else { return Advance::Arrived };
    let dest = &sites[plan.destination];
    let [cx, cy] = dest.center;
    let remaining = (cx - agent.position[0]).hypot(cy - agent.position[1]);
    agent.position = if remaining <= speed {
        dest.center
    } else {
        [
            agent.position[0] + speed * plan.direction[0],
            agent.position[1] + speed * plan.direction[1],
        ]
    };
    if dest.contains(agent.position) {
        agent.location = Location::Site(plan.destination);
        agent.heading = None;
        Advance::Arrived
    } else {
        Advance::Moving
    }
}

/// Movement phase: residents of sites with local mobility take one step,
/// travelers advance. Agents are visited by ascending id.
pub fn move_agents(world: &mut WorldState) {
    let WorldState { agents, sites, switches, config, rng, .. } = world;
    for agent in agents.iter_mut() {
        match agent.location {
            Location::Site(s) => {
                if switches.local_mobility_allowed(s) {
                    agent.position = local_move(agent.position, &sites[s], config.local_step, rng);
                }
            }
            Location::Transit(_) => {
                advance_transit(agent, sites, config.transit_speed);
            }
        }
    }
}
