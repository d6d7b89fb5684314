//! Test-only helpers shared by integration targets.
//!
//! `reference_tick` is a direct, index-free restatement of one tick. It
//! reads the world's public state, replays the documented draw order on a
//! copy of the generator, and never calls into the engine's phase code.

#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sitesim::world::{Agent, AgentState, Location, TransitPlan, WorldState};

pub struct Reference {
    pub agents: Vec<Agent>,
    pub seeded: Vec<bool>,
    pub rng: ChaCha8Rng,
    pub counts: [usize; 4],
}

fn choose(rng: &mut ChaCha8Rng, mut pool: Vec<usize>, k: usize) -> Vec<usize> {
    let n = pool.len();
    let k = k.min(n);
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort();
    pool
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[allow(clippy::needless_range_loop)]
pub fn reference_tick(w: &WorldState) -> Reference {
    let cfg = w.config();
    let sw = w.switches();
    let topo = w.topology();
    let sites = w.sites();
    let mut rng = w.rng().generator();
    let mut agents = w.agents.clone();
    let mut seeded = w.seeded_sites().to_vec();
    let n_sites = sites.len();

    // 1. seeding
    for s in 0..n_sites {
        if sw.infect_requested(s) && !seeded[s] {
            seeded[s] = true;
            let k = rng.gen_range(cfg.seed_infect_range.min..=cfg.seed_infect_range.max) as usize;
            let pool: Vec<usize> = (0..agents.len())
                .filter(|&i| agents[i].location == Location::Site(s) && agents[i].state == AgentState::Susceptible)
                .collect();
            for i in choose(&mut rng, pool, k) {
                agents[i].state = AgentState::Infected;
            }
        }
    }

    // 2. travelers
    if (w.tick_count() + 1).is_multiple_of(u64::from(cfg.travel_period)) {
        for s in 0..n_sites {
            let mut open = Vec::new();
            for (r, &(a, b)) in topo.routes.iter().enumerate() {
                let usable = sw.route_enabled(r) && !sw.route_locked(r) && !sw.site_locked(a) && !sw.site_locked(b);
                if usable && (a == s || b == s) {
                    open.push((r, if a == s { b } else { a }));
                }
            }
            if open.is_empty() {
                continue;
            }
            let k = rng.gen_range(cfg.travel_batch_range.min..=cfg.travel_batch_range.max) as usize;
            let frozen = sw.site_locked(s) && !sw.local_mobility_allowed(s);
            let pool: Vec<usize> = if frozen {
                vec![]
            } else {
                (0..agents.len()).filter(|&i| agents[i].location == Location::Site(s)).collect()
            };
            for i in choose(&mut rng, pool, k) {
                let (route, dest) = open[rng.gen_range(0..open.len())];
                let target = sites[dest].center;
                let (dx, dy) = (target[0] - agents[i].position[0], target[1] - agents[i].position[1]);
                let len = dx.hypot(dy);
                let direction = if len > 0.0 { [dx / len, dy / len] } else { [0.0, 0.0] };
                agents[i].location = Location::Transit(TransitPlan { route, destination: dest, direction });
                agents[i].heading = Some(dest);
            }
        }
    }

    // 3. movement
    for a in agents.iter_mut() {
        match a.location {
            Location::Site(s) => {
                if !sw.local_mobility_allowed(s) {
                    continue;
                }
                let site = &sites[s];
                let theta = TAU * rng.gen::<f64>();
                let (dx, dy) = (cfg.local_step * theta.cos(), cfg.local_step * theta.sin());
                let fwd = [a.position[0] + dx, a.position[1] + dy];
                let back = [a.position[0] - dx, a.position[1] - dy];
                a.position = if dist(fwd, site.center) <= site.radius {
                    fwd
                } else if dist(back, site.center) <= site.radius {
                    back
                } else {
                    let (ox, oy) = (fwd[0] - site.center[0], fwd[1] - site.center[1]);
                    let scale = site.radius / ox.hypot(oy) * (1.0 - 4.0 * f64::EPSILON);
                    [site.center[0] + ox * scale, site.center[1] + oy * scale]
                };
            }
            Location::Transit(plan) => {
                let dest = &sites[plan.destination];
                if dist(dest.center, a.position) <= cfg.transit_speed {
                    a.position = dest.center;
                } else {
                    a.position[0] += cfg.transit_speed * plan.direction[0];
                    a.position[1] += cfg.transit_speed * plan.direction[1];
                }
                if dist(a.position, dest.center) <= dest.radius {
                    a.location = Location::Site(plan.destination);
                    a.heading = None;
                }
            }
        }
    }

    // 4. propagation against every agent, no spatial index
    if sw.propagate_infection() {
        let infectors: Vec<usize> = (0..agents.len()).filter(|&i| agents[i].state == AgentState::Infected).collect();
        for src in infectors {
            for dst in 0..agents.len() {
                if agents[dst].state != AgentState::Susceptible {
                    continue;
                }
                let (dx, dy) = (
                    agents[dst].position[0] - agents[src].position[0],
                    agents[dst].position[1] - agents[src].position[1],
                );
                if dx.hypot(dy) > cfg.infection_radius {
                    continue;
                }
                let p = cfg.base_infection_prob * (1.0 - agents[dst].immunity);
                if rng.gen::<f64>() < p {
                    agents[dst].state = AgentState::Infected;
                }
            }
        }
    }

    // 5, 6. batch conversions
    let mut convert = |agents: &mut Vec<Agent>, range: sitesim::world::CountRange, from, to| {
        let k = rng.gen_range(range.min..=range.max) as usize;
        let pool: Vec<usize> = (0..agents.len()).filter(|&i| agents[i].state == from).collect();
        for i in choose(&mut rng, pool, k) {
            agents[i].state = to;
        }
    };
    if sw.take_precautions() {
        convert(&mut agents, cfg.precaution_per_tick_range, AgentState::Susceptible, AgentState::Precaution);
    }
    if sw.start_recovery() {
        convert(&mut agents, cfg.recovery_per_tick_range, AgentState::Infected, AgentState::Recovered);
    }

    // 7. counts
    let mut counts = [0; 4];
    for a in &agents {
        counts[match a.state {
            AgentState::Susceptible => 0,
            AgentState::Infected => 1,
            AgentState::Precaution => 2,
            AgentState::Recovered => 3,
        }] += 1;
    }
    Reference { agents, seeded, rng, counts }
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn shipped_scenarios() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios"))
        .expect("scenarios dir")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
}

pub fn load_plan(name: &str) -> sitesim::scenario::ScenarioPlan {
    let text = std::fs::read_to_string(scenario_path(name)).unwrap();
    sitesim::parse_scenario(&text).unwrap().plan(&sitesim::SimConfig::default()).unwrap()
}
