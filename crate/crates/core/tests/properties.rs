use proptest::prelude::*;
use sitesim::world::{init_world, AgentState, Location, SimConfig};

/// Reachable within one tick. Several phases run per tick, so a seeded
/// agent can recover in the same tick it was infected.
fn allowed(from: AgentState, to: AgentState) -> bool {
    use AgentState::*;
    from == to
        || matches!(
            (from, to),
            (Susceptible, Infected) | (Susceptible, Precaution) | (Infected, Recovered) | (Susceptible, Recovered)
        )
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
    (p[0] - a[0] - t * vx).hypot(p[1] - a[1] - t * vy)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn worlds_stay_consistent(
        seed in any::<u64>(),
        agents in 1u32..12,
        p in 0.0f64..=1.0,
        step in 0.0f64..5.0,
        speed in 0.5f64..20.0,
        toggles in prop::collection::vec((0usize..34, any::<bool>(), 0u64..120), 0..40),
    ) {
        let config = SimConfig {
            agents_per_site: agents,
            base_infection_prob: p,
            local_step: step,
            transit_speed: speed,
            travel_period: 2,
            ..SimConfig::default()
        };
        let mut w = init_world(config, seed).unwrap();
        let ids = w.topology().all_switches();
        let total = w.agents.len();
        let mut toggles = toggles;
        toggles.sort_by_key(|t| t.2);
        let mut next = 0;
        for tick in 0..120u64 {
            while next < toggles.len() && toggles[next].2 == tick {
                let _ = w.apply_switch(ids[toggles[next].0], toggles[next].1);
                next += 1;
            }
            let before: Vec<AgentState> = w.agents.iter().map(|a| a.state).collect();
            let m = w.step();
            prop_assert_eq!(m.total(), total);
            let pct = m.pct_infected + m.pct_precaution + m.pct_recovered + m.pct_susceptible();
            prop_assert!((pct - 100.0).abs() < 1e-9);
            for (a, &was) in w.agents.iter().zip(&before) {
                prop_assert!(allowed(was, a.state), "{:?} -> {:?}", was, a.state);
                match a.location {
                    Location::Site(s) => {
                        let site = &w.sites()[s];
                        let d = (a.position[0] - site.center[0]).hypot(a.position[1] - site.center[1]);
                        prop_assert!(d <= site.radius, "agent {} outside {}", a.id, site.name);
                    }
                    Location::Transit(plan) => {
                        let (x, y) = w.topology().routes[plan.route];
                        let (sx, sy) = (&w.sites()[x], &w.sites()[y]);
                        let width = sx.radius.max(sy.radius);
                        prop_assert!(segment_distance(a.position, sx.center, sy.center) <= width + 1e-9);
                        prop_assert!(plan.destination == x || plan.destination == y);
                    }
                }
            }
        }
        // Latched switches never fell back.
        for id in ids.iter().filter(|id| id.is_latching()) {
            let requested = toggles.iter().any(|t| ids[t.0] == *id && t.1);
            if requested {
                prop_assert!(w.switches().get(*id));
            }
        }
    }
}
