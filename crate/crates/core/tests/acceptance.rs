//! Acceptance gate. Each criterion runs in isolation and prints one
//! PASS/FAIL line; the process exits non-zero if any criterion fails.
//!
//! Scale: 500 agents, at most 2000 ticks per run.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sitesim::epidemic::toss_a_coin;
use sitesim::metrics::MetricsSample;
use sitesim::mobility::{mobility_direction, open_neighbors};
use sitesim::rng::SimRng;
use sitesim::scenario::ScenarioPlan;
use sitesim::world::{init_world, CountRange, SimConfig, SwitchError, SwitchId, WorldState};

use common::{load_plan, reference_tick, scenario_path, shipped_scenarios};

const POPULATION: usize = 500;
const COIN_P: f64 = 0.6;
const COIN_DRAWS: usize = 100_000;
const COIN_TOL: f64 = 0.005;
const DIRECTION_DRAWS: usize = 100_000;
const DIRECTION_TOL: f64 = 0.02;
const FREEZE_TICKS: u64 = 500;
const FIG10_GROWTH_FACTOR: f64 = 10.0;
const FIG11_MIN_GROWTH_PP: f64 = 10.0;
const FIG11_PLATEAU_WINDOW: usize = 200;
const FIG11_PLATEAU_PP: f64 = 1.0;
const MICRO_WORLDS: u64 = 200;
const LATCH_SEQUENCES: u64 = 100;

fn samples(plan: &ScenarioPlan) -> Vec<MetricsSample> {
    let ticks = plan.total_ticks.expect("shipped scenarios set total_ticks");
    plan.run(ticks).unwrap().series().samples().to_vec()
}

fn onset(plan: &ScenarioPlan, switch: &str) -> u64 {
    let topo = init_world(plan.config.clone(), 0).unwrap().topology().clone();
    let id = topo.resolve(switch).unwrap();
    plan.events.iter().find(|e| e.1 == id && e.2).expect("scheduled").0
}

fn determinism() {
    let exe = env!("CARGO_BIN_EXE_sitesim");
    let dir = std::env::temp_dir().join(format!("sitesim-accept-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.join(format!("run{i}.csv"));
        let status = Command::new(exe)
            .args(["run", "--seed", "42", "--scenario"])
            .arg(scenario_path("fig10.json"))
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    std::fs::remove_dir_all(&dir).ok();
    assert!(outputs[0].len() > 1000);
    assert_eq!(outputs[0], outputs[1], "CSV outputs differ");
}

fn conservation() {
    let files = shipped_scenarios();
    assert!(files.len() >= 3);
    for path in files {
        let plan = sitesim::parse_scenario(&std::fs::read_to_string(&path).unwrap())
            .unwrap()
            .plan(&SimConfig::default())
            .unwrap();
        for s in samples(&plan) {
            assert_eq!(s.total(), POPULATION, "{} tick {}", path.display(), s.tick);
        }
    }
}

fn latching_suite() {
    for seq in 0..LATCH_SEQUENCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seq);
        let mut w = init_world(SimConfig { agents_per_site: 4, ..SimConfig::default() }, seq).unwrap();
        let ids = w.topology().all_switches();
        for _ in 0..300 {
            let id = ids[rng.gen_range(0..ids.len())];
            let value = rng.gen_bool(0.5);
            let before = w.switches().clone();
            let result = w.apply_switch(id, value);
            if id.is_latching() && before.get(id) && !value {
                match result {
                    Err(ref e @ SwitchError::Latched(_)) => assert_eq!(e.code(), "latching_violation"),
                    other => panic!("un-latch of {id:?} returned {other:?}"),
                }
                assert_eq!(w.switches(), &before, "rejected command changed the board");
            }
            for &l in ids.iter().filter(|l| l.is_latching()) {
                assert!(!(before.get(l) && !w.switches().get(l)), "{l:?} went true -> false");
            }
            if rng.gen_bool(0.1) {
                w.step();
            }
        }
    }
}

fn assert_closure(w: &WorldState) {
    let topo = w.topology();
    for s in 0..topo.sites.len() {
        if w.switches().site_locked(s) {
            for r in topo.incident_routes(s) {
                assert!(w.switches().route_locked(r), "site {} locked but route {} open", topo.sites[s], topo.route_name(r));
            }
        }
    }
}

fn lockdown_closure() {
    for run in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + run);
        let mut w = init_world(SimConfig { agents_per_site: 20, ..SimConfig::default() }, run).unwrap();
        let ids: Vec<SwitchId> = w
            .topology()
            .all_switches()
            .into_iter()
            .filter(|id| matches!(id, SwitchId::SiteLockdown(_) | SwitchId::RouteLockdown(_) | SwitchId::RouteEnable(_)))
            .collect();
        for _ in 0..200 {
            for _ in 0..rng.gen_range(0..4) {
                let _ = w.apply_switch(ids[rng.gen_range(0..ids.len())], rng.gen_bool(0.5));
                assert_closure(&w);
            }
            w.step();
            assert_closure(&w);
        }
    }
}

fn freeze() {
    let plan = load_plan("freeze_red.json");
    let lock_at = onset(&plan, "lockdown-red");
    assert_eq!(lock_at, {
        let topo = init_world(plan.config.clone(), 0).unwrap().topology().clone();
        let id = topo.resolve("local-mobility-red-allow").unwrap();
        plan.events.iter().find(|e| e.1 == id && !e.2).expect("mobility off").0
    });
    let cutoff = lock_at + (plan.config.max_route_length() / plan.config.transit_speed).ceil() as u64;
    let residents = |w: &WorldState| -> BTreeMap<u32, [u64; 2]> {
        w.agents
            .iter()
            .filter(|a| a.resident_of() == Some(0))
            .map(|a| (a.id, [a.position[0].to_bits(), a.position[1].to_bits()]))
            .collect()
    };
    let mut sim = plan.start().unwrap();
    plan.advance(&mut sim, lock_at).unwrap();
    let at_lock = residents(sim.world());
    assert!(!at_lock.is_empty());

    // From the lock on, nobody leaves and nobody already inside moves;
    // in-flight travelers may still arrive until the cutoff.
    let mut settled = None;
    for t in lock_at + 1..=cutoff.max(lock_at + FREEZE_TICKS) {
        plan.advance(&mut sim, t).unwrap();
        let now = residents(sim.world());
        for (id, pos) in &at_lock {
            assert_eq!(now.get(id), Some(pos), "resident {id} moved or left at tick {t}");
        }
        if t == cutoff {
            settled = Some(now.clone());
        }
        if let Some(s) = &settled {
            assert_eq!(&now, s, "red residents changed at tick {t}");
        }
    }
    // And 500 consecutive ticks of the full, settled set.
    let settled = settled.unwrap();
    for t in 1..=FREEZE_TICKS {
        let tick = cutoff.max(lock_at + FREEZE_TICKS) + t;
        plan.advance(&mut sim, tick).unwrap();
        assert_eq!(residents(sim.world()), settled, "red residents moved at tick {tick}");
    }
}

fn travel_cutoff() {
    let base = load_plan("fig10.json");
    let lock_at = 300;
    let mut plan = base.clone();
    plan.events.push((lock_at, SwitchId::SiteLockdown(0), true));
    plan.events.sort_by_key(|e| e.0);
    let cutoff = lock_at + (plan.config.max_route_length() / plan.config.transit_speed).ceil() as u64;
    let mut sim = plan.start().unwrap();
    plan.advance(&mut sim, lock_at).unwrap();
    let mut transitions_before_cutoff = 0;
    for t in lock_at..1500 {
        let before: Vec<_> = sim.world().agents.iter().map(|a| a.resident_of()).collect();
        plan.advance(&mut sim, t + 1).unwrap();
        for (a, prev) in sim.world().agents.iter().zip(before) {
            let now = a.resident_of();
            if now != prev && (now == Some(0) || prev == Some(0)) {
                assert!(t < cutoff, "agent {} crossed red's boundary at tick {}", a.id, t + 1);
                transitions_before_cutoff += 1;
            }
        }
    }
    // Some travelers were in flight toward red when it locked.
    assert!(transitions_before_cutoff > 0);
}

fn fig10_shape() {
    let s = samples(&load_plan("fig10.json"));
    assert_eq!(s.len(), 2000);
    for w in s.windows(2) {
        assert!(w[1].pct_infected >= w[0].pct_infected, "dropped at tick {}", w[1].tick);
    }
    let at50 = s[50].pct_infected;
    let at2000 = s[1999].pct_infected;
    assert!(at50 > 0.0);
    assert!(at2000 >= FIG10_GROWTH_FACTOR * at50, "tick 50: {at50}, final: {at2000}");
}

fn fig11_shape() {
    let plan = load_plan("fig11.json");
    let start = onset(&plan, "take-precautions") as usize;
    let s = samples(&plan);
    let growth = s[start - 1].pct_infected - s[0].pct_infected;
    assert!(growth >= FIG11_MIN_GROWTH_PP, "growth before precautions {growth}");
    let tail = &s[s.len() - FIG11_PLATEAU_WINDOW..];
    let change = tail.last().unwrap().pct_infected - tail.first().unwrap().pct_infected;
    let spread = tail.iter().map(|x| x.pct_infected).fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().map(|x| x.pct_infected).fold(f64::INFINITY, f64::min);
    assert!(change.abs() < FIG11_PLATEAU_PP && spread < FIG11_PLATEAU_PP, "change {change}, spread {spread}");
}

fn fig12_shape() {
    let plan = load_plan("fig12.json");
    let start = onset(&plan, "start-recovery") as usize;
    assert_eq!(start as u64, {
        let topo = init_world(plan.config.clone(), 0).unwrap().topology().clone();
        let id = topo.resolve("propagate-infection").unwrap();
        plan.events.iter().find(|e| e.1 == id && !e.2).unwrap().0
    });
    let s = samples(&plan);
    assert!(s[start - 1].pct_infected > 0.0);
    for w in s[start..].windows(2) {
        assert!(w[1].pct_infected <= w[0].pct_infected, "rose at tick {}", w[1].tick);
    }
    assert_eq!(s.last().unwrap().infected, 0);
}

fn random_micro_world(seed: u64) -> WorldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = |rng: &mut ChaCha8Rng, hi: u32| rng.gen_range(0..=hi);
    let range = |rng: &mut ChaCha8Rng| {
        let a = lo(rng, 3);
        CountRange::new(a, a + lo(rng, 3))
    };
    let config = SimConfig {
        agents_per_site: rng.gen_range(1..=4),
        local_step: rng.gen_range(0.0..4.0),
        transit_speed: rng.gen_range(0.5..30.0),
        infection_radius: rng.gen_range(0.5..25.0),
        base_infection_prob: rng.gen_range(0.0..=1.0),
        travel_period: rng.gen_range(1..=3),
        seed_infect_range: range(&mut rng),
        travel_batch_range: range(&mut rng),
        precaution_per_tick_range: range(&mut rng),
        recovery_per_tick_range: range(&mut rng),
        ..SimConfig::default()
    };
    let mut w = init_world(config, seed).unwrap();
    let ids = w.topology().all_switches();
    for _ in 0..rng.gen_range(0..12) {
        for _ in 0..rng.gen_range(0..6) {
            let _ = w.apply_switch(ids[rng.gen_range(0..ids.len())], rng.gen_bool(0.6));
        }
        w.step();
    }
    for _ in 0..rng.gen_range(0..10) {
        let _ = w.apply_switch(ids[rng.gen_range(0..ids.len())], rng.gen_bool(0.6));
    }
    w
}

fn oracle_equivalence() {
    let n = |w: &WorldState| w.agents.len();
    for seed in 0..MICRO_WORLDS {
        let mut engine = random_micro_world(seed);
        assert!((5..=20).contains(&n(&engine)));
        let reference = reference_tick(&engine);
        let sample = engine.step();
        assert_eq!(engine.agents, reference.agents, "agents differ for world {seed}");
        assert_eq!(engine.seeded_sites(), &reference.seeded[..], "seeding differs for world {seed}");
        assert!(engine.rng().generator() == reference.rng, "rng position differs for world {seed}");
        assert_eq!(
            [sample.susceptible, sample.infected, sample.precaution, sample.recovered],
            reference.counts
        );
    }
}

fn precaution_shield() {
    let plan = load_plan("precaution_shield.json");
    let s = samples(&plan);
    let seeded = s[0].infected;
    assert!(seeded > 0);
    assert_eq!(s[0].susceptible, 0, "every remaining susceptible agent takes precautions at tick 0");
    for x in &s {
        assert_eq!(x.infected, seeded, "tick {}", x.tick);
        assert_eq!(x.precaution, POPULATION - seeded);
    }
}

fn statistical_gates() {
    let mut rng = SimRng::seeded(2024);
    let hits = (0..COIN_DRAWS).filter(|_| toss_a_coin(&mut rng, COIN_P).unwrap()).count();
    let mean = hits as f64 / COIN_DRAWS as f64;
    assert!((mean - COIN_P).abs() <= COIN_TOL, "coin mean {mean}");

    let mut w = init_world(SimConfig::default(), 1).unwrap();
    for r in 0..4 {
        w.apply_switch(SwitchId::RouteEnable(r), true).unwrap();
    }
    let open = open_neighbors(w.switches(), 0);
    assert_eq!(open.len(), 4);
    let mut counts = [0usize; 5];
    for _ in 0..DIRECTION_DRAWS {
        let (_, dest) = mobility_direction(&open, &mut rng).unwrap();
        counts[dest] += 1;
    }
    let neighbors: BTreeSet<usize> = open.iter().map(|o| o.1).collect();
    assert_eq!(neighbors, BTreeSet::from([1, 2, 3, 4]));
    for &c in &counts[1..] {
        let f = c as f64 / DIRECTION_DRAWS as f64;
        assert!((f - 0.25).abs() <= DIRECTION_TOL, "neighbor frequency {f}");
    }
}

fn main() -> ExitCode {
    let criteria: &[(&str, fn())] = &[
        ("determinism: fig10 --seed 42 twice gives byte-identical CSV", determinism),
        ("conservation: state counts sum to 500 every tick of every shipped scenario", conservation),
        ("latching: 100 random sequences never un-latch, violations rejected", latching_suite),
        ("lockdown closure: locked sites always have locked incident routes", lockdown_closure),
        ("freeze: locked red with local mobility off holds positions for 500 ticks", freeze),
        ("travel cutoff: no red boundary crossings after T + ceil(max route / speed)", travel_cutoff),
        ("fig10 shape: infected share non-decreasing, >= 10x tick-50 by tick 2000", fig10_shape),
        ("fig11 shape: >= 10 pp growth, then < 1 pp change over final 200 ticks", fig11_shape),
        ("fig12 shape: non-increasing after recovery onset and reaches 0", fig12_shape),
        ("oracle equivalence: 200 micro-worlds match the brute-force tick", oracle_equivalence),
        ("precaution shield: infected count equals seed count forever", precaution_shield),
        ("statistical gates: coin p=0.6 +-0.005, direction uniformity +-0.02", statistical_gates),
    ];
    panic::set_hook(Box::new(|info| eprintln!("    {info}")));
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let ok = panic::catch_unwind(AssertUnwindSafe(check)).is_ok();
        let secs = started.elapsed().as_secs_f64();
        println!("{} {name} ({secs:.1}s)", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
