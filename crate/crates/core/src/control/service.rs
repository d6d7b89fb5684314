//! The live simulation loop.
//!
//! Exactly one loop owns the [`Simulation`]. Clients talk to it through a
//! FIFO [`CommandQueue`] and hear back through a broadcast of
//! [`Outbound`] frames. Commands are applied only at tick boundaries, so a
//! snapshot never shows a half-applied command.

use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use tokio::sync::{broadcast, mpsc, watch};

use super::protocol::{Command, ErrorEvent, Frame, Hello, Snapshot, SCHEMA_VERSION};
use crate::metrics::MetricsSeries;
use crate::scenario::{ParseError, ScenarioPlan};
use crate::sim::Simulation;
use crate::world::{init_world, SimConfig, Topology};

pub type ClientId = u64;

/// A command plus the client that sent it (`None` for the scenario script
/// or the server itself).
#[derive(Debug, Clone)]
pub struct Envelope {
    pub client: Option<ClientId>,
    pub command: Command,
}

/// A frame for one client, or for everyone when `to` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub to: Option<ClientId>,
    pub frame: Frame,
}

impl Outbound {
    fn all(frame: Frame) -> Self {
        Self { to: None, frame }
    }

    pub fn is_for(&self, client: ClientId) -> bool {
        self.to.is_none_or(|c| c == client)
    }
}

#[derive(Debug, Clone)]
pub struct LiveOptions {
    pub config: SimConfig,
    pub seed: u64,
    /// Scripted switch events replayed alongside live commands.
    pub scenario: Option<ScenarioPlan>,
    pub snapshot_interval: u64,
    /// Ticks per second; `0.0` is unthrottled.
    pub tick_rate: f64,
    pub start_paused: bool,
}

impl LiveOptions {
    pub fn new(config: SimConfig, seed: u64) -> Self {
        let snapshot_interval = default_snapshot_interval(config.total_agents());
        Self { config, seed, scenario: None, snapshot_interval, tick_rate: 20.0, start_paused: false }
    }
}

/// One snapshot per tick up to 500 agents, sparser above that.
pub fn default_snapshot_interval(agents: usize) -> u64 {
    agents.div_ceil(500).max(1) as u64
}

/// Validation shared by the queue (names) and the loop (everything else).
/// Holds the topology of the current world so names can be checked on
/// enqueue.
#[derive(Debug, Clone)]
pub struct CommandQueue {
    tx: mpsc::UnboundedSender<Envelope>,
    topology: Arc<RwLock<Topology>>,
}

impl CommandQueue {
    /// Queues `command` FIFO. Unknown switch names and bad speeds are
    /// rejected here; latching and closure violations surface later, when
    /// the loop applies the command.
    pub fn enqueue(&self, client: Option<ClientId>, command: Command) -> Result<(), ErrorEvent> {
        match &command {
            Command::ToggleSwitch { switch, .. } => {
                let topo = self.topology.read().expect("topology lock");
                if let Err(e) = topo.resolve(switch) {
                    let mut ev = ErrorEvent::new(e.code(), e.to_string());
                    ev.switch = Some(switch.clone());
                    return Err(ev);
                }
            }
            Command::SetSpeed { tick_rate } if !(tick_rate.is_finite() && *tick_rate >= 0.0) => {
                return Err(ErrorEvent::new("invalid_command", format!("tick_rate must be finite and >= 0, got {tick_rate}")));
            }
            _ => {}
        }
        self.tx
            .send(Envelope { client, command })
            .map_err(|_| ErrorEvent::new("stopped", "simulation loop has stopped"))
    }
}

/// The simulation plus run control. Drive it with [`LiveSim::boundary`] and
/// [`LiveSim::tick`]; [`run_loop`] does that on a timer.
#[derive(Debug)]
pub struct LiveSim {
    sim: Simulation,
    seed: u64,
    scenario: Option<ScenarioPlan>,
    /// Last tick whose scripted events have been injected.
    scripted_through: Option<u64>,
    paused: bool,
    tick_rate: f64,
    snapshot_interval: u64,
    topology: Arc<RwLock<Topology>>,
    series: Arc<Mutex<MetricsSeries>>,
    latest: Arc<Mutex<Published>>,
}

/// What a newly connected client needs to catch up.
#[derive(Debug, Clone, Default)]
pub struct Published {
    pub hello: Option<Hello>,
    pub snapshot: Option<Snapshot>,
}

#[derive(Debug, thiserror::Error)]
pub enum LiveError {
    #[error(transparent)]
    World(#[from] crate::world::WorldError),
    #[error(transparent)]
    Scenario(#[from] ParseError),
}

impl LiveSim {
    pub fn new(opts: LiveOptions) -> Result<Self, LiveError> {
        let (config, seed) = match &opts.scenario {
            Some(plan) => (plan.config.clone(), plan.seed),
            None => (opts.config.clone(), opts.seed),
        };
        let world = init_world(config, seed)?;
        let topology = Arc::new(RwLock::new(world.topology().clone()));
        let mut live = Self {
            sim: Simulation::new(world),
            seed,
            scenario: opts.scenario,
            scripted_through: None,
            paused: opts.start_paused,
            tick_rate: opts.tick_rate,
            snapshot_interval: opts.snapshot_interval.max(1),
            topology,
            series: Arc::new(Mutex::new(MetricsSeries::new())),
            latest: Arc::new(Mutex::new(Published::default())),
        };
        live.publish_catch_up();
        Ok(live)
    }

    /// A queue feeding this loop, plus the receiving end to hand to
    /// [`LiveSim::boundary`] or [`run_loop`].
    pub fn queue(&self) -> (CommandQueue, mpsc::UnboundedReceiver<Envelope>) {
        let (tx, rx) = mpsc::unbounded_channel();
        (CommandQueue { tx, topology: Arc::clone(&self.topology) }, rx)
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn tick_rate(&self) -> f64 {
        self.tick_rate
    }

    /// Live metrics series, shared with the HTTP endpoint.
    pub fn series_handle(&self) -> Arc<Mutex<MetricsSeries>> {
        Arc::clone(&self.series)
    }

    pub fn published_handle(&self) -> Arc<Mutex<Published>> {
        Arc::clone(&self.latest)
    }

    pub fn hello(&self) -> Hello {
        let world = self.sim.world();
        Hello {
            schema_version: SCHEMA_VERSION,
            config: world.config().clone(),
            seed: self.seed,
            switches: world.switches().entries().into_iter().map(|(n, _)| n).collect(),
            tick: world.tick_count(),
            paused: self.paused,
            tick_rate: self.tick_rate,
            client_id: None,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::capture(self.sim.world(), self.sim.series().last().copied())
    }

    fn publish_catch_up(&mut self) {
        let mut latest = self.latest.lock().expect("published lock");
        latest.hello = Some(self.hello());
        latest.snapshot = Some(self.snapshot());
    }

    /// Applies everything due at the current tick boundary: scripted
    /// events first (once per tick, however often the boundary is
    /// visited), then queued commands in arrival order. Returns the frames
    /// to deliver. A snapshot follows any batch that changed state.
    pub fn boundary(&mut self, commands: impl IntoIterator<Item = Envelope>) -> Vec<Outbound> {
        let mut out = Vec::new();
        let tick = self.sim.world().tick_count();
        let due = self.scripted_through != Some(tick);
        self.scripted_through = Some(tick);
        let scripted: Vec<Envelope> = self
            .scenario
            .iter()
            .filter(|_| due)
            .flat_map(|plan| {
                let topo = self.sim.world().topology();
                plan.events_at(tick)
                    .map(|(id, value)| Envelope {
                        client: None,
                        command: Command::ToggleSwitch { switch: topo.name(id), value },
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut changed = false;
        let mut reset = false;
        for env in scripted.into_iter().chain(commands) {
            match self.apply(env, &mut out) {
                Applied::Changed => changed = true,
                Applied::Reset => {
                    changed = true;
                    reset = true;
                }
                Applied::Unchanged => {}
            }
        }
        if reset {
            out.push(Outbound::all(Frame::Hello(self.hello())));
        }
        if changed {
            let snap = self.snapshot();
            self.latest.lock().expect("published lock").snapshot = Some(snap.clone());
            out.push(Outbound::all(Frame::Snapshot(snap)));
        }
        out
    }

    fn apply(&mut self, env: Envelope, out: &mut Vec<Outbound>) -> Applied {
        let tick = self.sim.world().tick_count();
        let reject = |out: &mut Vec<Outbound>, ev: ErrorEvent| {
            // Scripted events were validated at parse time; anything else
            // goes back to whoever sent it.
            if let Some(client) = env.client {
                out.push(Outbound { to: Some(client), frame: Frame::Error(ErrorEvent { tick: Some(tick), ..ev }) });
            }
        };
        match env.command {
            Command::ToggleSwitch { ref switch, value } => {
                match self.sim.world_mut().apply_named(switch, value) {
                    Ok(_) => Applied::Changed,
                    Err(e) => {
                        let mut ev = ErrorEvent::new(e.code(), e.to_string());
                        ev.switch = Some(switch.clone());
                        reject(out, ev);
                        Applied::Unchanged
                    }
                }
            }
            Command::Pause => {
                self.paused = true;
                self.latest.lock().expect("published lock").hello = Some(self.hello());
                Applied::Unchanged
            }
            Command::Resume => {
                self.paused = false;
                self.latest.lock().expect("published lock").hello = Some(self.hello());
                Applied::Unchanged
            }
            Command::SetSpeed { tick_rate } => {
                self.tick_rate = tick_rate;
                self.latest.lock().expect("published lock").hello = Some(self.hello());
                Applied::Unchanged
            }
            Command::Reset { seed, ref scenario } => {
                let (config, plan) = match scenario {
                    Some(s) => match s.plan(self.sim.world().config()) {
                        Ok(plan) => (plan.config.clone(), Some(plan)),
                        Err(e) => {
                            reject(out, ErrorEvent::new("invalid_scenario", e.to_string()));
                            return Applied::Unchanged;
                        }
                    },
                    None => (self.sim.world().config().clone(), self.scenario.clone()),
                };
                match init_world(config, seed) {
                    Ok(world) => {
                        *self.topology.write().expect("topology lock") = world.topology().clone();
                        self.sim = Simulation::new(world);
                        self.seed = seed;
                        self.scenario = plan;
                        self.scripted_through = None;
                        self.series.lock().expect("series lock").clear();
                        self.publish_catch_up();
                        Applied::Reset
                    }
                    Err(e) => {
                        reject(out, ErrorEvent::new("invalid_scenario", e.to_string()));
                        Applied::Unchanged
                    }
                }
            }
        }
    }

    /// Runs one tick and returns the metrics frame, plus a snapshot on
    /// snapshot ticks.
    pub fn tick(&mut self) -> Vec<Outbound> {
        let mut out = Vec::new();
        if self.scripted_through != Some(self.sim.world().tick_count()) {
            out = self.boundary([]);
        }
        let sample = self.sim.step();
        self.series.lock().expect("series lock").push(sample).expect("contiguous ticks");
        out.push(Outbound::all(Frame::Metrics(sample)));
        if self.sim.world().tick_count().is_multiple_of(self.snapshot_interval) {
            let snap = self.snapshot();
            self.latest.lock().expect("published lock").snapshot = Some(snap.clone());
            out.push(Outbound::all(Frame::Snapshot(snap)));
        }
        out
    }
}

enum Applied {
    Changed,
    Unchanged,
    Reset,
}

/// Drives `live` until `stop` flips to true: drain the queue, tick unless
/// paused, publish, wait for the next slot. A paused loop still drains
/// commands. Returns the simulation for final flushing.
pub async fn run_loop(
    mut live: LiveSim,
    mut rx: mpsc::UnboundedReceiver<Envelope>,
    events: broadcast::Sender<Arc<Outbound>>,
    mut stop: watch::Receiver<bool>,
) -> LiveSim {
    let send = |frames: Vec<Outbound>| {
        for f in frames {
            // No subscribers is fine: the loop runs headless.
            let _ = events.send(Arc::new(f));
        }
    };
    let mut next_due = tokio::time::Instant::now();
    loop {
        if *stop.borrow() {
            break;
        }
        let mut batch = Vec::new();
        while let Ok(env) = rx.try_recv() {
            batch.push(env);
        }
        send(live.boundary(batch));

        if live.paused() {
            tokio::select! {
                msg = rx.recv() => match msg {
                    Some(env) => send(live.boundary([env])),
                    None => break,
                },
                _ = stop.changed() => {}
            }
            next_due = tokio::time::Instant::now();
            continue;
        }

        send(live.tick());

        if live.tick_rate() > 0.0 {
            next_due += Duration::from_secs_f64(1.0 / live.tick_rate());
            let now = tokio::time::Instant::now();
            if next_due < now {
                next_due = now;
            }
            tokio::select! {
                _ = tokio::time::sleep_until(next_due) => {}
                _ = stop.changed() => {}
            }
        } else {
            tokio::task::yield_now().await;
        }
    }
    live
}
