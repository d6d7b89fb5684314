//! Operator switches and their latching rules.
//!
//! Switch names follow the operator panel: `route-blue-yellow-enable`,
//! `lockdown-blue-yellow`, `lockdown-red`, `local-mobility-red-allow`,
//! `infect-red`, `propagate-infection`, `take-precautions` and
//! `start-recovery`. A trailing `?` is accepted and ignored, and route
//! endpoints may be given in either order.

use std::fmt;

use thiserror::Error;

use super::config::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SwitchId {
    RouteEnable(usize),
    RouteLockdown(usize),
    SiteLockdown(usize),
    LocalMobility(usize),
    InfectSite(usize),
    PropagateInfection,
    TakePrecautions,
    StartRecovery,
}

impl SwitchId {
    /// Route-enable and infect-site switches can never be turned back off.
    pub fn is_latching(self) -> bool {
        matches!(self, SwitchId::RouteEnable(_) | SwitchId::InfectSite(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwitchError {
    #[error("unknown switch {0:?}")]
    Unknown(String),
    #[error("switch {0:?} is latched on for the rest of the run")]
    Latched(String),
    #[error("route switch {route:?} stays locked while site {site:?} is locked down")]
    ClosureHeld { route: String, site: String },
}

impl SwitchError {
    /// Stable machine-readable code used on the wire and in CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            SwitchError::Unknown(_) => "unknown_switch",
            SwitchError::Latched(_) => "latching_violation",
            SwitchError::ClosureHeld { .. } => "lockdown_closure",
        }
    }
}

/// Site names and route endpoints, fixed for the lifetime of a world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub sites: Vec<String>,
    pub routes: Vec<(usize, usize)>,
}

impl Topology {
    /// Assumes `config` has passed validation.
    pub fn from_config(config: &SimConfig) -> Self {
        let idx = |n: &str| config.site_index(n).expect("validated route endpoint");
        Self {
            sites: config.sites.iter().map(|s| s.name.clone()).collect(),
            routes: config.routes.iter().map(|[a, b]| (idx(a), idx(b))).collect(),
        }
    }

    pub fn route_name(&self, route: usize) -> String {
        let (a, b) = self.routes[route];
        format!("{}-{}", self.sites[a], self.sites[b])
    }

    pub fn find_route(&self, a: usize, b: usize) -> Option<usize> {
        self.routes
            .iter()
            .position(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }

    pub fn incident_routes(&self, site: usize) -> impl Iterator<Item = usize> + '_ {
        self.routes
            .iter()
            .enumerate()
            .filter(move |(_, &(a, b))| a == site || b == site)
            .map(|(i, _)| i)
    }

    fn site(&self, name: &str) -> Option<usize> {
        self.sites.iter().position(|s| s == name)
    }

    fn route_by_name(&self, pair: &str) -> Option<usize> {
        let (a, b) = pair.split_once('-')?;
        self.find_route(self.site(a)?, self.site(b)?)
    }

    pub fn resolve(&self, name: &str) -> Result<SwitchId, SwitchError> {
        let bare = name.strip_suffix('?').unwrap_or(name);
        let id = match bare {
            "propagate-infection" => Some(SwitchId::PropagateInfection),
            "take-precautions" => Some(SwitchId::TakePrecautions),
            "start-recovery" => Some(SwitchId::StartRecovery),
            _ => {
                if let Some(pair) = bare.strip_prefix("route-").and_then(|s| s.strip_suffix("-enable")) {
                    self.route_by_name(pair).map(SwitchId::RouteEnable)
                } else if let Some(site) = bare
                    .strip_prefix("local-mobility-")
                    .and_then(|s| s.strip_suffix("-allow"))
                {
                    self.site(site).map(SwitchId::LocalMobility)
                } else if let Some(site) = bare.strip_prefix("infect-") {
                    self.site(site).map(SwitchId::InfectSite)
                } else if let Some(rest) = bare.strip_prefix("lockdown-") {
                    if rest.contains('-') {
                        self.route_by_name(rest).map(SwitchId::RouteLockdown)
                    } else {
                        self.site(rest).map(SwitchId::SiteLockdown)
                    }
                } else {
                    None
                }
            }
        };
        id.ok_or_else(|| SwitchError::Unknown(name.to_owned()))
    }

    /// Canonical name of a switch.
    pub fn name(&self, id: SwitchId) -> String {
        match id {
            SwitchId::RouteEnable(r) => format!("route-{}-enable", self.route_name(r)),
            SwitchId::RouteLockdown(r) => format!("lockdown-{}", self.route_name(r)),
            SwitchId::SiteLockdown(s) => format!("lockdown-{}", self.sites[s]),
            SwitchId::LocalMobility(s) => format!("local-mobility-{}-allow", self.sites[s]),
            SwitchId::InfectSite(s) => format!("infect-{}", self.sites[s]),
            SwitchId::PropagateInfection => "propagate-infection".to_owned(),
            SwitchId::TakePrecautions => "take-precautions".to_owned(),
            SwitchId::StartRecovery => "start-recovery".to_owned(),
        }
    }

    /// Every switch, in panel order.
    pub fn all_switches(&self) -> Vec<SwitchId> {
        let routes = 0..self.routes.len();
        let sites = 0..self.sites.len();
        routes
            .clone()
            .map(SwitchId::RouteEnable)
            .chain(routes.map(SwitchId::RouteLockdown))
            .chain(sites.clone().map(SwitchId::SiteLockdown))
            .chain(sites.clone().map(SwitchId::LocalMobility))
            .chain(sites.map(SwitchId::InfectSite))
            .chain([SwitchId::PropagateInfection, SwitchId::TakePrecautions, SwitchId::StartRecovery])
            .collect()
    }
}

/// Current position of every switch.
///
/// Local mobility starts allowed; every other switch starts off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchBoard {
    topology: Topology,
    route_enable: Vec<bool>,
    route_lockdown: Vec<bool>,
    site_lockdown: Vec<bool>,
    local_mobility: Vec<bool>,
    infect_site: Vec<bool>,
    propagate_infection: bool,
    take_precautions: bool,
    start_recovery: bool,
}

impl SwitchBoard {
    pub fn new(topology: Topology) -> Self {
        let (r, s) = (topology.routes.len(), topology.sites.len());
        Self {
            topology,
            route_enable: vec![false; r],
            route_lockdown: vec![false; r],
            site_lockdown: vec![false; s],
            local_mobility: vec![true; s],
            infect_site: vec![false; s],
            propagate_infection: false,
            take_precautions: false,
            start_recovery: false,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn get(&self, id: SwitchId) -> bool {
        match id {
            SwitchId::RouteEnable(r) => self.route_enable[r],
            SwitchId::RouteLockdown(r) => self.route_lockdown[r],
            SwitchId::SiteLockdown(s) => self.site_lockdown[s],
            SwitchId::LocalMobility(s) => self.local_mobility[s],
            SwitchId::InfectSite(s) => self.infect_site[s],
            SwitchId::PropagateInfection => self.propagate_infection,
            SwitchId::TakePrecautions => self.take_precautions,
            SwitchId::StartRecovery => self.start_recovery,
        }
    }

    /// Sets a switch, enforcing latching and site-lockdown closure. A
    /// rejected call leaves the board untouched.
    ///
    /// Locking a site also locks every incident route. Unlocking a site
    /// touches nothing else: its routes and local mobility are unlocked by
    /// their own switches, and a route cannot be unlocked while either
    /// endpoint site is still locked.
    pub fn apply(&mut self, id: SwitchId, value: bool) -> Result<(), SwitchError> {
        if id.is_latching() && self.get(id) && !value {
            return Err(SwitchError::Latched(self.topology.name(id)));
        }
        match id {
            SwitchId::RouteEnable(r) => self.route_enable[r] = value,
            SwitchId::RouteLockdown(r) => {
                if !value {
                    let (a, b) = self.topology.routes[r];
                    if let Some(s) = [a, b].into_iter().find(|&s| self.site_lockdown[s]) {
                        return Err(SwitchError::ClosureHeld {
                            route: self.topology.name(id),
                            site: self.topology.sites[s].clone(),
                        });
                    }
                }
                self.route_lockdown[r] = value;
            }
            SwitchId::SiteLockdown(s) => {
                self.site_lockdown[s] = value;
                if value {
                    let incident: Vec<_> = self.topology.incident_routes(s).collect();
                    for r in incident {
                        self.route_lockdown[r] = true;
                    }
                }
            }
            SwitchId::LocalMobility(s) => self.local_mobility[s] = value,
            SwitchId::InfectSite(s) => self.infect_site[s] = value,
            SwitchId::PropagateInfection => self.propagate_infection = value,
            SwitchId::TakePrecautions => self.take_precautions = value,
            SwitchId::StartRecovery => self.start_recovery = value,
        }
        Ok(())
    }

    /// Resolves `name` and applies it.
    pub fn apply_named(&mut self, name: &str, value: bool) -> Result<SwitchId, SwitchError> {
        let id = self.topology.resolve(name)?;
        self.apply(id, value)?;
        Ok(id)
    }

    pub fn route_enabled(&self, r: usize) -> bool {
        self.route_enable[r]
    }

    pub fn route_locked(&self, r: usize) -> bool {
        self.route_lockdown[r]
    }

    pub fn site_locked(&self, s: usize) -> bool {
        self.site_lockdown[s]
    }

    pub fn local_mobility_allowed(&self, s: usize) -> bool {
        self.local_mobility[s]
    }

    pub fn infect_requested(&self, s: usize) -> bool {
        self.infect_site[s]
    }

    pub fn propagate_infection(&self) -> bool {
        self.propagate_infection
    }

    pub fn take_precautions(&self) -> bool {
        self.take_precautions
    }

    pub fn start_recovery(&self) -> bool {
        self.start_recovery
    }

    /// `(name, value)` for every switch in panel order.
    pub fn entries(&self) -> Vec<(String, bool)> {
        self.topology
            .all_switches()
            .into_iter()
            .map(|id| (self.topology.name(id), self.get(id)))
            .collect()
    }
}

impl fmt::Display for SwitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}
