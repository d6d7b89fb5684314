use serde::{Deserialize, Serialize};

/// Inclusive integer range `[min, max]`, written in JSON as a two-element
/// array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct CountRange {
    pub min: u32,
    pub max: u32,
}

impl CountRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    pub const fn exactly(n: u32) -> Self {
        Self { min: n, max: n }
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.min as usize..=self.max as usize).contains(&n)
    }
}

impl From<[u32; 2]> for CountRange {
    fn from([min, max]: [u32; 2]) -> Self {
        Self { min, max }
    }
}

impl From<CountRange> for [u32; 2] {
    fn from(r: CountRange) -> Self {
        [r.min, r.max]
    }
}

/// Closed real interval `[lo, hi]`, written as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct UnitRange {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for UnitRange {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<UnitRange> for [f64; 2] {
    fn from(r: UnitRange) -> Self {
        [r.lo, r.hi]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub name: String,
    pub center: [f64; 2],
    pub radius: f64,
}

impl SiteConfig {
    pub fn new(name: &str, x: f64, y: f64, radius: f64) -> Self {
        Self { name: name.to_owned(), center: [x, y], radius }
    }
}

/// Everything that shapes a run: geometry, population and every tunable
/// count or probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub world_size: [f64; 2],
    pub sites: Vec<SiteConfig>,
    /// Unordered site pairs, each given as `[a, b]` by site name.
    pub routes: Vec<[String; 2]>,
    pub agents_per_site: u32,
    pub local_step: f64,
    pub transit_speed: f64,
    pub infection_radius: f64,
    pub base_infection_prob: f64,
    pub immunity_range: UnitRange,
    pub seed_infect_range: CountRange,
    pub travel_batch_range: CountRange,
    pub travel_period: u32,
    pub precaution_per_tick_range: CountRange,
    pub recovery_per_tick_range: CountRange,
}

pub const DEFAULT_SITE_RADIUS: f64 = 12.0;

impl Default for SimConfig {
    fn default() -> Self {
        let r = DEFAULT_SITE_RADIUS;
        let route = |a: &str, b: &str| [a.to_owned(), b.to_owned()];
        Self {
            world_size: [100.0, 100.0],
            sites: vec![
                SiteConfig::new("red", 50.0, 50.0, r),
                SiteConfig::new("blue", 15.0, 15.0, r),
                SiteConfig::new("pink", 85.0, 15.0, r),
                SiteConfig::new("cyan", 85.0, 85.0, r),
                SiteConfig::new("yellow", 15.0, 85.0, r),
            ],
            routes: vec![
                route("red", "blue"),
                route("red", "pink"),
                route("red", "cyan"),
                route("red", "yellow"),
                route("blue", "yellow"),
                route("blue", "pink"),
                route("pink", "cyan"),
                route("cyan", "yellow"),
            ],
            agents_per_site: 100,
            local_step: 1.0,
            transit_speed: 1.5,
            infection_radius: 2.0,
            base_infection_prob: 0.6,
            immunity_range: UnitRange { lo: 0.0, hi: 0.5 },
            seed_infect_range: CountRange::new(5, 15),
            travel_batch_range: CountRange::new(2, 8),
            travel_period: 20,
            precaution_per_tick_range: CountRange::new(1, 5),
            recovery_per_tick_range: CountRange::new(1, 3),
        }
    }
}

/// One broken rule in a config, keyed by the field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl SimConfig {
    pub fn site_index(&self, name: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.name == name)
    }

    pub fn total_agents(&self) -> usize {
        self.sites.len() * self.agents_per_site as usize
    }

    /// Longest distance between the centers of any configured route.
    pub fn max_route_length(&self) -> f64 {
        self.routes
            .iter()
            .filter_map(|[a, b]| {
                let a = &self.sites[self.site_index(a)?];
                let b = &self.sites[self.site_index(b)?];
                Some(distance(a.center, b.center))
            })
            .fold(0.0, f64::max)
    }

    /// Checks every structural and numeric rule. An empty list means the
    /// config can build a world.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let [w, h] = self.world_size;
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            out.push(Violation::new("world_size", "both extents must be finite and > 0"));
        }
        if self.sites.is_empty() {
            out.push(Violation::new("sites", "at least one site is required"));
        }
        for (i, site) in self.sites.iter().enumerate() {
            let field = format!("sites[{i}]");
            if site.name.is_empty()
                || !site.name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            {
                out.push(Violation::new(
                    format!("{field}.name"),
                    format!("site name {:?} must be non-empty [a-z0-9_]", site.name),
                ));
            }
            if self.sites[..i].iter().any(|s| s.name == site.name) {
                out.push(Violation::new(format!("{field}.name"), format!("duplicate site {:?}", site.name)));
            }
            if !(site.radius.is_finite() && site.radius > 0.0) {
                out.push(Violation::new(format!("{field}.radius"), "must be finite and > 0"));
            }
            let [x, y] = site.center;
            if !(x.is_finite() && y.is_finite()) {
                out.push(Violation::new(format!("{field}.center"), "must be finite"));
            } else if x - site.radius < 0.0 || y - site.radius < 0.0 || x + site.radius > w || y + site.radius > h {
                out.push(Violation::new(format!("{field}.center"), format!("site {:?} extends outside the world", site.name)));
            }
            for other in &self.sites[..i] {
                if distance(site.center, other.center) <= site.radius + other.radius {
                    out.push(Violation::new(
                        format!("{field}.center"),
                        format!("site {:?} overlaps site {:?}", site.name, other.name),
                    ));
                }
            }
        }

        for (i, [a, b]) in self.routes.iter().enumerate() {
            let field = format!("routes[{i}]");
            for end in [a, b] {
                if self.site_index(end).is_none() {
                    out.push(Violation::new(&field, format!("route {a}-{b} names unknown site {end:?}")));
                }
            }
            if a == b {
                out.push(Violation::new(&field, format!("route {a}-{b} joins a site to itself")));
            }
            let dup = self.routes[..i]
                .iter()
                .any(|[c, d]| (c == a && d == b) || (c == b && d == a));
            if dup {
                out.push(Violation::new(&field, format!("duplicate route {a}-{b}")));
            }
        }

        let positive = |field: &str, v: f64, out: &mut Vec<Violation>| {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(field, format!("must be finite and > 0, got {v}")));
            }
        };
        positive("transit_speed", self.transit_speed, &mut out);
        positive("infection_radius", self.infection_radius, &mut out);
        if !(self.local_step.is_finite() && self.local_step >= 0.0) {
            out.push(Violation::new("local_step", format!("must be finite and >= 0, got {}", self.local_step)));
        }
        if !(0.0..=1.0).contains(&self.base_infection_prob) {
            out.push(Violation::new(
                "base_infection_prob",
                format!("probability must lie in [0, 1], got {}", self.base_infection_prob),
            ));
        }
        let im = self.immunity_range;
        if !((0.0..=1.0).contains(&im.lo) && (0.0..=1.0).contains(&im.hi) && im.lo <= im.hi) {
            out.push(Violation::new("immunity_range", format!("need 0 <= lo <= hi <= 1, got [{}, {}]", im.lo, im.hi)));
        }
        for (field, r) in [
            ("seed_infect_range", self.seed_infect_range),
            ("travel_batch_range", self.travel_batch_range),
            ("precaution_per_tick_range", self.precaution_per_tick_range),
            ("recovery_per_tick_range", self.recovery_per_tick_range),
        ] {
            if r.min > r.max {
                out.push(Violation::new(field, format!("empty range [{}, {}]", r.min, r.max)));
            }
        }
        if self.travel_period == 0 {
            out.push(Violation::new("travel_period", "must be >= 1"));
        }
        out
    }
}

pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
