//! Per-tick state counts and the plotted percentage series.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::world::{AgentState, WorldState};

pub const CSV_HEADER: &str =
    "tick,susceptible,infected,precaution,recovered,pct_infected,pct_precaution,pct_recovered";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub tick: u64,
    pub susceptible: usize,
    pub infected: usize,
    pub precaution: usize,
    pub recovered: usize,
    pub pct_infected: f64,
    pub pct_precaution: f64,
    pub pct_recovered: f64,
}

impl MetricsSample {
    pub fn from_counts(tick: u64, [s, i, p, r]: [usize; 4]) -> Self {
        let total = s + i + p + r;
        let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
        Self {
            tick,
            susceptible: s,
            infected: i,
            precaution: p,
            recovered: r,
            pct_infected: pct(i),
            pct_precaution: pct(p),
            pct_recovered: pct(r),
        }
    }

    pub fn total(&self) -> usize {
        self.susceptible + self.infected + self.precaution + self.recovered
    }

    pub fn pct_susceptible(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => 100.0 * self.susceptible as f64 / t as f64,
        }
    }

    /// Agents that have been infected at some point.
    pub fn ever_infected(&self) -> usize {
        self.infected + self.recovered
    }
}

/// Counts the current world. The sample carries the world's current tick
/// counter.
pub fn compute_metrics(world: &WorldState) -> MetricsSample {
    let mut counts = [0usize; 4];
    for a in &world.agents {
        let slot = AgentState::ALL.iter().position(|&s| s == a.state).unwrap();
        counts[slot] += 1;
    }
    MetricsSample::from_counts(world.tick_count(), counts)
}

#[derive(Debug, thiserror::Error)]
#[error("sample for tick {got} does not follow tick {expected}")]
pub struct GapError {
    pub expected: u64,
    pub got: u64,
}

/// Samples with contiguous ticks starting at 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricsSeries {
    samples: Vec<MetricsSample>,
}

impl MetricsSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: MetricsSample) -> Result<(), GapError> {
        let expected = self.samples.len() as u64;
        if sample.tick != expected {
            return Err(GapError { expected, got: sample.tick });
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[MetricsSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&MetricsSample> {
        self.samples.last()
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{:.4},{:.4},{:.4}",
                s.tick,
                s.susceptible,
                s.infected,
                s.precaution,
                s.recovered,
                s.pct_infected,
                s.pct_precaution,
                s.pct_recovered
            )?;
        }
        out.flush()
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer(&mut out, &self.samples)?;
        out.flush()
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        self.write_json(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("utf-8")
    }
}
