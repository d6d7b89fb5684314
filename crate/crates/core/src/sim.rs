use crate::metrics::{MetricsSample, MetricsSeries};
use crate::world::WorldState;

/// A world plus the metrics series it has produced so far.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: WorldState,
    series: MetricsSeries,
}

impl Simulation {
    pub fn new(world: WorldState) -> Self {
        Self { world, series: MetricsSeries::new() }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut WorldState {
        &mut self.world
    }

    pub fn series(&self) -> &MetricsSeries {
        &self.series
    }

    pub fn into_parts(self) -> (WorldState, MetricsSeries) {
        (self.world, self.series)
    }

    pub fn step(&mut self) -> MetricsSample {
        let sample = self.world.step();
        self.series.push(sample).expect("world ticks are contiguous");
        sample
    }
}
