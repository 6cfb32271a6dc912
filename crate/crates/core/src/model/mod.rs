//! Domain types shared by the simulator and the solver.

mod config;
mod cost;
mod population;
mod state;

pub use config::{
    Capacities, CoefRange, CoefRanges, CommunityConfig, ConsumerRanges, ExplicitCosts, Gains,
    Populations, Preset, SolarRanges, ThetaSettings, WindRanges, DEFAULT_GAIN, DEFAULT_HORIZON,
    DEFAULT_THETA_INIT, DEFAULT_THETA_MAX, DEFAULT_THETA_MIN,
};
pub use cost::{Coefficients, CostFunction, CostKind};
pub use population::{sample_cost_population, CostPopulation};
pub use state::{update_running_average, AgentState};

/// The three scalars the manager broadcasts, one per population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackSignals {
    pub solar: f64,
    pub wind: f64,
    pub consumer: f64,
}

impl FeedbackSignals {
    pub fn uniform(theta: f64) -> Self {
        Self {
            solar: theta,
            wind: theta,
            consumer: theta,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.solar.is_finite() && self.wind.is_finite() && self.consumer.is_finite()
    }

    pub fn within(&self, theta: &ThetaSettings) -> bool {
        [self.solar, self.wind, self.consumer]
            .iter()
            .all(|t| (theta.min..=theta.max).contains(t))
    }
}
