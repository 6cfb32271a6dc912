//! Per-agent decision rule.
//!
//! At each step an agent reads its population's signal, computes
//! `theta * avg / cost'(avg)`, clamps it into `[0, 1]` and activates with that
//! probability. At a fixed point the expected bit equals the average, which
//! forces `cost'(avg) = theta`. That is the same marginal-cost equalization
//! the centralized optimum satisfies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentState, CostFunction, CostKind, FeedbackSignals};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    SolarProsumer,
    WindProsumer,
    Consumer,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [
        AgentKind::SolarProsumer,
        AgentKind::WindProsumer,
        AgentKind::Consumer,
    ];

    /// The signal this kind of agent listens to.
    pub fn theta(self, signals: &FeedbackSignals) -> f64 {
        match self {
            AgentKind::SolarProsumer => signals.solar,
            AgentKind::WindProsumer => signals.wind,
            AgentKind::Consumer => signals.consumer,
        }
    }

    pub fn cost_kind(self) -> CostKind {
        match self {
            AgentKind::SolarProsumer => CostKind::Solar,
            AgentKind::WindProsumer => CostKind::Wind,
            AgentKind::Consumer => CostKind::Consumer,
        }
    }

    /// Short label used in output files.
    pub fn label(self) -> &'static str {
        match self {
            AgentKind::SolarProsumer => "solar",
            AgentKind::WindProsumer => "wind",
            AgentKind::Consumer => "consumer",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == label)
    }
}

pub fn response_probability(avg: f64, theta: f64, cost: &CostFunction) -> Result<f64> {
    let slope = cost.deriv(avg)?;
    if slope <= 0.0 || !slope.is_finite() {
        return Err(Error::ZeroDerivative { avg });
    }
    let p = theta * avg / slope;
    if p.is_nan() {
        return Err(Error::ZeroDerivative { avg });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// One Bernoulli(`p`) draw. `p = 1` always fires, `p = 0` never does.
pub fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}

/// Advances `state` by one step. Returns the probability that was used.
pub fn agent_step<R: Rng + ?Sized>(
    state: &mut AgentState,
    kind: AgentKind,
    signals: &FeedbackSignals,
    cost: &CostFunction,
    rng: &mut R,
) -> Result<f64> {
    let p = response_probability(state.avg(), kind.theta(signals), cost)?;
    state.record(bernoulli(p, rng));
    Ok(p)
}
