use rand::Rng;

use super::config::{CommunityConfig, ExplicitCosts};
use super::cost::{CostFunction, CostKind};
use crate::error::Result;
use crate::rng::{self, StreamKey};

/// Cost functions of every agent, grouped by population.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPopulation {
    pub solar: Vec<CostFunction>,
    pub wind: Vec<CostFunction>,
    pub consumer: Vec<CostFunction>,
}

impl CostPopulation {
    pub fn from_explicit(explicit: &ExplicitCosts) -> Result<Self> {
        let build = |kind, list: &[super::Coefficients]| {
            list.iter()
                .map(|&c| CostFunction::from_coefficients(kind, c))
                .collect::<Result<Vec<_>>>()
        };
        Ok(Self {
            solar: build(CostKind::Solar, &explicit.solar)?,
            wind: build(CostKind::Wind, &explicit.wind)?,
            consumer: build(CostKind::Consumer, &explicit.consumer)?,
        })
    }

    pub fn to_explicit(&self) -> ExplicitCosts {
        let dump = |list: &[CostFunction]| list.iter().map(CostFunction::coefficients).collect();
        ExplicitCosts {
            solar: dump(&self.solar),
            wind: dump(&self.wind),
            consumer: dump(&self.consumer),
        }
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.solar.len(), self.wind.len(), self.consumer.len())
    }

    /// Σf(x) + Σg(y) + Σh(z), with each value clamped into the cost domain.
    pub fn total_cost(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        fn part(costs: &[CostFunction], values: &[f64]) -> f64 {
            costs
                .iter()
                .zip(values)
                .map(|(c, &v)| c.eval_unchecked(v.clamp(0.0, 1.0)))
                .sum()
        }
        part(&self.solar, x) + part(&self.wind, y) + part(&self.consumer, z)
    }
}

/// Draws the cost population for `cfg`.
///
/// Coefficients are i.i.d. uniform over the configured ranges and come from
/// the dedicated population stream, so agent draws are unaffected. An
/// `[explicit]` section bypasses sampling.
pub fn sample_cost_population(cfg: &CommunityConfig) -> Result<CostPopulation> {
    cfg.coefficients.validate()?;
    if let Some(explicit) = &cfg.explicit {
        return CostPopulation::from_explicit(explicit);
    }
    let ranges = &cfg.coefficients;
    let mut rng = rng::stream(cfg.seed, StreamKey::Population);
    let mut unit = move || rng.random::<f64>();

    let solar = (0..cfg.populations.solar)
        .map(|_| {
            let a = ranges.solar.a.at(unit());
            let b = ranges.solar.b.at(unit());
            CostFunction::solar(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    let wind = (0..cfg.populations.wind)
        .map(|_| {
            let a = ranges.wind.a.at(unit());
            let c = ranges.wind.c.at(unit());
            CostFunction::wind(a, c)
        })
        .collect::<Result<Vec<_>>>()?;
    let consumer = (0..cfg.populations.consumers)
        .map(|_| {
            let a = ranges.consumer.a.at(unit());
            let b = ranges.consumer.b.at(unit());
            let c = ranges.consumer.c.at(unit());
            CostFunction::consumer(a, b, c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CostPopulation {
        solar,
        wind,
        consumer,
    })
}
