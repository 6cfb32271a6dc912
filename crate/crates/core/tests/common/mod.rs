#![allow(dead_code)]

use prosumer_sim::model::{
    sample_cost_population, Capacities, CommunityConfig, CostFunction, CostPopulation, Populations,
    Preset,
};

/// Three agents per population with capacities 1.5 / 1.5 / 3.0.
pub fn tiny_instance(seed: u64) -> (CommunityConfig, CostPopulation) {
    let mut cfg = CommunityConfig::preset(Preset::Tiny);
    cfg.seed = seed;
    cfg.populations = Populations {
        solar: 3,
        wind: 3,
        consumers: 3,
    };
    cfg.capacity = Capacities {
        solar: 1.5,
        wind: 1.5,
    };
    let pop = sample_cost_population(&cfg).unwrap();
    (cfg, pop)
}

/// Exhaustive search over `{v ∈ [0,1]³ : Σv = capacity}` on a grid of the
/// given resolution. `capacity` must be a multiple of the step.
///
/// Cost polynomials are evaluated term by term here, independently of
/// `CostFunction::eval`.
pub fn grid_min_three(costs: &[CostFunction], capacity: f64, step: f64) -> f64 {
    assert_eq!(costs.len(), 3);
    let eval = |c: &CostFunction, v: f64| {
        c.lin_coef() * v + c.quad_coef() * v * v + c.quart_coef() * v * v * v * v + c.const_coef()
    };
    let n = (1.0 / step).round() as i64;
    let total = (capacity / step).round() as i64;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let k = total - i - j;
            if !(0..=n).contains(&k) {
                continue;
            }
            let (a, b, c) = (i as f64 * step, j as f64 * step, k as f64 * step);
            let value = eval(&costs[0], a) + eval(&costs[1], b) + eval(&costs[2], c);
            best = best.min(value);
        }
    }
    best
}

pub fn grid_min_population(pop: &CostPopulation, cfg: &CommunityConfig, step: f64) -> f64 {
    grid_min_three(&pop.solar, cfg.capacity.solar, step)
        + grid_min_three(&pop.wind, cfg.capacity.wind, step)
        + grid_min_three(&pop.consumer, cfg.capacity.consumer(), step)
}
