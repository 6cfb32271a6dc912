//! Centralized solver for the community cost minimization.
//!
//! The objective is separable and the constraints couple agents only within a
//! population: solar averages sum to `C_s`, wind averages sum to `C_w`, and
//! consumer averages sum to `C_s + C_w`. Each population is therefore an
//! independent capacity-allocation problem
//!
//! ```text
//! min Σ cost_i(v_i)   s.t.   Σ v_i = capacity,   0 ≤ v_i ≤ 1
//! ```
//!
//! whose KKT conditions say every interior coordinate has `cost_i'(v_i) = λ`.
//! For fixed `λ` each coordinate is the clamped root of `cost_i'(v) = λ`, and
//! `Σ v_i(λ)` is nondecreasing in `λ`. An outer bisection on `λ` finds the
//! level that meets the capacity.

use crate::agents::AgentKind;
use crate::error::{Error, Result};
use crate::model::{CommunityConfig, CostFunction, CostPopulation};

pub const CAPACITY_TOL: f64 = 1e-8;
pub const ROOT_TOL: f64 = 1e-10;
pub const OUTER_MAX_ITER: usize = 200;
pub const INNER_MAX_ITER: usize = 100;
/// Early exit for the outer bisection; tighter than `CAPACITY_TOL` so that
/// symmetric populations split evenly to well below 1e-9 per coordinate.
const SUM_EXIT_TOL: f64 = 1e-12;

/// Optimal allocation for one population.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub values: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub z_star: Vec<f64>,
    pub lambda_solar: f64,
    pub lambda_wind: f64,
    pub lambda_consumer: f64,
    pub kkt_residual: f64,
}

impl OracleSolution {
    pub fn values(&self, kind: AgentKind) -> &[f64] {
        match kind {
            AgentKind::SolarProsumer => &self.x_star,
            AgentKind::WindProsumer => &self.y_star,
            AgentKind::Consumer => &self.z_star,
        }
    }

    pub fn lambda(&self, kind: AgentKind) -> f64 {
        match kind {
            AgentKind::SolarProsumer => self.lambda_solar,
            AgentKind::WindProsumer => self.lambda_wind,
            AgentKind::Consumer => self.lambda_consumer,
        }
    }
}

/// Solves `cost'(v) = level` on `[0, 1]`, clamping to the box when the level
/// lies outside the derivative's range. Newton steps are taken when they stay
/// inside the current bracket; otherwise the bracket is bisected.
///
/// For a flat derivative equal to `level` every point of `[0, 1]` is a
/// minimizer; `upper` picks 1 in that case and 0 otherwise.
fn marginal_inverse(cost: &CostFunction, level: f64, upper: bool) -> f64 {
    let d0 = cost.deriv_unchecked(0.0);
    let d1 = cost.deriv_unchecked(1.0);
    if upper {
        if level >= d1 {
            return 1.0;
        }
        if level < d0 {
            return 0.0;
        }
    } else {
        if level <= d0 {
            return 0.0;
        }
        if level > d1 {
            return 1.0;
        }
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // Start from the secant guess; cheap and usually close.
    let mut v = (level - d0) / (d1 - d0);
    for _ in 0..INNER_MAX_ITER {
        let r = cost.deriv_unchecked(v) - level;
        if r.abs() <= 1e-13 * level.max(1.0) {
            break;
        }
        if r > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let slope = cost.second_deriv_unchecked(v);
        let newton = v - r / slope;
        v = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= ROOT_TOL * 1e-3 {
            break;
        }
    }
    v
}

fn allocation_at(costs: &[CostFunction], level: f64, upper: bool) -> Vec<f64> {
    costs
        .iter()
        .map(|c| marginal_inverse(c, level, upper))
        .collect()
}

/// Water-filling for one population.
///
/// Returns the allocation and its multiplier. When some costs are linear the
/// sum `Σ v_i(λ)` jumps at their slope; the final bracket endpoints are then
/// blended so the capacity is met exactly.
pub fn solve_subproblem(costs: &[CostFunction], capacity: f64) -> Result<Allocation> {
    let n = costs.len();
    if !(capacity.is_finite() && capacity >= 0.0) || capacity > n as f64 || n == 0 {
        return Err(Error::Infeasible { capacity, size: n });
    }
    let mut lo = costs
        .iter()
        .map(|c| c.deriv_unchecked(0.0))
        .fold(f64::INFINITY, f64::min);
    let mut hi = costs
        .iter()
        .map(|c| c.deriv_unchecked(1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    if capacity == 0.0 {
        return Ok(Allocation {
            values: vec![0.0; n],
            lambda: lo,
        });
    }
    if capacity == n as f64 {
        return Ok(Allocation {
            values: vec![1.0; n],
            lambda: hi,
        });
    }

    for _ in 0..OUTER_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let values = allocation_at(costs, mid, false);
        let total: f64 = values.iter().sum();
        if (total - capacity).abs() <= SUM_EXIT_TOL {
            return Ok(Allocation {
                values,
                lambda: mid,
            });
        }
        if total < capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Bracket exhausted: the capacity lies between the smallest minimizer at
    // `lo` and the largest at `hi`. Blend the two.
    let below = allocation_at(costs, lo, false);
    let above = allocation_at(costs, hi, true);
    let (s_lo, s_hi): (f64, f64) = (below.iter().sum(), above.iter().sum());
    let t = if s_hi > s_lo {
        ((capacity - s_lo) / (s_hi - s_lo)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let values: Vec<f64> = if t == 0.0 {
        below
    } else if t == 1.0 {
        above
    } else {
        below
            .iter()
            .zip(&above)
            .map(|(&a, &b)| (a + t * (b - a)).clamp(0.0, 1.0))
            .collect()
    };
    let total: f64 = values.iter().sum();
    let residual = (total - capacity).abs();
    if residual > CAPACITY_TOL {
        return Err(Error::NonConvergence {
            iterations: OUTER_MAX_ITER,
            lo,
            hi,
            residual,
        });
    }
    let lambda = if t <= 0.0 {
        lo
    } else if t >= 1.0 {
        hi
    } else {
        0.5 * (lo + hi)
    };
    Ok(Allocation { values, lambda })
}

/// Largest violation of the KKT conditions of one population: capacity
/// residual, marginal-cost mismatch at interior points, and the sign
/// conditions at the box bounds.
pub fn kkt_violation(costs: &[CostFunction], values: &[f64], lambda: f64, capacity: f64) -> f64 {
    let sum: f64 = values.iter().sum();
    let mut worst = (sum - capacity).abs();
    for (cost, &v) in costs.iter().zip(values) {
        let d = cost.deriv_unchecked(v.clamp(0.0, 1.0));
        let violation = if v <= 0.0 {
            (lambda - d).max(0.0) + (-v).max(0.0)
        } else if v >= 1.0 {
            (d - lambda).max(0.0) + (v - 1.0).max(0.0)
        } else {
            (d - lambda).abs()
        };
        worst = worst.max(violation);
    }
    worst
}

pub fn solve_full(population: &CostPopulation, cfg: &CommunityConfig) -> Result<OracleSolution> {
    let cap = cfg.capacity;
    let solar = solve_subproblem(&population.solar, cap.solar)?;
    let wind = solve_subproblem(&population.wind, cap.wind)?;
    let consumer = solve_subproblem(&population.consumer, cap.consumer())?;
    let kkt_residual = kkt_violation(&population.solar, &solar.values, solar.lambda, cap.solar)
        .max(kkt_violation(
            &population.wind,
            &wind.values,
            wind.lambda,
            cap.wind,
        ))
        .max(kkt_violation(
            &population.consumer,
            &consumer.values,
            consumer.lambda,
            cap.consumer(),
        ));
    Ok(OracleSolution {
        x_star: solar.values,
        y_star: wind.values,
        z_star: consumer.values,
        lambda_solar: solar.lambda,
        lambda_wind: wind.lambda,
        lambda_consumer: consumer.lambda,
        kkt_residual,
    })
}

/// Σf(x*) + Σg(y*) + Σh(z*).
pub fn optimal_cost(sol: &OracleSolution, population: &CostPopulation) -> f64 {
    population.total_cost(&sol.x_star, &sol.y_star, &sol.z_star)
}
