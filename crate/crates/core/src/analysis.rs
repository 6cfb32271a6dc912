//! Post-run comparison of simulated averages against the oracle.

use crate::engine::StepRecord;
use crate::error::{Error, Result};
use crate::model::CostFunction;

pub const DEFAULT_BIN_WIDTH: f64 = 0.01;
/// Coordinates closer than this to 0 or 1 are treated as on the box boundary.
pub const INTERIOR_EPS: f64 = 1e-3;

/// Counts of `|final_i − star_i|` in bins `[j·w, (j+1)·w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(lo, hi, count)` for every bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts.iter().enumerate().map(move |(j, &c)| {
            let lo = j as f64 * self.bin_width;
            (lo, lo + self.bin_width, c)
        })
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

pub fn abs_gap_histogram(final_avg: &[f64], star: &[f64], bin_width: f64) -> Result<Histogram> {
    check_lengths(final_avg, star)?;
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::Config(format!(
            "histogram bin width must be positive, got {bin_width}"
        )));
    }
    let mut counts = vec![0u64; 1];
    for (f, s) in final_avg.iter().zip(star) {
        let bin = ((f - s).abs() / bin_width).floor() as usize;
        if bin >= counts.len() {
            counts.resize(bin + 1, 0);
        }
        counts[bin] += 1;
    }
    Ok(Histogram { bin_width, counts })
}

pub fn mean_abs_gap(final_avg: &[f64], star: &[f64]) -> Result<f64> {
    check_lengths(final_avg, star)?;
    if final_avg.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = final_avg.iter().zip(star).map(|(f, s)| (f - s).abs()).sum();
    Ok(total / final_avg.len() as f64)
}

/// Fraction of agents with `|final − star| ≤ tol`.
pub fn fraction_within(final_avg: &[f64], star: &[f64], tol: f64) -> Result<f64> {
    check_lengths(final_avg, star)?;
    if final_avg.is_empty() {
        return Ok(1.0);
    }
    let hits = final_avg
        .iter()
        .zip(star)
        .filter(|(f, s)| (*f - *s).abs() <= tol)
        .count();
    Ok(hits as f64 / final_avg.len() as f64)
}

/// `total_cost(ℓ) / oracle_cost` for every recorded step.
pub fn cost_ratio_series(trace: &[StepRecord], oracle_cost: f64) -> Result<Vec<(u64, f64)>> {
    if !(oracle_cost.is_finite() && oracle_cost > 0.0) {
        return Err(Error::Config(format!(
            "optimal cost must be positive, got {oracle_cost}"
        )));
    }
    Ok(trace
        .iter()
        .map(|r| (r.step, r.total_cost / oracle_cost))
        .collect())
}

/// Population standard deviation of the marginal costs at interior
/// coordinates. Zero at any KKT point.
pub fn derivative_dispersion(final_avg: &[f64], costs: &[CostFunction]) -> Result<f64> {
    if final_avg.len() != costs.len() {
        return Err(Error::Mismatch(format!(
            "{} averages for {} cost functions",
            final_avg.len(),
            costs.len()
        )));
    }
    let slopes: Vec<f64> = final_avg
        .iter()
        .zip(costs)
        .filter(|(&v, _)| v > INTERIOR_EPS && v < 1.0 - INTERIOR_EPS)
        .map(|(&v, c)| c.deriv(v))
        .collect::<Result<_>>()?;
    if slopes.is_empty() {
        return Ok(0.0);
    }
    let n = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / n;
    let var = slopes.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt())
}

/// Mean active counts `(solar, wind, consumers)` over records with
/// `step > from_step`.
pub fn mean_active_counts(trace: &[StepRecord], from_step: u64) -> Option<(f64, f64, f64)> {
    let tail: Vec<_> = trace.iter().filter(|r| r.step > from_step).collect();
    if tail.is_empty() {
        return None;
    }
    let n = tail.len() as f64;
    let mean = |f: fn(&StepRecord) -> usize| tail.iter().map(|r| f(r) as f64).sum::<f64>() / n;
    Some((
        mean(|r| r.active_solar),
        mean(|r| r.active_wind),
        mean(|r| r.active_consumers),
    ))
}
