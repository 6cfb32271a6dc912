//! Output and input files shared by the subcommands.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::AgentKind;
use crate::analysis::Histogram;
use crate::engine::StepRecord;
use crate::error::{Error, Result};
use crate::model::{CommunityConfig, CostPopulation, ExplicitCosts, FeedbackSignals};

pub const TRACE_FILE: &str = "trace.csv";
pub const FINAL_AVERAGES_FILE: &str = "final_averages.csv";
pub const SOLUTION_FILE: &str = "solution.csv";
pub const RUN_META_FILE: &str = "run_meta.toml";
pub const COMPARE_FILE: &str = "compare.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const COST_RATIO_FILE: &str = "cost_ratio.csv";
pub const METRICS_FILE: &str = "metrics.toml";

pub const TRACE_HEADER: [&str; 8] = [
    "step",
    "thetaSolar",
    "thetaWind",
    "thetaConsumer",
    "activeSolar",
    "activeWind",
    "activeConsumers",
    "totalCost",
];

/// Decimal text with 12 significant digits, trailing zeros trimmed.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&exp) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (9.99… → 10.0…); the extra
    // decimal is harmless once zeros are trimmed.
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::format(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trace(path: &Path, trace: &[StepRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = |e: csv::Error| Error::format(path, e);
    w.write_record(TRACE_HEADER).map_err(fail)?;
    for r in trace {
        w.write_record([
            r.step.to_string(),
            fmt_sig12(r.thetas.solar),
            fmt_sig12(r.thetas.wind),
            fmt_sig12(r.thetas.consumer),
            r.active_solar.to_string(),
            r.active_wind.to_string(),
            r.active_consumers.to_string(),
            fmt_sig12(r.total_cost),
        ])
        .map_err(fail)?;
    }
    finish(path, w)
}

/// One row of the trace as read back from disk.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct TraceRow {
    pub step: u64,
    #[serde(rename = "thetaSolar")]
    pub theta_solar: f64,
    #[serde(rename = "thetaWind")]
    pub theta_wind: f64,
    #[serde(rename = "thetaConsumer")]
    pub theta_consumer: f64,
    #[serde(rename = "activeSolar")]
    pub active_solar: usize,
    #[serde(rename = "activeWind")]
    pub active_wind: usize,
    #[serde(rename = "activeConsumers")]
    pub active_consumers: usize,
    #[serde(rename = "totalCost")]
    pub total_cost: f64,
}

impl From<TraceRow> for StepRecord {
    fn from(row: TraceRow) -> Self {
        StepRecord {
            step: row.step,
            thetas: FeedbackSignals {
                solar: row.theta_solar,
                wind: row.theta_wind,
                consumer: row.theta_consumer,
            },
            active_solar: row.active_solar,
            active_wind: row.active_wind,
            active_consumers: row.active_consumers,
            total_cost: row.total_cost,
        }
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<TraceRow>, _>>()
        .map_err(|e| Error::format(path, e))
}

/// Per-agent values keyed by population, as written to
/// `final_averages.csv` and `solution.csv`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentValues {
    pub solar: Vec<f64>,
    pub wind: Vec<f64>,
    pub consumer: Vec<f64>,
}

impl AgentValues {
    pub fn get(&self, kind: AgentKind) -> &[f64] {
        match kind {
            AgentKind::SolarProsumer => &self.solar,
            AgentKind::WindProsumer => &self.wind,
            AgentKind::Consumer => &self.consumer,
        }
    }

    fn get_mut(&mut self, kind: AgentKind) -> &mut Vec<f64> {
        match kind {
            AgentKind::SolarProsumer => &mut self.solar,
            AgentKind::WindProsumer => &mut self.wind,
            AgentKind::Consumer => &mut self.consumer,
        }
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.solar.len(), self.wind.len(), self.consumer.len())
    }
}

/// Writes `population,index,<value_name>` rows. Values keep full precision
/// so that they read back bit-for-bit.
pub fn write_agent_values(path: &Path, value_name: &str, values: &AgentValues) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = |e: csv::Error| Error::format(path, e);
    w.write_record(["population", "index", value_name])
        .map_err(fail)?;
    for kind in AgentKind::ALL {
        for (i, v) in values.get(kind).iter().enumerate() {
            w.write_record([kind.label().to_string(), i.to_string(), format!("{v:?}")])
                .map_err(fail)?;
        }
    }
    finish(path, w)
}

pub fn read_agent_values(path: &Path) -> Result<AgentValues> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let mut out = AgentValues::default();
    for row in r.records() {
        let row = row.map_err(|e| Error::format(path, e))?;
        if row.len() != 3 {
            return Err(Error::format(
                path,
                format!("expected 3 columns, got {}", row.len()),
            ));
        }
        let kind = AgentKind::from_label(&row[0])
            .ok_or_else(|| Error::format(path, format!("unknown population `{}`", &row[0])))?;
        let index: usize = row[1]
            .parse()
            .map_err(|e| Error::format(path, format!("bad index `{}`: {e}", &row[1])))?;
        let value: f64 = row[2]
            .parse()
            .map_err(|e| Error::format(path, format!("bad value `{}`: {e}", &row[2])))?;
        let list = out.get_mut(kind);
        if index != list.len() {
            return Err(Error::format(
                path,
                format!("{} rows out of order at index {index}", kind.label()),
            ));
        }
        list.push(value);
    }
    Ok(out)
}

pub fn write_compare(path: &Path, finals: &AgentValues, stars: &AgentValues) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = |e: csv::Error| Error::format(path, e);
    w.write_record(["population", "index", "final", "optimal", "absGap"])
        .map_err(fail)?;
    for kind in AgentKind::ALL {
        for (i, (f, s)) in finals.get(kind).iter().zip(stars.get(kind)).enumerate() {
            w.write_record([
                kind.label().to_string(),
                i.to_string(),
                format!("{f:?}"),
                format!("{s:?}"),
                format!("{:?}", (f - s).abs()),
            ])
            .map_err(fail)?;
        }
    }
    finish(path, w)
}

pub fn write_histograms(path: &Path, histograms: &[(AgentKind, Histogram)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = |e: csv::Error| Error::format(path, e);
    w.write_record(["population", "binLo", "binHi", "count"])
        .map_err(fail)?;
    for (kind, h) in histograms {
        for (lo, hi, count) in h.bins() {
            w.write_record([
                kind.label().to_string(),
                fmt_sig12(lo),
                fmt_sig12(hi),
                count.to_string(),
            ])
            .map_err(fail)?;
        }
    }
    finish(path, w)
}

pub fn write_cost_ratio(path: &Path, series: &[(u64, f64)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = |e: csv::Error| Error::format(path, e);
    w.write_record(["step", "costRatio"]).map_err(fail)?;
    for (step, ratio) in series {
        w.write_record([step.to_string(), fmt_sig12(*ratio)])
            .map_err(fail)?;
    }
    finish(path, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    pub broadcasts: u64,
    pub recorded_steps: usize,
    pub min_probability: f64,
    pub max_probability: f64,
    pub final_total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub lambda_solar: f64,
    pub lambda_wind: f64,
    pub lambda_consumer: f64,
    pub kkt_residual: f64,
    pub optimal_cost: f64,
}

/// Contents of `run_meta.toml`: the effective configuration, the cost
/// population that was used and a summary of the command's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub command: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionSummary>,
    pub config: CommunityConfig,
    pub population: ExplicitCosts,
}

impl RunMeta {
    pub fn new(command: &str, config: &CommunityConfig, population: &CostPopulation) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            run: None,
            solution: None,
            config: config.clone(),
            population: population.to_explicit(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::format(path, e))?;
        write_text(path, &text)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        toml::from_str(&text).map_err(|e| Error::format(path, e))
    }

    pub fn cost_population(&self) -> Result<CostPopulation> {
        CostPopulation::from_explicit(&self.population)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerPopulation {
    pub solar: f64,
    pub wind: f64,
    pub consumer: f64,
}

impl PerPopulation {
    pub fn from_fn(mut f: impl FnMut(AgentKind) -> Result<f64>) -> Result<Self> {
        Ok(Self {
            solar: f(AgentKind::SolarProsumer)?,
            wind: f(AgentKind::WindProsumer)?,
            consumer: f(AgentKind::Consumer)?,
        })
    }

    pub fn get(&self, kind: AgentKind) -> f64 {
        match kind {
            AgentKind::SolarProsumer => self.solar,
            AgentKind::WindProsumer => self.wind,
            AgentKind::Consumer => self.consumer,
        }
    }
}

/// Contents of `metrics.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub final_cost: f64,
    pub optimal_cost: f64,
    pub final_cost_ratio: f64,
    pub bin_width: f64,
    pub mean_abs_gap: PerPopulation,
    pub fraction_within_0_1: PerPopulation,
    pub max_abs_gap: PerPopulation,
    pub derivative_dispersion: PerPopulation,
}

impl Metrics {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::format(path, e))?;
        write_text(path, &text)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        toml::from_str(&text).map_err(|e| Error::format(path, e))
    }
}
