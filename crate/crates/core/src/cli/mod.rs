//! Command-line front end.
//!
//! ```text
//! prosumer-sim gen-config --preset paper --out paper.toml
//! prosumer-sim simulate   --config paper.toml --out run/
//! prosumer-sim solve      --config paper.toml --out solve/
//! prosumer-sim compare    --run run/ --solve solve/ --out cmp/
//! ```
//!
//! Failures print one JSON object on stderr (`{"error": {"kind", "message"}}`)
//! and exit with status 1.

pub mod files;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::agents::AgentKind;
use crate::analysis::{self, DEFAULT_BIN_WIDTH};
use crate::engine::{self, StepRecord};
use crate::error::{Error, Result};
use crate::model::{sample_cost_population, CommunityConfig, Preset};
use crate::oracle;

use files::{AgentValues, Metrics, PerPopulation, RunMeta, RunSummary, SolutionSummary};

#[derive(Debug, Parser)]
#[command(
    name = "prosumer-sim",
    version,
    about = "Simulate feedback-regulated prosumers and consumers and compare against the optimum"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the stochastic simulation and write its trace.
    Simulate(SimulateArgs),
    /// Solve the centralized problem for the configured population.
    Solve(SolveArgs),
    /// Compare a simulation (or solve) directory against a solve directory.
    Compare(CompareArgs),
    /// Write a preset configuration file.
    GenConfig(GenConfigArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of simulated steps (the horizon).
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub record_every: Option<u64>,
    #[arg(long)]
    pub gain_solar: Option<f64>,
    #[arg(long)]
    pub gain_wind: Option<f64>,
    #[arg(long)]
    pub gain_consumer: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut CommunityConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(steps) = self.steps {
            cfg.horizon = steps;
        }
        if let Some(every) = self.record_every {
            cfg.record_every = every;
        }
        if let Some(g) = self.gain_solar {
            cfg.gains.solar = g;
        }
        if let Some(g) = self.gain_wind {
            cfg.gains.wind = g;
        }
        if let Some(g) = self.gain_consumer {
            cfg.gains.consumer = g;
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed used to sample the cost population.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Output directory of `simulate` (or of `solve`, for a self-check).
    #[arg(long = "run")]
    pub run_dir: PathBuf,
    /// Output directory of `solve`.
    #[arg(long = "solve")]
    pub solve_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
}

#[derive(Debug, Args)]
pub struct GenConfigArgs {
    /// One of: paper, tiny, symmetric.
    #[arg(long)]
    pub preset: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn load_config(path: &Path) -> Result<CommunityConfig> {
    let text = files::read_text(path)?;
    CommunityConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(reason) => Error::format(path, reason),
        other => other,
    })
}

pub fn simulate(config: &Path, out: &Path, overrides: &Overrides) -> Result<()> {
    let mut cfg = load_config(config)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    let result = engine::run(&cfg)?;
    files::ensure_dir(out)?;
    files::write_trace(&out.join(files::TRACE_FILE), &result.trace)?;
    let finals = AgentValues {
        solar: result.final_solar.clone(),
        wind: result.final_wind.clone(),
        consumer: result.final_consumer.clone(),
    };
    files::write_agent_values(&out.join(files::FINAL_AVERAGES_FILE), "average", &finals)?;
    let mut meta = RunMeta::new("simulate", &cfg, &result.population);
    meta.run = Some(RunSummary {
        steps: cfg.horizon,
        broadcasts: result.broadcasts,
        recorded_steps: result.trace.len(),
        min_probability: result.probability_range.0,
        max_probability: result.probability_range.1,
        final_total_cost: result.population.total_cost(
            &finals.solar,
            &finals.wind,
            &finals.consumer,
        ),
    });
    meta.write(&out.join(files::RUN_META_FILE))
}

pub fn solve(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let population = sample_cost_population(&cfg)?;
    let sol = oracle::solve_full(&population, &cfg)?;
    files::ensure_dir(out)?;
    let values = AgentValues {
        solar: sol.x_star.clone(),
        wind: sol.y_star.clone(),
        consumer: sol.z_star.clone(),
    };
    files::write_agent_values(&out.join(files::SOLUTION_FILE), "optimal", &values)?;
    let mut meta = RunMeta::new("solve", &cfg, &population);
    meta.solution = Some(SolutionSummary {
        lambda_solar: sol.lambda_solar,
        lambda_wind: sol.lambda_wind,
        lambda_consumer: sol.lambda_consumer,
        kkt_residual: sol.kkt_residual,
        optimal_cost: oracle::optimal_cost(&sol, &population),
    });
    meta.write(&out.join(files::RUN_META_FILE))
}

/// Final values of a run directory: simulated averages if present, otherwise
/// an oracle solution.
fn load_final_values(dir: &Path) -> Result<AgentValues> {
    let averages = dir.join(files::FINAL_AVERAGES_FILE);
    if averages.exists() {
        files::read_agent_values(&averages)
    } else {
        files::read_agent_values(&dir.join(files::SOLUTION_FILE))
    }
}

pub fn compare(run_dir: &Path, solve_dir: &Path, out: &Path, bin_width: f64) -> Result<Metrics> {
    let run_meta = RunMeta::read(&run_dir.join(files::RUN_META_FILE))?;
    let solve_meta = RunMeta::read(&solve_dir.join(files::RUN_META_FILE))?;
    let run_pop = run_meta.cost_population()?;
    let solve_pop = solve_meta.cost_population()?;
    if run_pop.sizes() != solve_pop.sizes() {
        return Err(Error::Mismatch(format!(
            "run has population sizes {:?}, solve has {:?}",
            run_pop.sizes(),
            solve_pop.sizes()
        )));
    }
    if run_pop != solve_pop {
        return Err(Error::Mismatch(
            "run and solve were produced for different cost coefficients".into(),
        ));
    }
    let finals = load_final_values(run_dir)?;
    let stars = files::read_agent_values(&solve_dir.join(files::SOLUTION_FILE))?;
    for (name, values) in [("run", &finals), ("solve", &stars)] {
        if values.sizes() != run_pop.sizes() {
            return Err(Error::Mismatch(format!(
                "{name} values have sizes {:?}, population has {:?}",
                values.sizes(),
                run_pop.sizes()
            )));
        }
    }

    let optimal_cost = run_pop.total_cost(&stars.solar, &stars.wind, &stars.consumer);
    let final_cost = run_pop.total_cost(&finals.solar, &finals.wind, &finals.consumer);
    let costs = |kind| match kind {
        AgentKind::SolarProsumer => &run_pop.solar,
        AgentKind::WindProsumer => &run_pop.wind,
        AgentKind::Consumer => &run_pop.consumer,
    };
    let metrics = Metrics {
        final_cost,
        optimal_cost,
        final_cost_ratio: final_cost / optimal_cost,
        bin_width,
        mean_abs_gap: PerPopulation::from_fn(|k| {
            analysis::mean_abs_gap(finals.get(k), stars.get(k))
        })?,
        fraction_within_0_1: PerPopulation::from_fn(|k| {
            analysis::fraction_within(finals.get(k), stars.get(k), 0.1)
        })?,
        max_abs_gap: PerPopulation::from_fn(|k| {
            Ok(finals
                .get(k)
                .iter()
                .zip(stars.get(k))
                .map(|(f, s)| (f - s).abs())
                .fold(0.0, f64::max))
        })?,
        derivative_dispersion: PerPopulation::from_fn(|k| {
            analysis::derivative_dispersion(finals.get(k), costs(k))
        })?,
    };
    let histograms = AgentKind::ALL
        .into_iter()
        .map(|k| {
            Ok((
                k,
                analysis::abs_gap_histogram(finals.get(k), stars.get(k), bin_width)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    files::ensure_dir(out)?;
    files::write_compare(&out.join(files::COMPARE_FILE), &finals, &stars)?;
    files::write_histograms(&out.join(files::HISTOGRAM_FILE), &histograms)?;
    let trace_path = run_dir.join(files::TRACE_FILE);
    if trace_path.exists() {
        let trace: Vec<StepRecord> = files::read_trace(&trace_path)?
            .into_iter()
            .map(StepRecord::from)
            .collect();
        let series = analysis::cost_ratio_series(&trace, optimal_cost)?;
        files::write_cost_ratio(&out.join(files::COST_RATIO_FILE), &series)?;
    }
    metrics.write(&out.join(files::METRICS_FILE))?;
    Ok(metrics)
}

pub fn gen_config(preset: &str, out: &Path) -> Result<()> {
    let preset: Preset = preset.parse()?;
    let cfg = CommunityConfig::preset(preset);
    let text = cfg.to_toml();
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        files::ensure_dir(parent)?;
    }
    files::write_text(out, &text)?;
    load_config(out)?.validate()
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a.config, &a.out, &a.overrides),
        Command::Solve(a) => solve(&a.config, &a.out, a.seed),
        Command::Compare(a) => compare(&a.run_dir, &a.solve_dir, &a.out, a.bin_width).map(|_| ()),
        Command::GenConfig(a) => gen_config(&a.preset, &a.out),
    }
}

/// Machine-readable error record printed on failure.
pub fn error_record(err: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
        }
    })
    .to_string()
}

pub fn main_with(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::FAILURE
        }
    }
}
