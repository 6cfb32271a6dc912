//! Acceptance suite. Runs as a plain binary (`harness = false`), prints one
//! PASS/FAIL line per criterion and exits nonzero if any criterion fails.
//!
//! ```text
//! cargo test -p prosumer-sim --test acceptance
//! ```

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use prosumer_sim::agents::{bernoulli, AgentKind};
use prosumer_sim::analysis;
use prosumer_sim::cli::{self, Overrides};
use prosumer_sim::engine::{self, Simulation, SimulationResult};
use prosumer_sim::model::{
    sample_cost_population, update_running_average, CommunityConfig, CostFunction, CostPopulation,
    Preset,
};
use prosumer_sim::oracle::{self, solve_full, solve_subproblem, OracleSolution};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn costs(pop: &CostPopulation, kind: AgentKind) -> &[CostFunction] {
    match kind {
        AgentKind::SolarProsumer => &pop.solar,
        AgentKind::WindProsumer => &pop.wind,
        AgentKind::Consumer => &pop.consumer,
    }
}

fn capacity(cfg: &CommunityConfig, kind: AgentKind) -> f64 {
    match kind {
        AgentKind::SolarProsumer => cfg.capacity.solar,
        AgentKind::WindProsumer => cfg.capacity.wind,
        AgentKind::Consumer => cfg.capacity.consumer(),
    }
}

/// Shared state: one full run of the default configuration and its optimum.
struct Baseline {
    cfg: CommunityConfig,
    run: SimulationResult,
    sol: OracleSolution,
}

fn oracle_kkt() -> Outcome {
    let cfg = CommunityConfig::preset(Preset::Paper);
    let pop = sample_cost_population(&cfg).map_err(|e| e.to_string())?;
    let sol = solve_full(&pop, &cfg).map_err(|e| e.to_string())?;
    let (mut worst_sum, mut worst_box, mut worst_interior) = (0.0f64, 0.0f64, 0.0f64);
    for kind in AgentKind::ALL {
        let values = sol.values(kind);
        let sum: f64 = values.iter().sum();
        worst_sum = worst_sum.max((sum - capacity(&cfg, kind)).abs());
        for (c, &v) in costs(&pop, kind).iter().zip(values) {
            worst_box = worst_box.max((-v).max(v - 1.0).max(0.0));
            if v > 0.0 && v < 1.0 {
                let d = c.deriv(v).map_err(|e| e.to_string())?;
                worst_interior = worst_interior.max((d - sol.lambda(kind)).abs());
            }
        }
    }
    let same = vec![CostFunction::consumer(1.1, 0.4, 0.02).unwrap(); 9];
    let split = solve_subproblem(&same, 4.0).map_err(|e| e.to_string())?;
    let worst_split = split
        .values
        .iter()
        .map(|v| (v - 4.0 / 9.0).abs())
        .fold(0.0, f64::max);
    let msg = format!(
        "constraint {worst_sum:.1e}, box {worst_box:.1e}, interior |d-λ| {worst_interior:.1e}, equal split {worst_split:.1e}"
    );
    if worst_sum <= 1e-8 && worst_box <= 1e-8 && worst_interior <= 1e-6 && worst_split <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_vs_grid() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let (cfg, pop) = common::tiny_instance(seed);
        let sol = solve_full(&pop, &cfg).map_err(|e| e.to_string())?;
        let value = oracle::optimal_cost(&sol, &pop);
        let grid = common::grid_min_population(&pop, &cfg, 1e-3);
        worst = worst.max((value - grid).abs());
    }
    let msg = format!("max |oracle - grid| = {worst:.2e} over 3 instances");
    if worst <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn convergence(b: &Baseline) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in AgentKind::ALL {
        let finals = b.run.final_averages(kind);
        let star = b.sol.values(kind);
        let gap = analysis::mean_abs_gap(finals, star).map_err(|e| e.to_string())?;
        let within = analysis::fraction_within(finals, star, 0.1).map_err(|e| e.to_string())?;
        ok &= gap <= 0.05 && within >= 0.8;
        parts.push(format!(
            "{} gap {gap:.4} within {:.0}%",
            kind.label(),
            100.0 * within
        ));
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cost_ratio(b: &Baseline) -> Outcome {
    let opt = oracle::optimal_cost(&b.sol, &b.run.population);
    let series = analysis::cost_ratio_series(&b.run.trace, opt).map_err(|e| e.to_string())?;
    let (step, ratio) = *series.last().ok_or("empty trace")?;
    let msg = format!("ratio {ratio:.5} at step {step}");
    if (0.97..=1.05).contains(&ratio) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn capacity_tracking(b: &Baseline) -> Outcome {
    let from = b.cfg.horizon - b.cfg.horizon / 4;
    let (s, w, c) = analysis::mean_active_counts(&b.run.trace, from).ok_or("no tail records")?;
    let (cs, cw) = (b.cfg.capacity.solar, b.cfg.capacity.wind);
    let msg = format!(
        "tail means solar {s:.2} (target {cs}), wind {w:.2} (target {cw}), consumers {c:.2} (target {})",
        cs + cw
    );
    if (s - cs).abs() <= 2.0 && (w - cw).abs() <= 2.0 && (c - (cs + cw)).abs() <= 3.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn running_average() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = 2f64.powi(-40);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let bias: f64 = rng.random();
        let (mut avg, mut ones) = (0.0, 0u64);
        for n in 0..1000u64 {
            let bit = rng.random::<f64>() < bias;
            ones += u64::from(bit);
            avg = update_running_average(avg, n, bit);
            worst = worst.max((avg - ones as f64 / (n + 1) as f64).abs());
        }
    }
    let msg = format!("max deviation {worst:.1e} over 1000 histories of 1000 bits");
    if worst <= tol {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn reproducibility(dir: &Path) -> Outcome {
    let config = dir.join("paper.toml");
    cli::gen_config("paper", &config).map_err(|e| e.to_string())?;
    let overrides = Overrides::default();
    let trace = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.join(name);
        cli::simulate(&config, &out, &overrides).map_err(|e| e.to_string())?;
        std::fs::read(out.join("trace.csv")).map_err(|e| e.to_string())
    };
    let (first, second) = (trace("a")?, trace("b")?);
    if first != second {
        return Err("traces of two identical runs differ".into());
    }

    let cfg = CommunityConfig::preset(Preset::Paper);
    let mut natural = Simulation::new(&cfg).map_err(|e| e.to_string())?;
    let mut shuffled = natural.clone();
    let mut order = shuffled.agent_refs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let steps = 300;
    for _ in 0..steps {
        order.shuffle(&mut rng);
        natural.step().map_err(|e| e.to_string())?;
        shuffled.step_in_order(&order).map_err(|e| e.to_string())?;
        for kind in AgentKind::ALL {
            let a: Vec<bool> = natural.states(kind).map(|s| s.activity()).collect();
            let b: Vec<bool> = shuffled.states(kind).map(|s| s.activity()).collect();
            if a != b {
                return Err(format!(
                    "bits differ under a shuffled order at step {}",
                    natural.current_step()
                ));
            }
        }
    }
    Ok(format!(
        "identical trace.csv ({} bytes); bits unchanged under {steps} shuffled orders",
        first.len()
    ))
}

fn bernoulli_frequency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 100_000;
    let hits = (0..n).filter(|_| bernoulli(0.3, &mut rng)).count();
    let freq = hits as f64 / n as f64;
    let msg = format!("frequency {freq:.4} for p = 0.3");
    if (freq - 0.3).abs() <= 0.01 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bounds(b: &Baseline) -> Outcome {
    let mut runs = vec![b.run.clone()];
    for (seed, gain) in [(3, 0.5), (4, 0.9), (5, 0.0)] {
        let mut cfg = CommunityConfig::preset(Preset::Tiny);
        cfg.seed = seed;
        cfg.gains.solar = gain;
        cfg.gains.wind = gain;
        cfg.gains.consumer = gain;
        runs.push(engine::run(&cfg).map_err(|e| e.to_string())?);
    }
    let mut records = 0;
    for run in &runs {
        let theta = &run.config.theta;
        for r in &run.trace {
            records += 1;
            if !r.thetas.within(theta) {
                return Err(format!(
                    "signals {:?} leave [{}, {}] at step {}",
                    r.thetas, theta.min, theta.max, r.step
                ));
            }
        }
        let (lo, hi) = run.probability_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return Err(format!("probability range [{lo}, {hi}] leaves [0, 1]"));
        }
    }
    Ok(format!(
        "{records} records over {} runs inside bounds",
        runs.len()
    ))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cfg = CommunityConfig::preset(Preset::Paper);
    let baseline = engine::run(&cfg).and_then(|run| {
        let sol = solve_full(&run.population, &cfg)?;
        Ok(Baseline { cfg, run, sol })
    });
    let baseline = match baseline {
        Ok(b) => b,
        Err(e) => {
            println!("[FAIL] baseline run: {e}");
            return ExitCode::FAILURE;
        }
    };
    let dir = tempfile::tempdir().expect("temporary directory");

    let results: Vec<(&str, Outcome)> = vec![
        ("1 oracle KKT", oracle_kkt()),
        ("2 oracle vs grid search", oracle_vs_grid()),
        ("3 convergence to optimum", convergence(&baseline)),
        ("4 final cost ratio", cost_ratio(&baseline)),
        ("5 capacity tracking", capacity_tracking(&baseline)),
        ("6 running average exactness", running_average()),
        ("7 reproducibility", reproducibility(dir.path())),
        ("8 Bernoulli frequency", bernoulli_frequency()),
        ("9 signal and probability bounds", bounds(&baseline)),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(msg) => println!("[PASS] {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg}");
            }
        }
    }
    println!(
        "{} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
