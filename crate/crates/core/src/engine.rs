//! Step loop tying the manager and the agents together.
//!
//! Step 0 is the forced-active initialization: every bit is 1, every average
//! is 1 and the signals hold their initial value. For each later step `k`:
//!
//! 1. the manager broadcasts the step-`k` signals,
//! 2. every agent draws its bit from its own stream and updates its average,
//! 3. the active counts are aggregated,
//! 4. the manager computes the step-`k + 1` signals from those counts.
//!
//! Agents only read the broadcast snapshot and their own state, so the order
//! in which they are evaluated within a step does not matter.

use rand_chacha::ChaCha8Rng;

use crate::agents::{agent_step, AgentKind};
use crate::error::{Error, Result};
use crate::manager::{ActiveCounts, Manager};
use crate::model::{
    sample_cost_population, AgentState, CommunityConfig, CostFunction, CostPopulation,
    FeedbackSignals,
};
use crate::rng::{self, StreamKey};

/// Which steps end up in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordPolicy {
    every: u64,
}

impl RecordPolicy {
    pub fn every(every: u64) -> Result<Self> {
        if every == 0 {
            return Err(Error::Config("record interval must be at least 1".into()));
        }
        Ok(Self { every })
    }

    pub fn interval(&self) -> u64 {
        self.every
    }

    /// Steps divisible by the interval, plus the final step.
    pub fn keeps(&self, step: u64, horizon: u64) -> bool {
        step.is_multiple_of(self.every) || step == horizon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    /// Signals the agents acted on at this step.
    pub thetas: FeedbackSignals,
    pub active_solar: usize,
    pub active_wind: usize,
    pub active_consumers: usize,
    /// Σf(x) + Σg(y) + Σh(z) at the running averages after this step.
    pub total_cost: f64,
}

impl StepRecord {
    pub fn counts(&self) -> ActiveCounts {
        ActiveCounts {
            solar: self.active_solar,
            wind: self.active_wind,
            consumers: self.active_consumers,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub final_solar: Vec<f64>,
    pub final_wind: Vec<f64>,
    pub final_consumer: Vec<f64>,
    pub trace: Vec<StepRecord>,
    pub config: CommunityConfig,
    pub population: CostPopulation,
    pub broadcasts: u64,
    /// Smallest and largest response probability drawn during the run.
    pub probability_range: (f64, f64),
}

impl SimulationResult {
    pub fn final_averages(&self, kind: AgentKind) -> &[f64] {
        match kind {
            AgentKind::SolarProsumer => &self.final_solar,
            AgentKind::WindProsumer => &self.final_wind,
            AgentKind::Consumer => &self.final_consumer,
        }
    }
}

/// Position of one agent in the community.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentRef {
    pub kind: AgentKind,
    pub index: usize,
}

#[derive(Debug, Clone)]
struct Slot {
    state: AgentState,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: CommunityConfig,
    population: CostPopulation,
    manager: Manager,
    solar: Vec<Slot>,
    wind: Vec<Slot>,
    consumer: Vec<Slot>,
    step: u64,
    counts: ActiveCounts,
    p_min: f64,
    p_max: f64,
}

impl Simulation {
    pub fn new(cfg: &CommunityConfig) -> Result<Self> {
        cfg.validate()?;
        let population = sample_cost_population(cfg)?;
        Self::with_population(cfg, population)
    }

    pub fn with_population(cfg: &CommunityConfig, population: CostPopulation) -> Result<Self> {
        cfg.validate()?;
        let p = cfg.populations;
        if population.sizes() != (p.solar, p.wind, p.consumers) {
            return Err(Error::Mismatch(format!(
                "cost population sizes {:?} do not match configured sizes ({}, {}, {})",
                population.sizes(),
                p.solar,
                p.wind,
                p.consumers
            )));
        }
        let slots = |kind, n| {
            (0..n)
                .map(|index| Slot {
                    state: AgentState::initial(),
                    rng: rng::stream(cfg.seed, StreamKey::Agent(kind, index)),
                })
                .collect::<Vec<_>>()
        };
        let mut manager = Manager::new(cfg);
        let counts = ActiveCounts {
            solar: p.solar,
            wind: p.wind,
            consumers: p.consumers,
        };
        manager.update(0, counts, cfg);
        Ok(Self {
            cfg: cfg.clone(),
            population,
            solar: slots(AgentKind::SolarProsumer, p.solar),
            wind: slots(AgentKind::WindProsumer, p.wind),
            consumer: slots(AgentKind::Consumer, p.consumers),
            manager,
            step: 0,
            counts,
            p_min: f64::INFINITY,
            p_max: f64::NEG_INFINITY,
        })
    }

    pub fn config(&self) -> &CommunityConfig {
        &self.cfg
    }

    pub fn population(&self) -> &CostPopulation {
        &self.population
    }

    /// Index of the last completed step.
    pub fn current_step(&self) -> u64 {
        self.step
    }

    /// Signals that will be broadcast at the next step.
    pub fn pending_signals(&self) -> FeedbackSignals {
        self.manager.signals()
    }

    pub fn states(&self, kind: AgentKind) -> impl Iterator<Item = &AgentState> + '_ {
        self.slots(kind).iter().map(|s| &s.state)
    }

    pub fn averages(&self, kind: AgentKind) -> Vec<f64> {
        self.states(kind).map(AgentState::avg).collect()
    }

    fn slots(&self, kind: AgentKind) -> &[Slot] {
        match kind {
            AgentKind::SolarProsumer => &self.solar,
            AgentKind::WindProsumer => &self.wind,
            AgentKind::Consumer => &self.consumer,
        }
    }

    fn costs(&self, kind: AgentKind) -> &[CostFunction] {
        match kind {
            AgentKind::SolarProsumer => &self.population.solar,
            AgentKind::WindProsumer => &self.population.wind,
            AgentKind::Consumer => &self.population.consumer,
        }
    }

    fn total_cost(&self) -> f64 {
        AgentKind::ALL
            .into_iter()
            .map(|kind| {
                self.slots(kind)
                    .iter()
                    .zip(self.costs(kind))
                    .map(|(slot, cost)| cost.eval_unchecked(slot.state.avg()))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Record for the current step, with the signals that were in force.
    fn record(&self, thetas: FeedbackSignals) -> StepRecord {
        StepRecord {
            step: self.step,
            thetas,
            active_solar: self.counts.solar,
            active_wind: self.counts.wind,
            active_consumers: self.counts.consumers,
            total_cost: self.total_cost(),
        }
    }

    /// Record of the initialization step. Only meaningful before the first
    /// call to [`Simulation::step`].
    pub fn initial_record(&self) -> StepRecord {
        debug_assert_eq!(self.step, 0);
        self.record(FeedbackSignals::uniform(self.cfg.theta.init))
    }

    fn advance(
        &mut self,
        kind: AgentKind,
        index: usize,
        snapshot: &FeedbackSignals,
        k: u64,
    ) -> Result<()> {
        let (slots, costs) = match kind {
            AgentKind::SolarProsumer => (&mut self.solar, &self.population.solar),
            AgentKind::WindProsumer => (&mut self.wind, &self.population.wind),
            AgentKind::Consumer => (&mut self.consumer, &self.population.consumer),
        };
        let slot = &mut slots[index];
        let p = agent_step(
            &mut slot.state,
            kind,
            snapshot,
            &costs[index],
            &mut slot.rng,
        )
        .map_err(|e| Error::Numeric {
            step: k,
            reason: format!("{} agent {index}: {e}", kind.label()),
        })?;
        self.p_min = self.p_min.min(p);
        self.p_max = self.p_max.max(p);
        Ok(())
    }

    fn finish_step(&mut self, k: u64, snapshot: FeedbackSignals) -> Result<StepRecord> {
        let active = |slots: &[Slot]| slots.iter().filter(|s| s.state.activity()).count();
        self.counts = ActiveCounts {
            solar: active(&self.solar),
            wind: active(&self.wind),
            consumers: active(&self.consumer),
        };
        self.step = k;
        self.manager.update(k, self.counts, &self.cfg);
        if !self.manager.signals().is_finite() {
            return Err(Error::Numeric {
                step: k,
                reason: "feedback signal became non-finite".into(),
            });
        }
        Ok(self.record(snapshot))
    }

    /// Runs one step, evaluating agents population by population.
    pub fn step(&mut self) -> Result<StepRecord> {
        let k = self.step + 1;
        let snapshot = self.manager.broadcast();
        for kind in AgentKind::ALL {
            for index in 0..self.slots(kind).len() {
                self.advance(kind, index, &snapshot, k)?;
            }
        }
        self.finish_step(k, snapshot)
    }

    /// Runs one step, evaluating agents in the given order. `order` must list
    /// every agent exactly once.
    pub fn step_in_order(&mut self, order: &[AgentRef]) -> Result<StepRecord> {
        let mut seen: Vec<Vec<bool>> = AgentKind::ALL
            .iter()
            .map(|&kind| vec![false; self.slots(kind).len()])
            .collect();
        for r in order {
            let flags = &mut seen[r.kind as usize];
            match flags.get_mut(r.index) {
                Some(flag) if !*flag => *flag = true,
                _ => {
                    return Err(Error::Config(format!(
                        "evaluation order repeats or overruns {} agent {}",
                        r.kind.label(),
                        r.index
                    )))
                }
            }
        }
        if seen.iter().flatten().any(|&f| !f) {
            return Err(Error::Config("evaluation order omits some agents".into()));
        }
        let k = self.step + 1;
        let snapshot = self.manager.broadcast();
        for r in order {
            self.advance(r.kind, r.index, &snapshot, k)?;
        }
        self.finish_step(k, snapshot)
    }

    /// Every agent, population by population.
    pub fn agent_refs(&self) -> Vec<AgentRef> {
        AgentKind::ALL
            .into_iter()
            .flat_map(|kind| (0..self.slots(kind).len()).map(move |index| AgentRef { kind, index }))
            .collect()
    }

    pub fn into_result(self, trace: Vec<StepRecord>) -> SimulationResult {
        let probability_range = if self.p_min <= self.p_max {
            (self.p_min, self.p_max)
        } else {
            (1.0, 1.0)
        };
        SimulationResult {
            final_solar: self.averages(AgentKind::SolarProsumer),
            final_wind: self.averages(AgentKind::WindProsumer),
            final_consumer: self.averages(AgentKind::Consumer),
            trace,
            broadcasts: self.manager.broadcasts(),
            probability_range,
            config: self.cfg,
            population: self.population,
        }
    }
}

/// Runs `cfg.horizon` steps and records the trace according to
/// `cfg.record_every`.
pub fn run(cfg: &CommunityConfig) -> Result<SimulationResult> {
    let sim = Simulation::new(cfg)?;
    drive(sim)
}

pub fn run_with_population(
    cfg: &CommunityConfig,
    population: CostPopulation,
) -> Result<SimulationResult> {
    drive(Simulation::with_population(cfg, population)?)
}

fn drive(mut sim: Simulation) -> Result<SimulationResult> {
    let horizon = sim.cfg.horizon;
    let policy = RecordPolicy::every(sim.cfg.record_every)?;
    let mut trace = Vec::with_capacity((horizon / policy.interval() + 2) as usize);
    trace.push(sim.initial_record());
    for _ in 0..horizon {
        let record = sim.step()?;
        if policy.keeps(record.step, horizon) {
            trace.push(record);
        }
    }
    Ok(sim.into_result(trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefRange, CoefRanges, Gains, Preset};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn tiny() -> CommunityConfig {
        CommunityConfig::preset(Preset::Tiny)
    }

    #[test]
    fn record_policy_counts() {
        let every = |n| RecordPolicy::every(n).unwrap();
        let kept = |p: RecordPolicy, k: u64| (0..=k).filter(|&s| p.keeps(s, k)).count();
        assert_eq!(kept(every(1), 100), 101);
        assert_eq!(kept(every(101), 100), 2);
        assert_eq!(kept(every(10), 100), 11);
        assert_eq!(kept(every(7), 100), 16);
        assert!(RecordPolicy::every(0).is_err());
    }

    #[test]
    fn trace_thinning_matches_policy() {
        let mut cfg = tiny();
        cfg.horizon = 100;
        cfg.record_every = 10;
        let steps: Vec<u64> = run(&cfg).unwrap().trace.iter().map(|r| r.step).collect();
        assert_eq!(steps, (0..=100).step_by(10).collect::<Vec<_>>());

        cfg.record_every = 101;
        let steps: Vec<u64> = run(&cfg).unwrap().trace.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 100]);
    }

    #[test]
    fn always_active_agent() {
        // Linear solar cost (f' = 1) with theta = 1 and no feedback gives p = 1.
        let mut cfg = tiny();
        cfg.populations.solar = 1;
        cfg.populations.wind = 1;
        cfg.populations.consumers = 1;
        cfg.capacity.solar = 0.5;
        cfg.capacity.wind = 0.5;
        cfg.gains = Gains {
            solar: 0.0,
            wind: 0.0,
            consumer: 0.0,
        };
        cfg.theta.init = 1.0;
        cfg.coefficients.solar.a = CoefRange::point(0.0);
        cfg.coefficients.solar.b = CoefRange::point(0.0);
        cfg.horizon = 500;

        let mut sim = Simulation::new(&cfg).unwrap();
        for _ in 0..cfg.horizon {
            let rec = sim.step().unwrap();
            assert_eq!(rec.thetas.solar, 1.0);
            assert_eq!(sim.averages(AgentKind::SolarProsumer), vec![1.0]);
        }
    }

    #[test]
    fn identical_seeds_identical_results() {
        let cfg = tiny();
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 99;
        assert_ne!(run(&cfg).unwrap().trace, run(&other).unwrap().trace);
    }

    #[test]
    fn broadcast_count_equals_horizon() {
        let cfg = tiny();
        let result = run(&cfg).unwrap();
        assert_eq!(result.broadcasts, cfg.horizon);
        assert_eq!(result.trace.first().unwrap().step, 0);
        assert_eq!(result.trace.last().unwrap().step, cfg.horizon);
    }

    #[test]
    fn step_zero_is_all_active() {
        let cfg = CommunityConfig::preset(Preset::Paper);
        let sim = Simulation::new(&cfg).unwrap();
        let rec = sim.initial_record();
        assert_eq!(
            (rec.active_solar, rec.active_wind, rec.active_consumers),
            (100, 80, 160)
        );
        assert_eq!(rec.thetas, FeedbackSignals::uniform(0.35));
        let pop = sim.population();
        let direct = pop.total_cost(&[1.0; 100], &[1.0; 80], &[1.0; 160]);
        assert!((rec.total_cost - direct).abs() < 1e-9);
    }

    #[test]
    fn snapshot_is_fixed_before_draws() {
        let mut sim = Simulation::new(&tiny()).unwrap();
        for _ in 0..50 {
            let pending = sim.pending_signals();
            let rec = sim.step().unwrap();
            assert_eq!(rec.thetas, pending);
        }
    }

    #[test]
    fn aggregates_and_settling() {
        let mut cfg = CommunityConfig::preset(Preset::Paper);
        cfg.horizon = 400;
        let mut sim = Simulation::new(&cfg).unwrap();
        let mut prev: Vec<Vec<f64>> = AgentKind::ALL.iter().map(|&k| sim.averages(k)).collect();
        for _ in 0..cfg.horizon {
            let rec = sim.step().unwrap();
            let k = rec.step;
            let bits = |kind| sim.states(kind).filter(|s| s.activity()).count();
            assert_eq!(rec.active_solar, bits(AgentKind::SolarProsumer));
            assert_eq!(rec.active_wind, bits(AgentKind::WindProsumer));
            assert_eq!(rec.active_consumers, bits(AgentKind::Consumer));
            for (i, &kind) in AgentKind::ALL.iter().enumerate() {
                let now = sim.averages(kind);
                for (a, b) in now.iter().zip(&prev[i]) {
                    assert!(*a > 0.0 && *a <= 1.0);
                    assert!((a - b).abs() <= 1.0 / (k as f64 + 1.0) + 1e-15);
                }
                prev[i] = now;
            }
            assert!(rec.thetas.within(&cfg.theta));
        }
    }

    #[test]
    fn evaluation_order_does_not_matter() {
        let cfg = CommunityConfig::preset(Preset::Paper);
        let mut natural = Simulation::new(&cfg).unwrap();
        let mut shuffled = Simulation::new(&cfg).unwrap();
        let mut order = shuffled.agent_refs();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            order.shuffle(&mut rng);
            let a = natural.step().unwrap();
            let b = shuffled.step_in_order(&order).unwrap();
            assert_eq!(a, b);
            for kind in AgentKind::ALL {
                let bits_a: Vec<bool> = natural.states(kind).map(|s| s.activity()).collect();
                let bits_b: Vec<bool> = shuffled.states(kind).map(|s| s.activity()).collect();
                assert_eq!(bits_a, bits_b);
            }
        }
    }

    #[test]
    fn bad_orders_are_rejected() {
        let mut sim = Simulation::new(&tiny()).unwrap();
        let mut order = sim.agent_refs();
        order.pop();
        assert!(sim.step_in_order(&order).is_err());
        let mut order = sim.agent_refs();
        order[1] = order[0];
        assert!(sim.step_in_order(&order).is_err());
    }

    #[test]
    fn invalid_config_fails_before_step_zero() {
        let mut cfg = tiny();
        cfg.capacity.solar = 10.0;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn population_size_mismatch_is_rejected() {
        let cfg = tiny();
        let mut other = cfg.clone();
        other.populations.solar = 4;
        other.coefficients = CoefRanges::default();
        let pop = sample_cost_population(&other).unwrap();
        assert!(matches!(
            Simulation::with_population(&cfg, pop),
            Err(Error::Mismatch(_))
        ));
    }
}
