//! Community manager: turns active counts into the next feedback signals.
//!
//! Each signal moves against the error between the realized active count and
//! its target, with step size `gain / (k + 1)`, and is then clamped into the
//! configured `[min, max]` band.

use crate::model::{CommunityConfig, FeedbackSignals, ThetaSettings};

fn step(theta: f64, gain: f64, k: u64, error: f64, bounds: &ThetaSettings) -> f64 {
    bounds.clamp(theta - gain / (k as f64 + 1.0) * error)
}

pub fn update_theta_solar(theta: f64, k: u64, active_solar: usize, cfg: &CommunityConfig) -> f64 {
    let error = active_solar as f64 - cfg.capacity.solar;
    step(theta, cfg.gains.solar, k, error, &cfg.theta)
}

pub fn update_theta_wind(theta: f64, k: u64, active_wind: usize, cfg: &CommunityConfig) -> f64 {
    let error = active_wind as f64 - cfg.capacity.wind;
    step(theta, cfg.gains.wind, k, error, &cfg.theta)
}

/// Consumers track the prosumers active at this same step, not a fixed
/// capacity.
pub fn update_theta_consumer(
    theta: f64,
    k: u64,
    active_consumers: usize,
    active_solar: usize,
    active_wind: usize,
    cfg: &CommunityConfig,
) -> f64 {
    let error = active_consumers as f64 - active_solar as f64 - active_wind as f64;
    step(theta, cfg.gains.consumer, k, error, &cfg.theta)
}

/// Active agents per population at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActiveCounts {
    pub solar: usize,
    pub wind: usize,
    pub consumers: usize,
}

/// Single writer of the feedback signals.
#[derive(Debug, Clone)]
pub struct Manager {
    signals: FeedbackSignals,
    broadcasts: u64,
}

impl Manager {
    pub fn new(cfg: &CommunityConfig) -> Self {
        Self {
            signals: FeedbackSignals::uniform(cfg.theta.init),
            broadcasts: 0,
        }
    }

    /// Current signals without counting a delivery.
    pub fn signals(&self) -> FeedbackSignals {
        self.signals
    }

    /// Hands out the snapshot every agent uses for the coming step.
    pub fn broadcast(&mut self) -> FeedbackSignals {
        self.broadcasts += 1;
        self.signals
    }

    pub fn broadcasts(&self) -> u64 {
        self.broadcasts
    }

    /// Computes the step-`k + 1` signals from the counts realized at step `k`.
    pub fn update(&mut self, k: u64, counts: ActiveCounts, cfg: &CommunityConfig) {
        let s = self.signals;
        self.signals = FeedbackSignals {
            solar: update_theta_solar(s.solar, k, counts.solar, cfg),
            wind: update_theta_wind(s.wind, k, counts.wind, cfg),
            consumer: update_theta_consumer(
                s.consumer,
                k,
                counts.consumers,
                counts.solar,
                counts.wind,
                cfg,
            ),
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Gains, Preset};
    use proptest::prelude::*;

    fn cfg_with_gain(gain: f64) -> CommunityConfig {
        let mut cfg = CommunityConfig::preset(Preset::Paper);
        cfg.gains = Gains {
            solar: gain,
            wind: gain,
            consumer: gain,
        };
        cfg
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn solar_examples() {
        let cfg = cfg_with_gain(0.01);
        assert_eq!(update_theta_solar(0.35, 7, 50, &cfg), 0.35);
        assert!(close(update_theta_solar(0.35, 4, 60, &cfg), 0.33));

        // Raw update 0.35 - 0.5 * 50 = -24.65 lands on the floor.
        let cfg = cfg_with_gain(0.5);
        assert_eq!(update_theta_solar(0.35, 0, 100, &cfg), 1e-6);
    }

    #[test]
    fn wind_examples() {
        let cfg = cfg_with_gain(0.01);
        assert_eq!(update_theta_wind(0.35, 3, 60, &cfg), 0.35);
        assert!(close(update_theta_wind(0.35, 9, 50, &cfg), 0.36));
        let raised = update_theta_wind(0.35, 0, 0, &cfg);
        assert!(close(raised, 0.95_f64.min(cfg.theta.max)));

        let mut tight = cfg.clone();
        tight.theta.max = 0.5;
        assert_eq!(update_theta_wind(0.35, 0, 0, &tight), 0.5);
    }

    #[test]
    fn consumer_examples() {
        let cfg = cfg_with_gain(0.01);
        assert_eq!(update_theta_consumer(0.35, 2, 110, 50, 60, &cfg), 0.35);
        assert!(close(
            update_theta_consumer(0.35, 4, 120, 50, 60, &cfg),
            0.33
        ));
        assert!(close(
            update_theta_consumer(0.35, 4, 100, 50, 60, &cfg),
            0.37
        ));
    }

    #[test]
    fn broadcasts_are_counted_and_identical() {
        let cfg = cfg_with_gain(0.01);
        let mut manager = Manager::new(&cfg);
        let first = manager.broadcast();
        let second = manager.broadcast();
        assert_eq!(first.solar.to_bits(), second.solar.to_bits());
        assert_eq!(manager.broadcasts(), 2);
        let _ = manager.signals();
        assert_eq!(manager.broadcasts(), 2);
    }

    proptest! {
        #[test]
        fn signals_stay_within_bounds(
            gain in 0.0f64..1.0,
            history in proptest::collection::vec((0usize..=100, 0usize..=80, 0usize..=160), 1..200),
        ) {
            let cfg = cfg_with_gain(gain);
            let mut manager = Manager::new(&cfg);
            for (k, (s, w, c)) in history.into_iter().enumerate() {
                let before = manager.signals();
                manager.update(k as u64, ActiveCounts { solar: s, wind: w, consumers: c }, &cfg);
                let after = manager.signals();
                prop_assert!(after.within(&cfg.theta));
                // Largest possible error term is U + N + M = 340.
                let bound = gain * 340.0 / (k as f64 + 1.0) + 1e-12;
                prop_assert!((after.solar - before.solar).abs() <= bound);
                prop_assert!((after.wind - before.wind).abs() <= bound);
                prop_assert!((after.consumer - before.consumer).abs() <= bound);
            }
        }

        #[test]
        fn zero_gain_freezes_signals(
            history in proptest::collection::vec((0usize..=100, 0usize..=80, 0usize..=160), 1..100),
        ) {
            let cfg = cfg_with_gain(0.0);
            let mut manager = Manager::new(&cfg);
            for (k, (s, w, c)) in history.into_iter().enumerate() {
                manager.update(k as u64, ActiveCounts { solar: s, wind: w, consumers: c }, &cfg);
                prop_assert_eq!(manager.signals(), FeedbackSignals::uniform(0.35));
            }
        }
    }
}
