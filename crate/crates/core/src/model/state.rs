/// Folds one more activity bit into a running average over `steps_seen` steps.
///
/// `avg * steps_seen` is the number of active steps so far. It is rounded to the
/// nearest integer before the new bit is added, so the result is exactly the
/// same as dividing the full count by `steps_seen + 1`, with no drift over
/// long horizons.
pub fn update_running_average(avg: f64, steps_seen: u64, bit: bool) -> f64 {
    let count = (avg * steps_seen as f64).round() + f64::from(u8::from(bit));
    count / (steps_seen + 1) as f64
}

/// Activity bit, running average and number of completed steps of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    activity: bool,
    avg: f64,
    steps_seen: u64,
}

impl AgentState {
    /// State after the forced-active step 0: bit 1, average 1.
    pub fn initial() -> Self {
        Self {
            activity: true,
            avg: 1.0,
            steps_seen: 1,
        }
    }

    pub fn activity(&self) -> bool {
        self.activity
    }

    pub fn avg(&self) -> f64 {
        self.avg
    }

    pub fn steps_seen(&self) -> u64 {
        self.steps_seen
    }

    /// Number of steps this agent was active, recovered from the average.
    pub fn active_steps(&self) -> u64 {
        (self.avg * self.steps_seen as f64).round() as u64
    }

    /// Records the outcome of one more step.
    pub fn record(&mut self, bit: bool) {
        self.avg = update_running_average(self.avg, self.steps_seen, bit);
        self.steps_seen += 1;
        self.activity = bit;
    }
}

impl Default for AgentState {
    fn default() -> Self {
        Self::initial()
    }
}
