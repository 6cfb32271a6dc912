//! Seeded random streams.
//!
//! Every run derives all randomness from one master seed. Each consumer of
//! randomness gets its own ChaCha8 stream: the master seed fixes the key and
//! the stream id selects an independent keystream. Agents are keyed by
//! `(kind, index)`, so the bits an agent draws never depend on how many
//! other agents exist or in which order they are evaluated. Population
//! sampling has a reserved stream of its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::AgentKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKey {
    Population,
    Agent(AgentKind, usize),
}

impl StreamKey {
    fn id(self) -> u64 {
        match self {
            StreamKey::Population => 0,
            StreamKey::Agent(kind, index) => {
                let tag = match kind {
                    AgentKind::SolarProsumer => 1u64,
                    AgentKind::WindProsumer => 2,
                    AgentKind::Consumer => 3,
                };
                debug_assert!((index as u64) < 1 << 40);
                (tag << 40) | index as u64
            }
        }
    }
}

pub fn stream(seed: u64, key: StreamKey) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key.id());
    rng
}
