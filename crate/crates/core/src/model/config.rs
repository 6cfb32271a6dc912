use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::cost::Coefficients;
use crate::error::{Error, Result};

pub const DEFAULT_HORIZON: u64 = 20_000;
pub const DEFAULT_GAIN: f64 = 0.1;
pub const DEFAULT_THETA_INIT: f64 = 0.35;
pub const DEFAULT_THETA_MIN: f64 = 1e-6;
pub const DEFAULT_THETA_MAX: f64 = 100.0;

/// Everything needed to reproduce a run.
///
/// Serialized as TOML. Optional sections fall back to the defaults above; an
/// `[explicit]` section, when present, replaces random sampling of the cost
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityConfig {
    #[serde(with = "seed_repr")]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    pub populations: Populations,
    pub capacity: Capacities,
    #[serde(default)]
    pub gains: Gains,
    #[serde(default)]
    pub theta: ThetaSettings,
    #[serde(default)]
    pub coefficients: CoefRanges,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<ExplicitCosts>,
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}

fn default_record_every() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Populations {
    pub solar: usize,
    pub wind: usize,
    pub consumers: usize,
}

/// Target sums of the solar and wind running averages. Consumers target the
/// sum of both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capacities {
    pub solar: f64,
    pub wind: f64,
}

impl Capacities {
    pub fn consumer(&self) -> f64 {
        self.solar + self.wind
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    pub solar: f64,
    pub wind: f64,
    pub consumer: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            solar: DEFAULT_GAIN,
            wind: DEFAULT_GAIN,
            consumer: DEFAULT_GAIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSettings {
    pub init: f64,
    pub min: f64,
    pub max: f64,
}

impl ThetaSettings {
    pub fn clamp(&self, theta: f64) -> f64 {
        theta.clamp(self.min, self.max)
    }
}

impl Default for ThetaSettings {
    fn default() -> Self {
        Self {
            init: DEFAULT_THETA_INIT,
            min: DEFAULT_THETA_MIN,
            max: DEFAULT_THETA_MAX,
        }
    }
}

/// Closed interval `[lo, hi]` for uniform sampling; written as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct CoefRange {
    pub lo: f64,
    pub hi: f64,
}

impl CoefRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    /// Maps a unit draw `u ∈ [0, 1)` into the interval.
    pub fn at(&self, u: f64) -> f64 {
        self.lo + (self.hi - self.lo) * u
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo < 0.0 || self.lo > self.hi {
            return Err(Error::Config(format!(
                "{what} range [{}, {}] must satisfy 0 <= lo <= hi",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

impl From<[f64; 2]> for CoefRange {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<CoefRange> for [f64; 2] {
    fn from(r: CoefRange) -> Self {
        [r.lo, r.hi]
    }
}

const DEFAULT_AB: CoefRange = CoefRange::new(0.5, 2.0);
const DEFAULT_C: CoefRange = CoefRange::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolarRanges {
    pub a: CoefRange,
    pub b: CoefRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindRanges {
    pub a: CoefRange,
    pub c: CoefRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerRanges {
    pub a: CoefRange,
    pub b: CoefRange,
    pub c: CoefRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefRanges {
    pub solar: SolarRanges,
    pub wind: WindRanges,
    pub consumer: ConsumerRanges,
}

impl CoefRanges {
    /// Every coefficient pinned to `v` (the wind and consumer constants too).
    pub fn uniform_point(v: f64) -> Self {
        let p = CoefRange::point(v);
        Self {
            solar: SolarRanges { a: p, b: p },
            wind: WindRanges { a: p, c: p },
            consumer: ConsumerRanges { a: p, b: p, c: p },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solar.a.validate("solar a")?;
        self.solar.b.validate("solar b")?;
        self.wind.a.validate("wind a")?;
        self.wind.c.validate("wind c")?;
        self.consumer.a.validate("consumer a")?;
        self.consumer.b.validate("consumer b")?;
        self.consumer.c.validate("consumer c")?;
        if self.consumer.a.lo <= 0.0 {
            return Err(Error::Config(format!(
                "consumer a range [{}, {}] admits a = 0, which leaves the consumer cost derivative \
                 vanishing at the origin; use a strictly positive lower bound",
                self.consumer.a.lo, self.consumer.a.hi
            )));
        }
        Ok(())
    }
}

impl Default for CoefRanges {
    fn default() -> Self {
        Self {
            solar: SolarRanges {
                a: DEFAULT_AB,
                b: DEFAULT_AB,
            },
            wind: WindRanges {
                a: DEFAULT_AB,
                c: DEFAULT_C,
            },
            consumer: ConsumerRanges {
                a: DEFAULT_AB,
                b: DEFAULT_AB,
                c: DEFAULT_C,
            },
        }
    }
}

/// Explicit per-agent coefficients, one `(a, b, c)` triple per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitCosts {
    pub solar: Vec<Coefficients>,
    pub wind: Vec<Coefficients>,
    pub consumer: Vec<Coefficients>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 100 solar, 80 wind, 160 consumers; capacities 50 and 60.
    Paper,
    /// Three agents per population, short horizon.
    Tiny,
    /// Same sizes as `paper`, with every coefficient pinned to 1.
    Symmetric,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Paper, Preset::Tiny, Preset::Symmetric];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Tiny => "tiny",
            Preset::Symmetric => "symmetric",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!(
                    "unknown preset `{s}`; available presets: {}",
                    names.join(", ")
                ))
            })
    }
}

impl CommunityConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self {
                seed: 1,
                horizon: DEFAULT_HORIZON,
                record_every: 1,
                populations: Populations {
                    solar: 100,
                    wind: 80,
                    consumers: 160,
                },
                capacity: Capacities {
                    solar: 50.0,
                    wind: 60.0,
                },
                gains: Gains::default(),
                theta: ThetaSettings::default(),
                coefficients: CoefRanges::default(),
                explicit: None,
            },
            Preset::Tiny => Self {
                horizon: 2_000,
                populations: Populations {
                    solar: 3,
                    wind: 3,
                    consumers: 3,
                },
                capacity: Capacities {
                    solar: 1.5,
                    wind: 1.5,
                },
                ..Self::preset(Preset::Paper)
            },
            Preset::Symmetric => Self {
                coefficients: CoefRanges::uniform_point(1.0),
                ..Self::preset(Preset::Paper)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Populations {
            solar: n,
            wind: m,
            consumers: u,
        } = self.populations;
        if n == 0 || m == 0 || u == 0 {
            return Err(Error::Config(format!(
                "population sizes must be positive (solar {n}, wind {m}, consumers {u})"
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1 step".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        let cap = self.capacity;
        for (name, c, size) in [("solar", cap.solar, n), ("wind", cap.wind, m)] {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!(
                    "{name} capacity must be positive, got {c}"
                )));
            }
            if c > size as f64 {
                return Err(Error::Config(format!(
                    "{name} capacity {c} exceeds the {name} population size {size}"
                )));
            }
        }
        if cap.consumer() > u as f64 {
            return Err(Error::Config(format!(
                "consumer target {} (solar + wind capacity) exceeds the consumer population size {u}",
                cap.consumer()
            )));
        }
        let g = self.gains;
        for (name, gain) in [
            ("solar", g.solar),
            ("wind", g.wind),
            ("consumer", g.consumer),
        ] {
            if !(0.0..1.0).contains(&gain) {
                return Err(Error::Config(format!(
                    "{name} gain must lie in [0, 1), got {gain}"
                )));
            }
        }
        let t = self.theta;
        if !(t.min.is_finite() && t.max.is_finite() && 0.0 < t.min && t.min < t.max) {
            return Err(Error::Config(format!(
                "theta bounds must satisfy 0 < min < max, got [{}, {}]",
                t.min, t.max
            )));
        }
        if !(t.min..=t.max).contains(&t.init) {
            return Err(Error::Config(format!(
                "initial theta {} lies outside [{}, {}]",
                t.init, t.min, t.max
            )));
        }
        self.coefficients.validate()?;
        if let Some(explicit) = &self.explicit {
            for (name, list, size) in [
                ("solar", &explicit.solar, n),
                ("wind", &explicit.wind, m),
                ("consumer", &explicit.consumer, u),
            ] {
                if list.len() != size {
                    return Err(Error::Config(format!(
                        "explicit {name} coefficient list has {} entries, population has {size}",
                        list.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Seeds are `u64`, TOML integers are `i64`. Seeds above `i64::MAX` are
/// written as decimal strings.
mod seed_repr {
    use super::*;

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
        use serde::de::Error as _;
        match Repr::deserialize(d)? {
            Repr::Int(v) => {
                u64::try_from(v).map_err(|_| D::Error::custom("seed must be nonnegative"))
            }
            Repr::Text(t) => t.parse().map_err(D::Error::custom),
        }
    }
}
