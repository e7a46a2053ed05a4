use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exogenous signal, evaluated at time `t` (the sample index for discrete
/// systems).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum SignalSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Step {
        value: f64,
        #[serde(default)]
        at: f64,
    },
    /// `amp * sin(freq * t + phase)`.
    Sinusoid {
        amp: f64,
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `samples[floor(t / hold) mod len]`.
    PeriodicTable {
        samples: Vec<f64>,
        #[serde(default = "one")]
        hold: f64,
    },
    Sum {
        terms: Vec<SignalSpec>,
    },
    /// Uniform noise with mean square `power`, held constant over `hold`.
    /// Each hold interval draws from its own position in a seeded ChaCha8
    /// stream, so values do not depend on evaluation order.
    Noise {
        seed: u64,
        power: f64,
        #[serde(default = "one")]
        hold: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SignalSpec::PeriodicTable { samples, hold } => {
                if samples.is_empty() || !(*hold > 0.0) {
                    return Err(Error::InvalidArgument("periodic table needs at least one sample and hold > 0".into()));
                }
            }
            SignalSpec::Noise { power, hold, .. } => {
                if !(*power >= 0.0) || !(*hold > 0.0) {
                    return Err(Error::InvalidArgument("noise needs power >= 0, hold > 0".into()));
                }
            }
            SignalSpec::Sum { terms } => {
                for t in terms {
                    t.validate()?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SignalSpec::Zero => 0.0,
            SignalSpec::Constant { value } => *value,
            SignalSpec::Step { value, at } => {
                if t >= *at {
                    *value
                } else {
                    0.0
                }
            }
            SignalSpec::Sinusoid { amp, freq, phase } => amp * (freq * t + phase).sin(),
            SignalSpec::PeriodicTable { samples, hold } => {
                let k = (t / hold).floor() as i64;
                samples[k.rem_euclid(samples.len() as i64) as usize]
            }
            SignalSpec::Sum { terms } => terms.iter().map(|s| s.eval(t)).sum(),
            SignalSpec::Noise { seed, power, hold } => {
                let k = (t / hold).floor() as i64;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                // Two 32-bit words per draw; negative indices map to a
                // disjoint half of the stream.
                let slot = if k >= 0 { 2 * k as u128 } else { (1u128 << 64) + 2 * (-k) as u128 };
                rng.set_word_pos(2 * slot);
                let a = (3.0 * power).sqrt();
                rng.random_range(-1.0..1.0) * a
            }
        }
    }

    /// Samples `eval(start + i * step)` for `i in 0..n`.
    pub fn sample(&self, start: f64, step: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.eval(start + i as f64 * step)).collect()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SignalSpec::Zero)
    }
}
