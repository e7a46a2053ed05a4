use std::path::Path;

use anyhow::{bail, Context};
use lurye_core::analysis::{Channel, LpExponent, SearchForm, SearchObjective, Table1Variant};
use lurye_core::lti::{Domain, RationalTransferFunction, StateSpaceRealization};
use lurye_core::multipliers::Multiplier;
use lurye_core::sim::{LyapunovOptions, Nonlinearity, PowerMode, SignalSpec, DEFAULT_RK4_STEP};
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Everything a subcommand may read. Unused sections are ignored by the
/// commands that do not need them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub plant: Plant,
    #[serde(default)]
    pub multiplier: Option<Multiplier>,
    /// Slope bound; absent means the nonlinearity's own bound, or infinity.
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub channel: Option<Channel>,
    #[serde(default)]
    pub nonlinearity: Option<Nonlinearity>,
    #[serde(default)]
    pub r1: SignalSpec,
    #[serde(default)]
    pub r2: SignalSpec,
    #[serde(default)]
    pub x0: Vec<f64>,
    #[serde(default)]
    pub grid_density: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub table1_variant: Table1Variant,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub phase: PhaseConfig,
    #[serde(default)]
    pub search: Option<SearchConfig>,
    #[serde(default)]
    pub lyapunov: Option<LyapunovOptions>,
    #[serde(default)]
    pub power: Option<PowerMode>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

/// The plant as a transfer function (for frequency-domain work), a
/// realization (for simulation), or both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plant {
    #[serde(default)]
    pub transfer_function: Option<RationalTransferFunction>,
    #[serde(default)]
    pub state_space: Option<StateSpaceRealization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Recorded steps.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Unrecorded leading steps; defaults to 1000 samples (discrete) or
    /// 50 time units (continuous).
    #[serde(default)]
    pub discard: Option<usize>,
    /// RK4 step.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    /// Excitation period for the periodicity verdict.
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default = "default_multiple")]
    pub max_multiple: usize,
    /// Tail length (a power of two) for the spectrum written with traces.
    #[serde(default)]
    pub spectrum: Option<usize>,
}

fn default_horizon() -> usize {
    10_000
}

fn default_step() -> f64 {
    DEFAULT_RK4_STEP
}

fn one() -> usize {
    1
}

fn default_multiple() -> usize {
    6
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon: default_horizon(),
            discard: None,
            step: default_step(),
            record_every: 1,
            period: None,
            max_multiple: default_multiple(),
            spectrum: None,
        }
    }
}

impl SimulationConfig {
    pub fn discard_for(&self, domain: Domain) -> usize {
        self.discard.unwrap_or(match domain {
            Domain::Discrete => 1000,
            Domain::Continuous => (50.0 / self.step).round() as usize,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default = "default_ab")]
    pub a_max: u64,
    #[serde(default = "default_ab")]
    pub b_max: u64,
    /// Harmonic shifts for the phase-gap test.
    #[serde(default = "default_shifts")]
    pub shifts: Vec<i64>,
    #[serde(default)]
    pub lp: Option<LpConfig>,
}

fn default_ab() -> u64 {
    10
}

fn default_shifts() -> Vec<i64> {
    vec![1, 2, 3]
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig { period: None, a_max: 10, b_max: 10, shifts: default_shifts(), lp: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpConfig {
    pub beta: usize,
    pub p: Vec<u8>,
    pub n: Vec<u64>,
    #[serde(default)]
    pub exponent: LpExponent,
    #[serde(default)]
    pub lags: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub form: SearchForm,
    #[serde(default = "margin_objective")]
    pub objective: SearchObjective,
    #[serde(default = "default_search_step")]
    pub step: f64,
    #[serde(default = "default_coeff_max")]
    pub coeff_max: f64,
}

fn margin_objective() -> SearchObjective {
    SearchObjective::Margin
}

fn default_search_step() -> f64 {
    0.01
}

fn default_coeff_max() -> f64 {
    0.99
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Plant gain.
    Gain,
    /// Coefficient of one multiplier tap.
    Coefficient,
    /// Scale applied to every tap offset and to an Altshuller period.
    Theta,
    /// Frequency; reports the pointwise quantities.
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Tap index used by the coefficient sweep.
    #[serde(default)]
    pub tap: usize,
}

impl SweepConfig {
    /// Inclusive range `start, start + step, ..., <= stop`, with values
    /// rounded to kill accumulated drift.
    pub fn values(&self) -> Result<Vec<f64>, UsageError> {
        if self.step.is_nan()
            || self.step <= 0.0
            || !self.start.is_finite()
            || !self.stop.is_finite()
            || self.stop < self.start
        {
            return Err(UsageError(format!(
                "empty sweep range: start {} stop {} step {}",
                self.start, self.stop, self.step
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| round12(self.start + i as f64 * self.step)).collect())
    }
}

fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Config> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            anyhow::Error::new(UsageError(format!(
                "line {} column {}: field `{}`: {}",
                inner.line(),
                inner.column(),
                path,
                inner
            )))
        })
    }

    pub fn transfer_function(&self) -> anyhow::Result<&RationalTransferFunction> {
        match &self.plant.transfer_function {
            Some(g) => Ok(g),
            None => bail!(UsageError("config needs plant.transfer_function".into())),
        }
    }

    /// Realization for simulation: the given state space, else a
    /// realization of the transfer function.
    pub fn realization(&self) -> anyhow::Result<StateSpaceRealization> {
        if let Some(ss) = &self.plant.state_space {
            return Ok(ss.clone());
        }
        let g = self.transfer_function()?;
        Ok(StateSpaceRealization::from_transfer_function(g)?)
    }

    pub fn domain(&self) -> anyhow::Result<Domain> {
        if let Some(g) = &self.plant.transfer_function {
            return Ok(g.domain());
        }
        match &self.plant.state_space {
            Some(ss) => Ok(ss.domain),
            None => bail!(UsageError("config has no plant".into())),
        }
    }

    pub fn nonlinearity(&self) -> anyhow::Result<&Nonlinearity> {
        match &self.nonlinearity {
            Some(n) => Ok(n),
            None => bail!(UsageError("config needs a nonlinearity".into())),
        }
    }

    /// Explicit `k`, else the nonlinearity's slope bound, else infinity.
    pub fn slope(&self) -> f64 {
        self.k.or_else(|| self.nonlinearity.as_ref().map(|n| n.slope_bound())).unwrap_or(f64::INFINITY)
    }

    pub fn multiplier(&self) -> anyhow::Result<Multiplier> {
        Ok(match &self.multiplier {
            Some(m) => m.clone(),
            None => Multiplier::identity(self.domain()?),
        })
    }

    pub fn channel(&self) -> Channel {
        self.channel.unwrap_or_else(Channel::r2_y2)
    }

    /// Replace the seed of every noise source.
    pub fn reseed(&mut self, seed: u64) {
        fn walk(s: &mut SignalSpec, seed: u64) {
            match s {
                SignalSpec::Noise { seed: s, .. } => *s = seed,
                SignalSpec::Sum { terms } => terms.iter_mut().for_each(|t| walk(t, seed)),
                _ => {}
            }
        }
        self.seed = Some(seed);
        walk(&mut self.r1, seed);
        walk(&mut self.r2, seed.wrapping_add(1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = Config::parse(
            r#"{"plant": {"transfer_function": {"domain": "z", "num": [2, 0.92], "den": [1, -0.5, 0], "g": 0.6}},
                "k": 1}"#,
        )
        .unwrap();
        assert_eq!(c.slope(), 1.0);
        assert_eq!(c.domain().unwrap(), Domain::Discrete);
        assert_eq!(c.channel(), Channel::r2_y2());
    }

    #[test]
    fn unknown_field_reports_location() {
        let e = Config::parse("{\n  \"plnt\": {}\n}").unwrap_err();
        let msg = format!("{e:#}");
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("plnt"), "{msg}");
        assert!(e.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn sweep_range() {
        let s = SweepConfig { parameter: SweepParameter::Theta, start: 1.0, stop: 1.08, step: 0.01, tap: 0 };
        let v = s.values().unwrap();
        assert_eq!(v.len(), 9);
        assert_eq!(v[8], 1.08);
        let empty = SweepConfig { stop: 0.5, ..s };
        assert!(empty.values().is_err());
    }

    #[test]
    fn reseed_reaches_nested_noise() {
        let mut c = Config {
            r2: SignalSpec::Sum {
                terms: vec![SignalSpec::Constant { value: 1.0 }, SignalSpec::Noise { seed: 0, power: 1.0, hold: 1.0 }],
            },
            ..Config::default()
        };
        c.reseed(9);
        let SignalSpec::Sum { terms } = &c.r2 else { unreachable!() };
        assert_eq!(terms[1], SignalSpec::Noise { seed: 10, power: 1.0, hold: 1.0 });
    }
}
