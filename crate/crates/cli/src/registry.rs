//! Named experiments with their expected values and tolerances.

use std::f64::consts::PI;

use anyhow::Context;
use lurye_core::analysis::{
    all_period_limit_test, gain_bound_with, lp_phase_limit_test, plant_grid, rational_threshold_gain,
    search_multiplier, suitability_margin, BoundOptions, Channel, CriticalGain, LpOptions, PhaseLimitWitness,
    SearchForm, SearchObjective, SearchSpec, Table1Variant,
};
use lurye_core::lti::grid::FrequencyGrid;
use lurye_core::lti::{Domain, RationalTransferFunction, StateSpaceRealization};
use lurye_core::multipliers::{Multiplier, MultiplierClass, TapMultiplier};
use lurye_core::sim::{
    decompose_periodic, detect_period, lyapunov_exponent, power_seminorm, simulate_discrete_with, spectrum,
    LuryeSystem, LyapunovOptions, Nonlinearity, PeriodOptions, PeriodVerdict, PowerMode, SignalSpec, SimOptions,
};
use nalgebra::{DMatrix, DVector, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::hunt::{antisymmetry_residual, hunt, x0_grid, HuntOptions, HuntResult};
use crate::report::{num, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Derived,
    Trivial,
}

/// Acceptance rule for one measured quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Expected {
    Near {
        value: f64,
        tol: f64,
    },
    /// Equal after rounding to `places` decimals.
    Decimals {
        value: f64,
        places: i32,
    },
    /// Equal after rounding to `digits` significant figures.
    SigFigs {
        value: f64,
        digits: i32,
    },
    Below {
        limit: f64,
    },
    AtLeast {
        limit: f64,
    },
    Holds,
}

fn round_to(v: f64, places: i32) -> f64 {
    let s = 10f64.powi(places);
    (v * s).round() / s
}

fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let mag = v.abs().log10().floor() as i32;
    round_to(v, digits - 1 - mag)
}

/// Shortest readable form of a tolerance or reference value.
fn short(v: f64) -> String {
    let r = round_sig(v, 12);
    if r != 0.0 && (r.abs() < 1e-3 || r.abs() >= 1e6) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

impl Expected {
    pub fn accepts(&self, m: Measured) -> bool {
        match (*self, m) {
            (Expected::Holds, Measured::Flag(b)) => b,
            (Expected::Holds, Measured::Value(_)) => false,
            (_, Measured::Flag(_)) => false,
            (Expected::Near { value, tol }, Measured::Value(x)) => (x - value).abs() <= tol,
            (Expected::Decimals { value, places }, Measured::Value(x)) => {
                (round_to(x, places) - value).abs() < 0.5 * 10f64.powi(-places - 3)
            }
            (Expected::SigFigs { value, digits }, Measured::Value(x)) => {
                let r = round_sig(x, digits);
                (r - value).abs() <= 1e-9 * value.abs().max(f64::MIN_POSITIVE)
            }
            (Expected::Below { limit }, Measured::Value(x)) => x < limit,
            (Expected::AtLeast { limit }, Measured::Value(x)) => x >= limit,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Expected::Near { value, tol } => format!("{} ± {}", short(value), short(tol)),
            Expected::Decimals { value, places } => format!("{value:.p$} ({places} dp)", p = places as usize),
            Expected::SigFigs { value, digits } => format!("{} ({digits} sf)", short(value)),
            Expected::Below { limit } => format!("< {}", short(limit)),
            Expected::AtLeast { limit } => format!(">= {}", short(limit)),
            Expected::Holds => "holds".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Measured {
    Value(f64),
    Flag(bool),
}

impl Measured {
    fn describe(&self) -> String {
        match *self {
            Measured::Value(v) => num(v),
            Measured::Flag(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub expected: Expected,
    pub measured: Measured,
    pub provenance: Provenance,
    pub passed: bool,
}

impl Check {
    pub fn value(quantity: impl Into<String>, expected: Expected, v: f64, provenance: Provenance) -> Self {
        let measured = Measured::Value(v);
        Check { quantity: quantity.into(), expected, measured, provenance, passed: expected.accepts(measured) }
    }

    pub fn flag(quantity: impl Into<String>, b: bool, provenance: Provenance) -> Self {
        let measured = Measured::Flag(b);
        Check { quantity: quantity.into(), expected: Expected::Holds, measured, provenance, passed: b }
    }

    /// `PASS quantity: measured (expected ...) [provenance]`.
    pub fn line(&self) -> String {
        format!(
            "{} {}: {} (expected {}) [{}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.quantity,
            self.measured.describe(),
            self.expected.describe(),
            serde_json::to_value(self.provenance).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        )
    }
}

/// Knobs shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunContext {
    pub seed: u64,
    pub grid_density: Option<usize>,
    pub variant: Table1Variant,
}

impl Default for RunContext {
    fn default() -> Self {
        RunContext { seed: 2024, grid_density: None, variant: Table1Variant::Printed }
    }
}

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    pub run: fn(&RunContext) -> anyhow::Result<Vec<Check>>,
}

pub const REGISTRY: &[Experiment] = &[
    Experiment {
        name: "circle-threshold-fromion",
        summary: "circle-criterion critical gain of the third-order resonant plant",
        run: circle_threshold,
    },
    Experiment {
        name: "altshuller-threshold-fromion",
        summary: "phase-limitation thresholds and the suitable Altshuller band at g = 50",
        run: altshuller_threshold,
    },
    Experiment {
        name: "fromion-attractors",
        summary: "two period-pi attractors under saturation, one never saturating",
        run: fromion_attractors,
    },
    Experiment {
        name: "fromion-subharmonic",
        summary: "period-3pi responses under a deadzone and their symmetry",
        run: fromion_subharmonic,
    },
    Experiment { name: "table2-bounds", summary: "gain bounds of the nine tabulated multipliers", run: table2_bounds },
    Experiment {
        name: "g07-steady-state",
        summary: "period-5 steady state of the g = 0.7 deadzone loop",
        run: g07_steady_state,
    },
    Experiment { name: "g09-chaos", summary: "chaotic response of the g = 0.9 deadzone loop", run: g09_chaos },
    Experiment {
        name: "g07-attractor-uniqueness",
        summary: "lattice certificate and a unique period-5 attractor at g = 0.7",
        run: g07_uniqueness,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

pub fn checks_report(name: &str, checks: &[Check]) -> Report {
    let mut t = Table::new(["verdict", "quantity", "measured", "expected", "provenance"]);
    for c in checks {
        t.push([
            if c.passed { "PASS" } else { "FAIL" }.to_string(),
            c.quantity.clone(),
            c.measured.describe(),
            c.expected.describe(),
            serde_json::to_value(c.provenance).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        ]);
    }
    let passed = checks.iter().all(|c| c.passed);
    Report::new(format!("reproduce {name}"), passed)
        .field("checks", checks.len())
        .field("failed", checks.iter().filter(|c| !c.passed).count())
        .with_table(t)
}

// ---------------------------------------------------------------- plants

/// `g (2z + 0.92) / (z (z - 0.5))`.
pub fn table2_plant(g: f64) -> RationalTransferFunction {
    RationalTransferFunction::discrete(&[2.0, 0.92], &[1.0, -0.5, 0.0], g).expect("fixed plant")
}

/// Realization of [`table2_plant`] with state `(x1, x1 delayed)`.
pub fn table2_realization(g: f64) -> StateSpaceRealization {
    StateSpaceRealization::new(
        Domain::Discrete,
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 1.0, 0.0]),
        DVector::from_vec(vec![2.0 * g, 0.0]),
        RowDVector::from_vec(vec![1.0, 0.46]),
        0.0,
    )
    .expect("fixed realization")
}

pub const G07_TABLE: [f64; 5] = [1.0, 0.6, -0.6, -1.0, 0.0];

/// Deadzone loop driven by the 5-periodic table on `r2`.
pub fn deadzone_loop(g: f64) -> LuryeSystem {
    LuryeSystem::new(
        table2_realization(g),
        Nonlinearity::Deadzone { width: 0.2 },
        SignalSpec::Zero,
        SignalSpec::PeriodicTable { samples: G07_TABLE.to_vec(), hold: 1.0 },
    )
}

/// `g / ((s^2 + 0.1 s + 1)(s + 100))`.
pub fn fromion(g: f64) -> RationalTransferFunction {
    RationalTransferFunction::continuous(&[1.0], &[1.0, 100.1, 11.0, 100.0], g).expect("fixed plant")
}

pub const FROMION_GAIN: f64 = 909.0;

/// Fromion loop at `g = 909` with `r2 = sin 2t`.
pub fn fromion_loop(nl: Nonlinearity) -> LuryeSystem {
    let ss = StateSpaceRealization::from_transfer_function(&fromion(FROMION_GAIN)).expect("proper plant");
    LuryeSystem::new(ss, nl, SignalSpec::Zero, SignalSpec::Sinusoid { amp: 1.0, freq: 2.0, phase: 0.0 })
}

fn fromion_grid(ctx: &RunContext, g: &RationalTransferFunction) -> FrequencyGrid {
    plant_grid(g, Some(ctx.grid_density.unwrap_or(400)))
}

fn discrete_grid(ctx: &RunContext) -> FrequencyGrid {
    FrequencyGrid::default_for(Domain::Discrete, ctx.grid_density)
}

// ------------------------------------------------------------ table II

/// `(g, causal?, coefficient, tabulated bound)`.
pub const TABLE2: [(f64, bool, f64, f64); 9] = [
    (0.6, true, 0.68, 3.76),
    (0.7, true, 0.91, 5.73),
    (0.8, true, 0.99, 10.96),
    (0.9, true, 0.99, 121.28),
    (0.6, false, 0.57, 3.39),
    (0.7, false, 0.64, 4.69),
    (0.8, false, 0.72, 7.07),
    (0.9, false, 0.79, 12.42),
    (1.0, false, 0.87, 31.74),
];

/// `1 - c z^-1` (causal) or `1 + c z` (odd class).
pub fn table2_multiplier(causal: bool, c: f64) -> TapMultiplier {
    if causal {
        TapMultiplier::discrete_tap(1, c, MultiplierClass::Ozf).expect("valid tap")
    } else {
        TapMultiplier::discrete_tap(-1, -c, MultiplierClass::OzfOdd).expect("valid tap")
    }
}

pub fn table2_bounds(ctx: &RunContext) -> anyhow::Result<Vec<Check>> {
    let grid = discrete_grid(ctx);
    let opts = BoundOptions { variant: ctx.variant, refine: true };
    let mut out = Vec::new();
    for (g, causal, c, bound) in TABLE2 {
        let m = Multiplier::from(table2_multiplier(causal, c));
        let r = gain_bound_with(&m, &table2_plant(g), 1.0, Channel::r2_y2(), &grid, opts)?;
        out.push(Check::value(
            format!("g={g} {} bound", m.describe()),
            Expected::Near { value: bound, tol: 0.01 },
            r.bound,
            Provenance::Paper,
        ));
    }
    let id = Multiplier::identity(Domain::Discrete);
    out.push(Check::flag(
        "g=0.6 circle criterion holds",
        suitability_margin(&id, &table2_plant(0.6), 1.0, &grid)?.suitable,
        Provenance::Paper,
    ));
    out.push(Check::flag(
        "g=1.0 circle criterion fails",
        !suitability_margin(&id, &table2_plant(1.0), 1.0, &grid)?.suitable,
        Provenance::Paper,
    ));
    // Searching the same one-tap family cannot do worse than the table.
    for (g, causal, _, bound) in TABLE2 {
        let form = if causal {
            SearchForm::OneTapCausal { lag: 1.0 }
        } else {
            SearchForm::OneTapAnticausal { lag: 1.0, odd: true }
        };
        let spec =
            SearchSpec::new(form, SearchObjective::Bound { channel: Channel::r2_y2(), variant: ctx.variant }, 1.0);
        let r = search_multiplier(&table2_plant(g), &grid, &spec)?;
        let best = r.bound.map_or(f64::INFINITY, |b| b.bound);
        out.push(Check::value(
            format!("g={g} {} search best bound", if causal { "causal" } else { "odd" }),
            Expected::Below { limit: bound + 0.01 },
            best,
            Provenance::Derived,
        ));
    }
    Ok(out)
}

// ------------------------------------------------------ continuous plant

pub fn circle_threshold(ctx: &RunContext) -> anyhow::Result<Vec<Check>> {
    let g = fromion(1.0);
    let c = CriticalGain::circle(&g, 1.0, &fromion_grid(ctx, &g), 1e-5)?;
    Ok(vec![Check::value(
        "circle-criterion critical gain",
        Expected::Near { value: 20.77, tol: 0.01 },
        c.gain.unwrap_or(f64::INFINITY),
        Provenance::Paper,
    )])
}

/// Phase-limitation thresholds of the resonant plant with `T = pi`.
pub fn phase_thresholds(ctx: &RunContext) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let (gstar, wit) = rational_threshold_gain(&fromion(1.0), 1.0, PI, 10, 10, 20.0, 200.0, 1e-5)?;
    out.push(Check::value(
        "rational phase-limit threshold gain",
        Expected::Near { value: 73.37, tol: 0.01 },
        gstar,
        Provenance::Paper,
    ));
    let w = wit.iter().find_map(|w| match w {
        PhaseLimitWitness::Rational { frequency, .. } => Some(*frequency),
        _ => None,
    });
    out.push(Check::value(
        "frequency touching the limit",
        Expected::Near { value: 1.2, tol: 1e-9 },
        w.unwrap_or(f64::NAN),
        Provenance::Paper,
    ));

    let g50 = fromion(50.0);
    let ap = all_period_limit_test(&g50, 1.0, &fromion_grid(ctx, &g50))?;
    out.push(Check::value(
        "g=50 phase crossing of pi/2 [rad/s]",
        Expected::Near { value: 1.01, tol: 0.005 },
        ap.crossing_frequency.unwrap_or(f64::NAN),
        Provenance::Paper,
    ));

    let lp = lp_phase_limit_test(&fromion(80.0), 1.0, PI, 5, &[1, 1, 1, 1], &[1, 1, 1, 1], &LpOptions::default())?;
    out.push(Check::flag("g=80 exclusion LP feasible (beta=5)", lp.is_some(), Provenance::Paper));
    Ok(out)
}

/// `1 - 0.82 e^{-2 theta j w pi}` is suitable for `1 + G` at `g = 50` for
/// every `theta` in `1.00, 1.01, ..., 1.08`.
pub fn theta_band(ctx: &RunContext) -> anyhow::Result<Vec<Check>> {
    let g = fromion(50.0);
    let grid = fromion_grid(ctx, &g);
    let mut out = Vec::new();
    for i in 0..=8 {
        let theta = 1.0 + i as f64 / 100.0;
        let m = theta_multiplier(theta)?;
        let r = suitability_margin(&m.into(), &g, 1.0, &grid)?;
        out.push(Check::flag(
            format!("theta={theta:.2} suitable (margin {})", num(r.margin)),
            r.suitable,
            Provenance::Paper,
        ));
    }
    Ok(out)
}

pub fn theta_multiplier(theta: f64) -> lurye_core::Result<TapMultiplier> {
    TapMultiplier::new(Domain::Continuous, vec![(2.0 * theta * PI, 0.82)], MultiplierClass::Altshuller(theta * PI))
}

pub fn altshuller_threshold(ctx: &RunContext) -> anyhow::Result<Vec<Check>> {
    let mut out = phase_thresholds(ctx)?;
    out.extend(theta_band(ctx)?);
    Ok(out)
}

pub const FROMION_SCALES: [f64; 4] = [0.0, 1e-3, 1e-2, 1e-1];

pub fn fromion_hunt_options() -> HuntOptions {
    HuntOptions { period: PI, steps_per_period: 1000, max_periods: 3000, max_multiple: 6, tol: 1e-8, period_tol: 1e-6 }
}

pub fn fromion_hunt(nl: Nonlinearity) -> anyhow::Result<HuntResult> {
    let base = fromion_loop(nl);
    let x0s = x0_grid(base.plant.a.nrows(), &FROMION_SCALES);
    Ok(hunt(&base, &x0s, &fromion_hunt_options())?)
}

pub fn fromion_attractors(_: &RunContext) -> anyhow::Result<Vec<Check>> {
    let r = fromion_hunt(Nonlinearity::Saturation { limit: 1.0 })?;
    let pi_periodic: Vec<_> = r.attractors.iter().filter(|a| a.multiple == 1).collect();
    let mut out = vec![
        Check::value(
            "distinct period-pi attractors (saturation)",
            Expected::AtLeast { limit: 2.0 },
            pi_periodic.len() as f64,
            Provenance::Paper,
        ),
        Check::flag(
            "one attractor never reaches the saturation",
            pi_periodic.iter().any(|a| a.input_peak < 1.0),
            Provenance::Paper,
        ),
        Check::flag(
            "another attractor meets the saturation",
            pi_periodic.iter().any(|a| a.input_peak > 1.0),
            Provenance::Paper,
        ),
    ];
    out.push(Check::value(
        "initial states left unsettled",
        Expected::Below { limit: 1.0 },
        r.unsettled.len() as f64,
        Provenance::Derived,
    ));
    Ok(out)
}

/// Smallest residual of `y''(t) = -y'(t - shift)` over ordered pairs of
/// distinct orbits with the given multiple; `shift` in units of the
/// excitation period.
pub fn subharmonic_relation(r: &HuntResult, multiple: usize, shift: f64, steps_per_period: usize) -> Option<f64> {
    let orbits: Vec<_> = r.attractors.iter().filter(|a| a.multiple == multiple).collect();
    let s = (shift * steps_per_period as f64).round() as usize;
    let mut best: Option<f64> = None;
    for (i, a) in orbits.iter().enumerate() {
        for (j, b) in orbits.iter().enumerate() {
            if i != j {
                let v = antisymmetry_residual(&a.y2, &b.y2, s);
                best = Some(best.map_or(v, |x: f64| x.min(v)));
            }
        }
    }
    best
}

pub fn fromion_subharmonic(_: &RunContext) -> anyhow::Result<Vec<Check>> {
    let r = fromion_hunt(Nonlinearity::Deadzone { width: 0.5 })?;
    let spp = fromion_hunt_options().steps_per_period;
    let sub = r.attractors.iter().filter(|a| a.multiple == 3).count();
    Ok(vec![
        Check::value(
            "distinct period-3pi attractors (deadzone)",
            Expected::AtLeast { limit: 2.0 },
            sub as f64,
            Provenance::Paper,
        ),
        Check::value(
            "max |y''(t) + y'(t - pi)| / amplitude",
            Expected::Below { limit: 1e-2 },
            subharmonic_relation(&r, 3, 1.0, spp).unwrap_or(f64::NAN),
            Provenance::Paper,
        ),
        Check::value(
            "max |y''(t) + y'(t - pi/2)| / amplitude",
            Expected::Below { limit: 1e-2 },
            subharmonic_relation(&r, 3, 0.5, spp).unwrap_or(f64::NAN),
            Provenance::Derived,
        ),
    ])
}

// ------------------------------------------------------- discrete loops

pub const G07_CYCLE: [f64; 5] = [0.2282, -0.2861, -0.6895, 0.0, 0.7464];

pub fn g07_steady_state(_: &RunContext) -> anyhow::Result<Vec<Check>> {
    let sys = deadzone_loop(0.7);
    let run = simulate_discrete_with(&sys, 1000, &SimOptions { discard: 1000, ..SimOptions::default() })?;
    let mut out = Vec::new();
    for (i, want) in G07_CYCLE.iter().enumerate() {
        out.push(Check::value(
            format!("y2 cycle sample {i}"),
            Expected::Decimals { value: *want, places: 4 },
            run.y2[i],
            Provenance::Paper,
        ));
    }
    let settled = detect_period(&run.y2, 5.0, &PeriodOptions::discrete(1))? == PeriodVerdict::Periodic { multiple: 1 };
    out.push(Check::flag("settles with period 5", settled, Provenance::Paper));
    let r2: Vec<f64> = run.time.iter().map(|&t| sys.r2.eval(t)).collect();
    let pr = power_seminorm(&r2, PowerMode::PeriodExact { period: 5, tol: 1e-9 })?;
    let py = power_seminorm(&run.y2, PowerMode::PeriodExact { period: 5, tol: 1e-9 })?;
    out.push(Check::value("||r2||_P", Expected::Decimals { value: 0.7376, places: 4 }, pr, Provenance::Paper));
    out.push(Check::value("||y2||_P", Expected::Decimals { value: 0.4830, places: 4 }, py, Provenance::Paper));
    out.push(Check::value("||y2||_P / ||r2||_P", Expected::Below { limit: 5.73 }, py / pr, Provenance::Paper));
    Ok(out)
}

pub const CHAOS_HORIZON: usize = 1_000_000;
pub const CHAOS_X0: [f64; 2] = [0.0, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosSummary {
    pub lyapunov: f64,
    pub verdict: PeriodVerdict,
    pub periodic_power: f64,
    pub residual_power: f64,
    /// Harmonic index (in units of 1/40) of the dominant bin.
    pub dominant_harmonic: f64,
    /// Largest line on the 1/40 comb off the 1/5 comb, relative to the peak.
    pub off_forcing_line: f64,
    /// Ten largest local maxima all on the 1/40 comb.
    pub peaks_on_comb: bool,
    /// Median residual bin relative to the peak of the full spectrum.
    pub floor: f64,
}

pub fn g09_summary() -> anyhow::Result<ChaosSummary> {
    let sys = deadzone_loop(0.9).with_x0(CHAOS_X0.to_vec());
    let lyapunov = lyapunov_exponent(&sys, &LyapunovOptions { steps: CHAOS_HORIZON, d0: 1e-8, discard: 1000 })?;
    let run = simulate_discrete_with(&sys, CHAOS_HORIZON, &SimOptions { discard: 1000, ..SimOptions::default() })?;
    let verdict = detect_period(&run.y2, 5.0, &PeriodOptions::discrete(40))?;
    let dec = decompose_periodic(&run.y2, 40)?;

    let n = 1usize << 16;
    let spec = spectrum(&run.y2, n)?;
    let half = &spec.magnitudes[..n / 2];
    let bins_per_harmonic = n as f64 / 40.0;
    let harmonic = |k: usize| k as f64 / bins_per_harmonic;
    let on_comb = |k: usize| (harmonic(k) - harmonic(k).round()).abs() * bins_per_harmonic <= 2.0;
    let k_peak = (1..half.len()).max_by(|a, b| half[*a].total_cmp(&half[*b])).unwrap_or(1);
    let peak = half[k_peak];
    let mut maxima: Vec<usize> =
        (2..half.len() - 1).filter(|&k| half[k] > half[k - 1] && half[k] >= half[k + 1]).collect();
    maxima.sort_by(|a, b| half[*b].total_cmp(&half[*a]));
    let peaks_on_comb = maxima.iter().take(10).all(|&k| on_comb(k));
    let off_forcing_line = maxima
        .iter()
        .filter(|&&k| on_comb(k) && (harmonic(k).round() as i64) % 8 != 0)
        .map(|&k| half[k] / peak)
        .fold(0.0, f64::max);
    let res = spectrum(&dec.residual, n)?;
    let mut floor_bins: Vec<f64> = res.magnitudes[1..n / 2].to_vec();
    floor_bins.sort_by(f64::total_cmp);
    Ok(ChaosSummary {
        lyapunov,
        verdict,
        periodic_power: dec.periodic_power,
        residual_power: dec.residual_power,
        dominant_harmonic: harmonic(k_peak),
        off_forcing_line,
        peaks_on_comb,
        floor: floor_bins[floor_bins.len() / 2] / peak,
    })
}

pub fn g09_chaos(_: &RunContext) -> anyhow::Result<Vec<Check>> {
    let s = g09_summary()?;
    Ok(vec![
        Check::value("Lyapunov exponent", Expected::Near { value: 0.012, tol: 0.003 }, s.lyapunov, Provenance::Paper),
        Check::flag(
            "y2 not periodic (multiples of 5 up to 200)",
            s.verdict == PeriodVerdict::Aperiodic,
            Provenance::Paper,
        ),
        Check::flag("ten largest spectral peaks on the period-40 comb", s.peaks_on_comb, Provenance::Paper),
        Check::value(
            "largest period-40 line off the forcing comb / peak",
            Expected::AtLeast { limit: 1e-2 },
            s.off_forcing_line,
            Provenance::Paper,
        ),
        Check::value("broadband floor / peak", Expected::AtLeast { limit: 1e-7 }, s.floor, Provenance::Paper),
        Check::value("||y_p||_P", Expected::SigFigs { value: 0.41, digits: 2 }, s.periodic_power, Provenance::Paper),
        Check::value("||y_v||_P", Expected::SigFigs { value: 5.1e-4, digits: 2 }, s.residual_power, Provenance::Paper),
    ])
}

/// One cycle of `y2` after `discard` steps, aligned to `t = 0 mod 5`.
pub fn settled_cycle(sys: &LuryeSystem, discard: usize) -> lurye_core::Result<Vec<f64>> {
    let discard = discard.div_ceil(5) * 5;
    Ok(simulate_discrete_with(sys, 5, &SimOptions { discard, ..SimOptions::default() })?.y2)
}

pub fn random_states(seed: u64, count: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..2).map(|_| rng.random_range(-radius..radius)).collect()).collect()
}

pub fn g07_uniqueness(ctx: &RunContext) -> anyhow::Result<Vec<Check>> {
    let grid = discrete_grid(ctx);
    let mut spec = SearchSpec::new(
        SearchForm::AltshullerLattice { period: 5.0, multiples: vec![1, -1, 2, -2] },
        SearchObjective::Margin,
        1.0,
    );
    spec.step = 0.04;
    let cert = search_multiplier(&table2_plant(0.7), &grid, &spec).context("lattice search")?;
    let mut out = vec![Check::flag(
        format!("period-5 lattice multiplier suitable ({})", cert.multiplier.describe()),
        cert.margin > 0.0,
        Provenance::Paper,
    )];
    let sys = deadzone_loop(0.7);
    let reference = settled_cycle(&sys, 5000)?;
    let mut worst: f64 = 0.0;
    for x0 in random_states(ctx.seed, 20, 10.0) {
        let c = settled_cycle(&sys.clone().with_x0(x0), 5000)?;
        worst = worst.max(c.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    out.push(Check::value(
        "max cycle distance over 20 initial states",
        Expected::Below { limit: 1e-8 },
        worst,
        Provenance::Paper,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_rules() {
        assert!(Expected::Decimals { value: 0.7376, places: 4 }.accepts(Measured::Value(0.737564)));
        assert!(!Expected::Decimals { value: 0.7376, places: 4 }.accepts(Measured::Value(0.73766)));
        assert!(Expected::SigFigs { value: 5.1e-4, digits: 2 }.accepts(Measured::Value(5.107e-4)));
        assert!(!Expected::SigFigs { value: 0.41, digits: 2 }.accepts(Measured::Value(0.4151)));
        assert!(!Expected::Holds.accepts(Measured::Value(1.0)));
    }

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<_> = REGISTRY.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
        assert!(find("table2-bounds").is_some());
        assert!(find("nope").is_none());
    }

    #[test]
    fn check_line_format() {
        let c = Check::value("x", Expected::Near { value: 1.0, tol: 0.1 }, 1.05, Provenance::Derived);
        assert_eq!(c.line(), "PASS x: 1.050000 (expected 1 ± 0.1) [derived]");
    }
}
