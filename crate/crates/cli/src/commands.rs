use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use lurye_core::analysis::{
    all_period_limit_test, gain_bound_with, lp_phase_objective, phase_gap_test, plant_grid, rational_phase_limit_test,
    search_multiplier, suitability_margin, BoundOptions, Channel, LpOptions, PhaseLimitWitness, SearchSpec,
    Table1Variant,
};
use lurye_core::lti::grid::FrequencyGrid;
use lurye_core::lti::{Domain, FrequencyResponse, RationalTransferFunction};
use lurye_core::multipliers::{Multiplier, MultiplierClass, TapMultiplier};
use lurye_core::sim::{
    bias_estimate, detect_period, lyapunov_exponent, power_seminorm, simulate_continuous_rk4, simulate_discrete_with,
    spectrum, LuryeSystem, PeriodOptions, PowerMode, SimOptions, SimulationResult,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Config, SweepConfig, SweepParameter};
use crate::registry::{checks_report, find, RunContext, REGISTRY};
use crate::report::{num, Format, Report, Table};
use crate::{exit_for, Exit, UsageError};

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "lurye", version, about = "Multiplier stability certificates and simulation for Lurye loops")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the report, artifacts and manifest.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Points per decade (continuous) or total points (discrete).
    #[arg(long, global = true)]
    pub grid_density: Option<usize>,
    /// Seed for every noise source and random initial state.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `printed` or `eq21`.
    #[arg(long, global = true)]
    pub table1_variant: Option<Table1Variant>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Suitability of the configured multiplier (identity if none).
    Check,
    /// Gain bound on one channel.
    Bound {
        /// Channel such as `r2->y2`.
        #[arg(long)]
        channel: Option<Channel>,
    },
    /// Phase-limitation tests excluding lattice multipliers of one period.
    PhaseLimit {
        #[arg(long)]
        period: Option<f64>,
    },
    /// Grid search over multiplier coefficients.
    Search,
    /// Time-domain simulation.
    Simulate,
    /// Largest Lyapunov exponent of a discrete loop.
    Lyapunov,
    /// Power seminorms of r2 and y2, checked against a bound when a
    /// multiplier is configured.
    Power,
    /// Parameter sweep written as a CSV curve.
    Sweep {
        #[arg(long, value_enum)]
        parameter: Option<SweepParameter>,
        #[arg(long, allow_negative_numbers = true)]
        start: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        stop: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Run a registered experiment and compare with its expected values.
    Reproduce {
        name: Option<String>,
        /// List the registered experiments.
        #[arg(long)]
        list: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Bound { .. } => "bound",
            Command::PhaseLimit { .. } => "phase-limit",
            Command::Search => "search",
            Command::Simulate => "simulate",
            Command::Lyapunov => "lyapunov",
            Command::Power => "power",
            Command::Sweep { .. } => "sweep",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

/// A rendered report plus files to write next to it.
pub struct Output {
    pub report: Report,
    pub artifacts: Vec<(String, String)>,
}

impl Output {
    fn report(report: Report) -> Self {
        Output { report, artifacts: Vec::new() }
    }
}

/// Loads the config and applies flag overrides.
pub fn resolve_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut c = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(d) = cli.grid_density {
        c.grid_density = Some(d);
    }
    if let Some(s) = cli.seed {
        c.reseed(s);
    }
    if let Some(v) = cli.table1_variant {
        c.table1_variant = v;
    }
    Ok(c)
}

pub fn run(cli: &Cli, cfg: &Config) -> anyhow::Result<Output> {
    match &cli.command {
        Command::Check => cmd_check(cfg).map(Output::report),
        Command::Bound { channel } => cmd_bound(cfg, channel.unwrap_or_else(|| cfg.channel())).map(Output::report),
        Command::PhaseLimit { period } => cmd_phase_limit(cfg, *period).map(Output::report),
        Command::Search => cmd_search(cfg).map(Output::report),
        Command::Simulate => cmd_simulate(cfg, cli.format),
        Command::Lyapunov => cmd_lyapunov(cfg).map(Output::report),
        Command::Power => cmd_power(cfg).map(Output::report),
        Command::Sweep { parameter, start, stop, step } => {
            let mut sw = cfg.sweep.clone();
            if let Some(p) = parameter {
                sw = Some(SweepConfig {
                    parameter: *p,
                    ..sw.unwrap_or(SweepConfig { parameter: *p, start: 0.0, stop: 0.0, step: 0.0, tap: 0 })
                });
            }
            let Some(mut sw) = sw else { bail!(UsageError("sweep needs a parameter".into())) };
            sw.start = start.unwrap_or(sw.start);
            sw.stop = stop.unwrap_or(sw.stop);
            sw.step = step.unwrap_or(sw.step);
            cmd_sweep(cfg, &sw).map(Output::report)
        }
        Command::Reproduce { name, list } => {
            if *list {
                return Ok(Output::report(registry_listing()));
            }
            let Some(name) = name else { bail!(UsageError("reproduce needs an experiment name".into())) };
            let ctx = RunContext {
                seed: cli.seed.unwrap_or(RunContext::default().seed),
                grid_density: cli.grid_density,
                variant: cli.table1_variant.unwrap_or_default(),
            };
            cmd_reproduce(name, &ctx).map(Output::report)
        }
    }
}

/// Runs the command, writes `--out` if given, and returns the exit status
/// with the text for stdout and stderr.
pub fn execute(cli: &Cli) -> (Exit, String, String) {
    let cfg = match resolve_config(cli) {
        Ok(c) => c,
        Err(e) => return (Exit::Usage, String::new(), format!("error: {e:#}\n")),
    };
    match run(cli, &cfg) {
        Ok(out) => {
            let text = out.report.render(cli.format);
            if let Some(dir) = &cli.out {
                if let Err(e) = write_outputs(dir, cli, &cfg, &out, &text) {
                    return (Exit::Usage, text, format!("error: {e:#}\n"));
                }
            }
            (if out.report.passed { Exit::Pass } else { Exit::Negative }, text, String::new())
        }
        Err(e) => (exit_for(&e), String::new(), format!("error: {e:#}\n")),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    arguments: &'a Command,
    format: Format,
    seed: Option<u64>,
    grid_density: Option<usize>,
    table1_variant: Table1Variant,
    config_path: Option<&'a Path>,
    config: &'a Config,
    passed: bool,
    files: Vec<String>,
}

fn write_outputs(dir: &Path, cli: &Cli, cfg: &Config, out: &Output, text: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let report_name = format!("report.{}", cli.format.extension());
    let mut files = vec![report_name.clone()];
    std::fs::write(dir.join(&report_name), text)?;
    for (name, body) in &out.artifacts {
        std::fs::write(dir.join(name), body)?;
        files.push(name.clone());
    }
    let manifest = Manifest {
        tool: "lurye",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        arguments: &cli.command,
        format: cli.format,
        seed: cli.seed.or(cfg.seed),
        grid_density: cfg.grid_density,
        table1_variant: cfg.table1_variant,
        config_path: cli.config.as_deref(),
        config: cfg,
        passed: out.report.passed,
        files,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn grid_for(cfg: &Config, g: &RationalTransferFunction) -> FrequencyGrid {
    plant_grid(g, cfg.grid_density)
}

fn fmt_k(k: f64) -> Value {
    if k.is_finite() {
        Value::from(k)
    } else {
        Value::from("inf")
    }
}

fn fields_of(mut r: Report, v: impl Serialize) -> Report {
    if let Ok(Value::Object(map)) = serde_json::to_value(v) {
        for (k, v) in map {
            r.fields.push((k, v));
        }
    }
    r
}

pub fn cmd_check(cfg: &Config) -> anyhow::Result<Report> {
    let g = cfg.transfer_function()?;
    let m = cfg.multiplier()?;
    let k = cfg.slope();
    let r = suitability_margin(&m, g, k, &grid_for(cfg, g))?;
    let verdict = if r.suitable { "suitable" } else { "not suitable" };
    Ok(Report::new(format!("check: {verdict}"), r.suitable)
        .field("multiplier", &r.multiplier)
        .field("k", fmt_k(k))
        .field("margin", r.margin)
        .field("argmin_frequency", r.argmin_frequency)
        .field("suitable", r.suitable)
        .field("eps", r.eps)
        .field("grid_points", r.grid.points))
}

pub fn cmd_bound(cfg: &Config, channel: Channel) -> anyhow::Result<Report> {
    let g = cfg.transfer_function()?;
    let m = cfg.multiplier()?;
    let opts = BoundOptions { variant: cfg.table1_variant, refine: true };
    let r = gain_bound_with(&m, g, cfg.slope(), channel, &grid_for(cfg, g), opts)?;
    Ok(fields_of(Report::new(format!("bound {channel}: {}", num(r.bound)), true), &r))
}

fn witness_row(t: &mut Table, w: &PhaseLimitWitness) {
    let (kind, frequency) = match w {
        PhaseLimitWitness::Gap { frequency, .. } => ("gap", *frequency),
        PhaseLimitWitness::Rational { frequency, .. } => ("rational", *frequency),
        PhaseLimitWitness::Lp { frequencies, .. } => ("lp", frequencies[0]),
        PhaseLimitWitness::AllPeriods { frequency, .. } => ("all_periods", *frequency),
    };
    t.push([kind.to_string(), num(frequency), serde_json::to_string(w).unwrap_or_default()]);
}

pub fn cmd_phase_limit(cfg: &Config, period: Option<f64>) -> anyhow::Result<Report> {
    let g = cfg.transfer_function()?;
    let Some(period) = period.or(cfg.phase.period) else {
        bail!(UsageError("phase-limit needs a period (--period or phase.period)".into()))
    };
    let k = cfg.slope();
    let grid = grid_for(cfg, g);
    let p = &cfg.phase;
    let mut t = Table::new(["test", "frequency", "witness"]);
    let mut count = 0;
    if let Some(w) = phase_gap_test(g, k, period, &grid, &p.shifts)? {
        witness_row(&mut t, &w);
        count += 1;
    }
    for w in rational_phase_limit_test(g, k, period, p.a_max, p.b_max)? {
        witness_row(&mut t, &w);
        count += 1;
    }
    let mut lp_objective = None;
    if let Some(lp) = &p.lp {
        let mut opts = LpOptions { exponent: lp.exponent, ..LpOptions::default() };
        if let Some(l) = &lp.lags {
            opts.lags = l.clone();
        }
        let sol = lp_phase_objective(g, k, period, lp.beta, &lp.p, &lp.n, &opts)?;
        lp_objective = Some(sol.objective);
        if sol.feasible {
            let w = PhaseLimitWitness::Lp {
                period,
                beta: lp.beta,
                p: lp.p.clone(),
                n: lp.n.clone(),
                frequencies: sol.frequencies,
                lambda: sol.lambda,
                objective: sol.objective,
                exponent: lp.exponent,
                lags: opts.lags,
            };
            witness_row(&mut t, &w);
            count += 1;
        }
    }
    let all = all_period_limit_test(g, k, &grid)?;
    let title = if count == 0 {
        format!("phase-limit T={period}: no exclusion witness")
    } else {
        format!("phase-limit T={period}: {count} witness(es); no period-{period} lattice multiplier is suitable")
    };
    Ok(Report::new(title, count == 0)
        .field("period", period)
        .field("k", fmt_k(k))
        .field("witnesses", count)
        .field("lp_objective", lp_objective)
        .field("sup_phase", all.sup_phase)
        .field("sup_phase_frequency", all.argmax_frequency)
        .field("phase_within_pi_over_2", all.holds)
        .field("crossing_frequency", all.crossing_frequency)
        .with_table(t))
}

pub fn cmd_search(cfg: &Config) -> anyhow::Result<Report> {
    let g = cfg.transfer_function()?;
    let Some(sc) = &cfg.search else { bail!(UsageError("search needs a `search` section".into())) };
    let mut spec = SearchSpec::new(sc.form.clone(), sc.objective, cfg.slope());
    spec.step = sc.step;
    spec.coeff_max = sc.coeff_max;
    let r = search_multiplier(g, &grid_for(cfg, g), &spec)?;
    let mut rep = Report::new(format!("search: {}", r.multiplier.describe()), true)
        .field("multiplier", r.multiplier.describe())
        .field("coefficients", &r.coefficients)
        .field("margin", r.margin)
        .field("evaluated", r.evaluated)
        .field("feasible", r.feasible);
    if let Some(b) = &r.bound {
        rep = rep.field("bound", b.bound).field("channel", b.channel.to_string());
    }
    Ok(rep.field("multiplier_json", &r.multiplier))
}

fn system(cfg: &Config) -> anyhow::Result<LuryeSystem> {
    let mut s = LuryeSystem::new(cfg.realization()?, cfg.nonlinearity()?.clone(), cfg.r1.clone(), cfg.r2.clone());
    if !cfg.x0.is_empty() {
        s = s.with_x0(cfg.x0.clone());
    }
    Ok(s)
}

fn simulate(cfg: &Config) -> anyhow::Result<(LuryeSystem, SimulationResult)> {
    let sys = system(cfg)?;
    let sc = &cfg.simulation;
    let opts = SimOptions {
        discard: sc.discard_for(sys.plant.domain),
        record_every: sc.record_every,
        ..SimOptions::default()
    };
    let r = match sys.plant.domain {
        Domain::Discrete => simulate_discrete_with(&sys, sc.horizon, &opts)?,
        Domain::Continuous => simulate_continuous_rk4(&sys, sc.step, sc.horizon, &opts)?,
    };
    Ok((sys, r))
}

fn trace_table(r: &SimulationResult) -> Table {
    let mut t = Table::new(["time", "y1", "y2", "u1", "u2"]);
    for i in 0..r.len() {
        t.push([r.time[i], r.y1[i], r.y2[i], r.u1[i], r.u2[i]].map(|v| format!("{v:.12e}")));
    }
    t
}

pub fn cmd_simulate(cfg: &Config, format: Format) -> anyhow::Result<Output> {
    let (sys, r) = simulate(cfg)?;
    let sc = &cfg.simulation;
    let peak = r.y2.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut rep = Report::new("simulate", true)
        .field("domain", sys.plant.domain)
        .field("samples", r.len())
        .field("final_time", r.final_time)
        .field("y2_peak", peak)
        .field("y2_power", power_seminorm(&r.y2, PowerMode::TailAverage)?)
        .field("y2_bias", bias_estimate(&r.y2))
        .field("final_state", &r.final_state);
    if let Some(p) = sc.period {
        // The trace is sampled every `record_every` steps.
        let samples = match sys.plant.domain {
            Domain::Discrete => p,
            Domain::Continuous => p / sc.step,
        } / sc.record_every.max(1) as f64;
        let opts = match sys.plant.domain {
            Domain::Discrete => PeriodOptions::discrete(sc.max_multiple),
            Domain::Continuous => PeriodOptions::rk4(sc.max_multiple),
        };
        rep = rep.field("period_verdict", detect_period(&r.y2, samples, &opts)?);
    }
    let table = trace_table(&r);
    let mut artifacts = vec![("trace.csv".to_string(), table.to_csv())];
    if let Some(len) = sc.spectrum {
        let s = spectrum(&r.y2, len)?;
        let dt = r.meta.step * r.meta.record_every as f64;
        let mut t = Table::new(["bin", "frequency", "magnitude"]);
        for (k, m) in s.magnitudes.iter().enumerate() {
            t.push([k.to_string(), format!("{:.12e}", k as f64 / (len as f64 * dt)), format!("{m:.12e}")]);
        }
        rep = rep.field("spectrum_dominant_bin", s.dominant_bin()).field("parseval_residual", s.parseval_residual);
        artifacts.push(("spectrum.csv".to_string(), t.to_csv()));
    }
    if format == Format::Csv {
        rep = rep.with_table(table);
    }
    Ok(Output { report: rep, artifacts })
}

pub fn cmd_lyapunov(cfg: &Config) -> anyhow::Result<Report> {
    let sys = system(cfg)?;
    let opts = cfg.lyapunov.unwrap_or_default();
    let le = lyapunov_exponent(&sys, &opts)?;
    Ok(Report::new(format!("lyapunov exponent {}", num(le)), true)
        .field("exponent", le)
        .field("positive", le > 0.0)
        .field("options", opts))
}

pub fn cmd_power(cfg: &Config) -> anyhow::Result<Report> {
    let (sys, r) = simulate(cfg)?;
    let mode = cfg.power.unwrap_or(PowerMode::TailAverage);
    let r2: Vec<f64> = r.time.iter().map(|&t| sys.r2.eval(t)).collect();
    let pr = power_seminorm(&r2, mode)?;
    let py = power_seminorm(&r.y2, mode)?;
    let ratio = if pr > 0.0 { py / pr } else { f64::INFINITY };
    let mut rep = Report::new("power", true)
        .field("r2_power", pr)
        .field("y2_power", py)
        .field("ratio", ratio)
        .field("y2_bias", bias_estimate(&r.y2));
    if cfg.multiplier.is_some() {
        let g = cfg.transfer_function()?;
        let opts = BoundOptions { variant: cfg.table1_variant, refine: true };
        let b = gain_bound_with(&cfg.multiplier()?, g, cfg.slope(), Channel::r2_y2(), &grid_for(cfg, g), opts)?;
        let ok = py <= b.bound * pr + 1e-6;
        rep.passed = ok;
        rep.title = format!("power: ||y2||_P {} h ||r2||_P", if ok { "<=" } else { ">" });
        rep = rep.field("bound", b.bound).field("within_bound", ok);
    }
    Ok(rep)
}

fn sweep_multiplier(cfg: &Config, sw: &SweepConfig, v: f64) -> anyhow::Result<Option<Multiplier>> {
    let base = cfg.multiplier()?;
    let Multiplier::Taps(t) = &base else {
        bail!(UsageError("coefficient and theta sweeps need a tap multiplier".into()))
    };
    let (taps, class) = match sw.parameter {
        SweepParameter::Coefficient => {
            let mut taps = t.taps().to_vec();
            if sw.tap >= taps.len() {
                bail!(UsageError(format!("multiplier has no tap {}", sw.tap)));
            }
            taps[sw.tap].1 = v;
            (taps, t.class())
        }
        SweepParameter::Theta => {
            let taps = t.taps().iter().map(|&(o, c)| (o * v, c)).collect();
            let class = match t.class() {
                MultiplierClass::Altshuller(p) => MultiplierClass::Altshuller(p * v),
                c => c,
            };
            (taps, class)
        }
        _ => return Ok(Some(base)),
    };
    Ok(TapMultiplier::new(t.domain(), taps, class).ok().map(Multiplier::from))
}

pub fn cmd_sweep(cfg: &Config, sw: &SweepConfig) -> anyhow::Result<Report> {
    let values = sw.values()?;
    let g = cfg.transfer_function()?;
    let k = cfg.slope();
    let inv_k = if k.is_finite() { 1.0 / k } else { 0.0 };
    let grid = grid_for(cfg, g);
    let name = format!("{:?}", sw.parameter).to_lowercase();
    if sw.parameter == SweepParameter::Frequency {
        let m = cfg.multiplier()?;
        let mut t = Table::new([name.as_str(), "re_g", "im_g", "phase", "re_m", "im_m", "pointwise_margin"]);
        for &w in &values {
            let gw = g.eval(w)?;
            let mw = m.response(w)?;
            let s = gw + inv_k;
            t.push([w, gw.re, gw.im, s.arg(), mw.re, mw.im, (mw * s).re].map(|x| format!("{x:.12e}")));
        }
        return Ok(Report::new("sweep frequency", true).field("points", values.len()).with_table(t));
    }
    let channel = cfg.channel();
    let opts = BoundOptions { variant: cfg.table1_variant, refine: true };
    let mut t = Table::new([name.as_str(), "margin", "argmin_frequency", "suitable", "bound"]);
    let mut suitable = 0;
    for &v in &values {
        let (m, gv) = match sw.parameter {
            SweepParameter::Gain => (Some(cfg.multiplier()?), g.with_gain(v)),
            _ => (sweep_multiplier(cfg, sw, v)?, g.clone()),
        };
        let Some(m) = m else {
            t.push([format!("{v}"), "invalid".into(), String::new(), "false".into(), String::new()]);
            continue;
        };
        let r = suitability_margin(&m, &gv, k, &grid)?;
        let bound = if r.suitable {
            suitable += 1;
            gain_bound_with(&m, &gv, k, channel, &grid, opts).map(|b| num(b.bound)).unwrap_or_default()
        } else {
            String::new()
        };
        t.push([format!("{v}"), format!("{:.12e}", r.margin), num(r.argmin_frequency), r.suitable.to_string(), bound]);
    }
    Ok(Report::new(format!("sweep {name}"), true)
        .field("points", values.len())
        .field("suitable_points", suitable)
        .field("channel", channel.to_string())
        .with_table(t))
}

pub fn cmd_reproduce(name: &str, ctx: &RunContext) -> anyhow::Result<Report> {
    let Some(e) = find(name) else {
        let known: Vec<_> = REGISTRY.iter().map(|e| e.name).collect();
        bail!(UsageError(format!("unknown experiment `{name}`; known: {}", known.join(", "))))
    };
    let checks = (e.run)(ctx)?;
    Ok(checks_report(e.name, &checks).field("seed", ctx.seed))
}

fn registry_listing() -> Report {
    let mut t = Table::new(["name", "summary"]);
    for e in REGISTRY {
        t.push([e.name, e.summary]);
    }
    Report::new("registered experiments", true).with_table(t)
}
