//! Attractor hunting for periodically forced continuous loops: settle each
//! initial state on the stroboscopic map, then record one orbit.

use lurye_core::exec;
use lurye_core::sim::{simulate_continuous_rk4, LuryeSystem, SimOptions};
use lurye_core::Result;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HuntOptions {
    /// Excitation period.
    pub period: f64,
    /// RK4 steps per period.
    pub steps_per_period: usize,
    pub max_periods: usize,
    pub max_multiple: usize,
    /// Relative strobe tolerance for convergence.
    pub tol: f64,
    /// Looser tolerance used to reduce a converged multiple to the
    /// smallest divisor that still repeats.
    pub period_tol: f64,
}

impl HuntOptions {
    pub fn step(&self) -> f64 {
        self.period / self.steps_per_period as f64
    }
}

/// A settled periodic response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub x0: Vec<f64>,
    /// Period as a multiple of the excitation period.
    pub multiple: usize,
    /// Periods simulated before the strobe repeated.
    pub periods: usize,
    /// `max |y2|` over the orbit.
    pub amplitude: f64,
    /// `max |u2|` over the orbit.
    pub input_peak: f64,
    /// Strobe states, one per excitation period.
    #[serde(skip)]
    pub strobes: Vec<Vec<f64>>,
    /// `y2` over one orbit, starting at a time that is a multiple of
    /// `multiple * period`.
    #[serde(skip)]
    pub y2: Vec<f64>,
    #[serde(skip)]
    pub u2: Vec<f64>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs whole excitation periods until the strobe repeats with some
/// multiple `m <= max_multiple` on two consecutive strobes. `None` if that
/// never happens within `max_periods`. A slowly decaying transient can let
/// a multiple of the true period pass first, so `m` is then cut down to
/// its smallest divisor that repeats within `period_tol`.
pub fn settle(sys: &LuryeSystem, opts: &HuntOptions) -> Result<Option<Orbit>> {
    let h = opts.step();
    let spp = opts.steps_per_period;
    let mut x = sys.initial_state()?;
    let mut strobes: Vec<Vec<f64>> = vec![x.clone()];
    let mut found = None;
    let mut k = 0usize;
    while k < opts.max_periods {
        let s = sys.clone().with_x0(x);
        let run = simulate_continuous_rk4(
            &s,
            h,
            spp,
            &SimOptions { start_time: k as f64 * opts.period, record_every: spp, ..SimOptions::default() },
        )?;
        x = run.final_state;
        k += 1;
        strobes.push(x.clone());
        let n = strobes.len();
        let scale = strobes[n.saturating_sub(opts.max_multiple + 2)..].iter().map(|v| norm(v)).fold(0.0, f64::max);
        let close = |i: usize, m: usize| {
            i >= m && dist(&strobes[i], &strobes[i - m]) <= opts.tol * scale.max(f64::MIN_POSITIVE)
        };
        if let Some(m) = (1..=opts.max_multiple).find(|&m| close(n - 1, m) && close(n - 2, m)) {
            let loose = |d: usize| dist(&strobes[n - 1], &strobes[n - 1 - d]) <= opts.period_tol * scale;
            found = (1..=m).find(|&d| m % d == 0 && loose(d));
            break;
        }
        if n > 4 * opts.max_multiple {
            strobes.drain(..n - 2 * opts.max_multiple - 2);
        }
    }
    let Some(m) = found else { return Ok(None) };
    // Align the recorded orbit to a multiple of m periods.
    while !k.is_multiple_of(m) {
        let s = sys.clone().with_x0(x);
        let run = simulate_continuous_rk4(
            &s,
            h,
            spp,
            &SimOptions { start_time: k as f64 * opts.period, record_every: spp, ..SimOptions::default() },
        )?;
        x = run.final_state;
        k += 1;
    }
    let s = sys.clone().with_x0(x);
    let run = simulate_continuous_rk4(
        &s,
        h,
        m * spp,
        &SimOptions { start_time: k as f64 * opts.period, state_every: Some(spp), ..SimOptions::default() },
    )?;
    let peak = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(Some(Orbit {
        x0: sys.x0.clone(),
        multiple: m,
        periods: k,
        amplitude: peak(&run.y2),
        input_peak: peak(&run.u2),
        strobes: run.states.into_iter().map(|(_, s)| s).collect(),
        y2: run.y2,
        u2: run.u2,
    }))
}

/// Same invariant set of the stroboscopic map: equal multiples and every
/// strobe of one within `tol` (relative) of some strobe of the other.
pub fn same_attractor(a: &Orbit, b: &Orbit, tol: f64) -> bool {
    if a.multiple != b.multiple {
        return false;
    }
    let scale = a.strobes.iter().chain(&b.strobes).map(|v| norm(v)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.strobes.iter().all(|s| b.strobes.iter().any(|t| dist(s, t) <= tol * scale))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HuntResult {
    pub attractors: Vec<Orbit>,
    /// Initial states that never settled.
    pub unsettled: Vec<Vec<f64>>,
    pub runs: usize,
}

/// Settles every initial state (in parallel) and keeps one orbit per
/// distinct attractor, in order of first discovery.
pub fn hunt(base: &LuryeSystem, x0s: &[Vec<f64>], opts: &HuntOptions) -> Result<HuntResult> {
    let settled = exec::map_indexed(x0s.len(), |i| settle(&base.clone().with_x0(x0s[i].clone()), opts));
    let mut attractors: Vec<Orbit> = Vec::new();
    let mut unsettled = Vec::new();
    for (x0, r) in x0s.iter().zip(settled) {
        match r? {
            Some(o) => {
                if !attractors.iter().any(|a| same_attractor(a, &o, 1e-4)) {
                    attractors.push(o);
                }
            }
            None => unsettled.push(x0.clone()),
        }
    }
    Ok(HuntResult { attractors, unsettled, runs: x0s.len() })
}

/// `scale * d` for every scale and every nonzero `d` in `{-1, 0, 1}^n`,
/// with the zero state first.
pub fn x0_grid(n: usize, scales: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]];
    let dirs: Vec<Vec<f64>> = (0..3usize.pow(n as u32))
        .map(|mut c| {
            (0..n)
                .map(|_| {
                    let d = (c % 3) as f64 - 1.0;
                    c /= 3;
                    d
                })
                .collect()
        })
        .filter(|d: &Vec<f64>| d.iter().any(|v| *v != 0.0))
        .collect();
    for &s in scales.iter().filter(|s| **s != 0.0) {
        for d in &dirs {
            out.push(d.iter().map(|v| v * s).collect());
        }
    }
    out
}

/// `max_t |b(t) + a(t - shift)| / max |a|` on two orbits of equal length
/// recorded on the same clock; `shift` in samples, taken cyclically.
pub fn antisymmetry_residual(a: &[f64], b: &[f64], shift: usize) -> f64 {
    let n = a.len();
    assert_eq!(n, b.len());
    let amp = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    (0..n).map(|i| (b[i] + a[(i + n - shift % n) % n]).abs()).fold(0.0, f64::max) / amp
}
