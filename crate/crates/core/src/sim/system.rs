use serde::{Deserialize, Serialize};

use super::{Nonlinearity, SignalSpec};
use crate::error::{Error, Result};
use crate::lti::{Domain, StateSpaceRealization};

/// States larger than this are treated as divergence.
pub const DIVERGENCE_GUARD: f64 = 1e12;
pub const DEFAULT_RK4_STEP: f64 = 1e-3;

/// `y1 = G u1`, `y2 = φ(u2)`, `u1 = r1 - y2`, `u2 = y1 + r2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuryeSystem {
    pub plant: StateSpaceRealization,
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub r1: SignalSpec,
    #[serde(default)]
    pub r2: SignalSpec,
    /// Defaults to the zero state.
    #[serde(default)]
    pub x0: Vec<f64>,
}

/// Loop signals at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSignals {
    pub y1: f64,
    pub y2: f64,
    pub u1: f64,
    pub u2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimMeta {
    pub domain: Domain,
    /// Sample time (1 for discrete systems).
    pub step: f64,
    /// Total number of steps taken, including discarded ones.
    pub steps: usize,
    /// Steps run before recording started.
    pub discarded: usize,
    pub record_every: usize,
    pub start_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub time: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// `(trace index, state)` pairs for the recorded states.
    pub states: Vec<(usize, Vec<f64>)>,
    pub final_state: Vec<f64>,
    pub final_time: f64,
    pub meta: SimMeta,
}

impl SimulationResult {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    fn with_capacity(n: usize, meta: SimMeta) -> Self {
        Self {
            time: Vec::with_capacity(n),
            y1: Vec::with_capacity(n),
            y2: Vec::with_capacity(n),
            u1: Vec::with_capacity(n),
            u2: Vec::with_capacity(n),
            states: Vec::new(),
            final_state: Vec::new(),
            final_time: 0.0,
            meta,
        }
    }

    fn push(&mut self, t: f64, s: LoopSignals) {
        self.time.push(t);
        self.y1.push(s.y1);
        self.y2.push(s.y2);
        self.u1.push(s.u1);
        self.u2.push(s.u2);
    }
}

/// Recording options shared by both integrators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Steps to run before recording starts.
    #[serde(default)]
    pub discard: usize,
    /// Record every n-th step.
    #[serde(default = "one")]
    pub record_every: usize,
    /// Also store the state every n-th recorded sample.
    #[serde(default)]
    pub state_every: Option<usize>,
    /// Time of the first step (continuous) or index of the first sample.
    #[serde(default)]
    pub start_time: f64,
}

fn one() -> usize {
    1
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { discard: 0, record_every: 1, state_every: None, start_time: 0.0 }
    }
}

/// Flat row-major copy of the plant used in the inner loops.
#[derive(Debug, Clone)]
pub(crate) struct FlatPlant {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: f64,
}

impl FlatPlant {
    pub fn new(p: &StateSpaceRealization) -> Self {
        let n = p.order();
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                a.push(p.a[(i, j)]);
            }
        }
        Self { n, a, b: p.b.iter().copied().collect(), c: p.c.iter().copied().collect(), d: p.d }
    }

    #[inline]
    fn cx(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// `out = A x + B u`.
    #[inline]
    pub fn ax_bu(&self, x: &[f64], u: f64, out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b[i] * u;
        }
    }
}

impl LuryeSystem {
    pub fn new(plant: StateSpaceRealization, nonlinearity: Nonlinearity, r1: SignalSpec, r2: SignalSpec) -> Self {
        Self { plant, nonlinearity, r1, r2, x0: Vec::new() }
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = x0;
        self
    }

    /// Initial state, zero if none was given.
    pub fn initial_state(&self) -> Result<Vec<f64>> {
        let n = self.plant.order();
        if self.x0.is_empty() {
            return Ok(vec![0.0; n]);
        }
        if self.x0.len() != n {
            return Err(Error::InvalidArgument(format!("x0 has {} entries, plant order is {n}", self.x0.len())));
        }
        Ok(self.x0.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.nonlinearity.validate()?;
        self.r1.validate()?;
        self.r2.validate()?;
        if self.plant.d < 0.0 {
            return Err(Error::AlgebraicLoop(format!(
                "feedthrough {} < 0 makes the loop equation non-monotone",
                self.plant.d
            )));
        }
        self.initial_state().map(|_| ())
    }

    /// Resolves the loop at time `t` and state `x`.
    pub fn loop_signals(&self, t: f64, x: &[f64]) -> Result<LoopSignals> {
        let plant = FlatPlant::new(&self.plant);
        self.loop_signals_flat(&plant, t, x)
    }

    pub(crate) fn loop_signals_flat(&self, p: &FlatPlant, t: f64, x: &[f64]) -> Result<LoopSignals> {
        let r1 = self.r1.eval(t);
        let r2 = self.r2.eval(t);
        let cx = p.cx(x);
        if p.d == 0.0 {
            let y1 = cx;
            let u2 = y1 + r2;
            let y2 = self.nonlinearity.eval(t, u2);
            return Ok(LoopSignals { y1, y2, u1: r1 - y2, u2 });
        }
        // u2 = Cx + D (r1 - φ(t, u2)) + r2: increasing residual in u2 for D > 0.
        let base = cx + p.d * r1 + r2;
        let f = |u2: f64| u2 + p.d * self.nonlinearity.eval(t, u2) - base;
        let mut lo = base - 1.0;
        let mut hi = base + 1.0;
        let mut grow = 0;
        while f(lo) > 0.0 || f(hi) < 0.0 {
            lo -= (hi - lo).abs();
            hi += (hi - lo).abs();
            grow += 1;
            if grow > 200 {
                return Err(Error::AlgebraicLoop("no bracket for the loop equation".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let u2 = 0.5 * (lo + hi);
        let y2 = self.nonlinearity.eval(t, u2);
        let u1 = r1 - y2;
        Ok(LoopSignals { y1: cx + p.d * u1, y2, u1, u2 })
    }
}

fn guard(x: &[f64], step: usize) -> Result<()> {
    if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_GUARD) {
        Err(Error::NonfiniteState { step })
    } else {
        Ok(())
    }
}

/// Runs `x(n+1) = A x(n) + B u1(n)` for `horizon` recorded samples after
/// `opts.discard` unrecorded ones.
pub fn simulate_discrete(sys: &LuryeSystem, horizon: usize) -> Result<SimulationResult> {
    simulate_discrete_with(sys, horizon, &SimOptions::default())
}

pub fn simulate_discrete_with(sys: &LuryeSystem, horizon: usize, opts: &SimOptions) -> Result<SimulationResult> {
    if sys.plant.domain != Domain::Discrete {
        return Err(Error::DomainMismatch("simulate_discrete needs a discrete plant".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    sys.validate()?;
    let every = opts.record_every.max(1);
    let p = FlatPlant::new(&sys.plant);
    let mut x = sys.initial_state()?;
    let mut next = vec![0.0; p.n];
    let total = opts.discard + horizon;
    let meta = SimMeta {
        domain: Domain::Discrete,
        step: 1.0,
        steps: total,
        discarded: opts.discard,
        record_every: every,
        start_time: opts.start_time,
    };
    let mut out = SimulationResult::with_capacity(horizon / every + 1, meta);
    let t0 = opts.start_time.round() as i64;
    for k in 0..total {
        let t = (t0 + k as i64) as f64;
        let s = sys.loop_signals_flat(&p, t, &x)?;
        if k >= opts.discard && (k - opts.discard).is_multiple_of(every) {
            if let Some(se) = opts.state_every {
                if out.len().is_multiple_of(se.max(1)) {
                    out.states.push((out.len(), x.clone()));
                }
            }
            out.push(t, s);
        }
        p.ax_bu(&x, s.u1, &mut next);
        std::mem::swap(&mut x, &mut next);
        guard(&x, k + 1)?;
    }
    out.final_time = (t0 + total as i64) as f64;
    out.final_state = x;
    Ok(out)
}

/// Fixed-step classical RK4 on `x' = A x + B u1(t, x)`, with the loop
/// resolved at every stage. Runs `steps` steps of size `h` after
/// `opts.discard` unrecorded ones.
pub fn simulate_continuous_rk4(sys: &LuryeSystem, h: f64, steps: usize, opts: &SimOptions) -> Result<SimulationResult> {
    if sys.plant.domain != Domain::Continuous {
        return Err(Error::DomainMismatch("RK4 needs a continuous plant".into()));
    }
    if !(h > 0.0 && h.is_finite()) || steps == 0 {
        return Err(Error::InvalidArgument(format!("bad step {h} or horizon {steps}")));
    }
    sys.validate()?;
    let every = opts.record_every.max(1);
    let p = FlatPlant::new(&sys.plant);
    let n = p.n;
    let mut x = sys.initial_state()?;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let total = opts.discard + steps;
    let meta = SimMeta {
        domain: Domain::Continuous,
        step: h,
        steps: total,
        discarded: opts.discard,
        record_every: every,
        start_time: opts.start_time,
    };
    let mut out = SimulationResult::with_capacity(steps / every + 1, meta);
    let rhs = |t: f64, x: &[f64], dx: &mut [f64]| -> Result<LoopSignals> {
        let s = sys.loop_signals_flat(&p, t, x)?;
        p.ax_bu(x, s.u1, dx);
        Ok(s)
    };
    for k in 0..total {
        // Time from the step index, so long runs do not accumulate drift.
        let t = opts.start_time + k as f64 * h;
        let s = rhs(t, &x, &mut k1)?;
        if k >= opts.discard && (k - opts.discard).is_multiple_of(every) {
            if let Some(se) = opts.state_every {
                if out.len().is_multiple_of(se.max(1)) {
                    out.states.push((out.len(), x.clone()));
                }
            }
            out.push(t, s);
        }
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        guard(&x, k + 1)?;
    }
    out.final_time = opts.start_time + total as f64 * h;
    out.final_state = x;
    Ok(out)
}
