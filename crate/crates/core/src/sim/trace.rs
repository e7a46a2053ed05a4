//! Post-processing of recorded traces.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::system::{FlatPlant, LuryeSystem};
use crate::error::{Error, Result};
use crate::lti::Domain;

pub const DISCRETE_PERIOD_TOL: f64 = 1e-6;
pub const RK4_PERIOD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PeriodVerdict {
    Periodic { multiple: usize },
    Aperiodic,
}

impl PeriodVerdict {
    pub fn multiple(self) -> Option<usize> {
        match self {
            PeriodVerdict::Periodic { multiple } => Some(multiple),
            PeriodVerdict::Aperiodic => None,
        }
    }
}

/// Settings for [`detect_period`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOptions {
    pub max_multiple: usize,
    /// Relative to the peak absolute value over the test window.
    pub tol: f64,
    /// Leading fraction of the trace treated as transient.
    pub discard_fraction: f64,
}

impl PeriodOptions {
    pub fn discrete(max_multiple: usize) -> Self {
        Self { max_multiple, tol: DISCRETE_PERIOD_TOL, discard_fraction: 0.5 }
    }

    pub fn rk4(max_multiple: usize) -> Self {
        Self { max_multiple, tol: RK4_PERIOD_TOL, discard_fraction: 0.5 }
    }
}

/// `max |y(t + s) - y(t)|` over the window, with `s` in samples (linear
/// interpolation for fractional shifts).
pub fn shift_mismatch(window: &[f64], shift: f64) -> Option<f64> {
    let i0 = shift.floor() as usize;
    let frac = shift - i0 as f64;
    let need = if frac > 0.0 { i0 + 2 } else { i0 + 1 };
    if window.len() < need {
        return None;
    }
    let m = window.len() - need + 1;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let shifted =
            if frac > 0.0 { (1.0 - frac) * window[i + i0] + frac * window[i + i0 + 1] } else { window[i + i0] };
        worst = worst.max((shifted - window[i]).abs());
    }
    Some(worst)
}

/// Smallest multiple `m` of the base period (in samples) for which the
/// settled part of the trace repeats.
pub fn detect_period(trace: &[f64], period: f64, opts: &PeriodOptions) -> Result<PeriodVerdict> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period {period} must be > 0")));
    }
    let start = (opts.discard_fraction.clamp(0.0, 1.0) * trace.len() as f64) as usize;
    let window = &trace[start..];
    let needed = period.ceil() as usize + 1;
    if window.len() < needed {
        return Err(Error::WindowTooShort { needed, available: window.len() });
    }
    let amp = window.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if amp == 0.0 {
        return Ok(PeriodVerdict::Periodic { multiple: 1 });
    }
    for m in 1..=opts.max_multiple {
        match shift_mismatch(window, m as f64 * period) {
            Some(err) if err < opts.tol * amp => return Ok(PeriodVerdict::Periodic { multiple: m }),
            Some(_) => {}
            None => break,
        }
    }
    Ok(PeriodVerdict::Aperiodic)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PowerMode {
    /// `sqrt(max of the running mean square over the last quarter)`.
    TailAverage,
    /// RMS over the last `period` samples, after checking the trace has
    /// settled onto that period.
    PeriodExact { period: usize, tol: f64 },
}

pub fn power_seminorm(trace: &[f64], mode: PowerMode) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::WindowTooShort { needed: 1, available: 0 });
    }
    match mode {
        PowerMode::TailAverage => {
            let n = trace.len();
            let from = (n - n / 4).min(n - 1);
            let mut acc = 0.0;
            let mut best: f64 = 0.0;
            for (i, y) in trace.iter().enumerate() {
                acc += y * y;
                if i >= from {
                    best = best.max(acc / (i + 1) as f64);
                }
            }
            Ok(best.sqrt())
        }
        PowerMode::PeriodExact { period, tol } => {
            let opts = PeriodOptions { max_multiple: 1, tol, discard_fraction: 0.0 };
            let tail = &trace[trace.len().saturating_sub(4 * period.max(1))..];
            match detect_period(tail, period as f64, &opts) {
                Ok(PeriodVerdict::Periodic { multiple: 1 }) => {}
                _ => return Err(Error::NotSettled),
            }
            Ok(rms(&trace[trace.len() - period..]))
        }
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Mean of the second half of the trace.
pub fn bias_estimate(trace: &[f64]) -> f64 {
    let tail = &trace[trace.len() / 2..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    pub steps: usize,
    pub d0: f64,
    pub discard: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self { steps: 1_000_000, d0: 1e-8, discard: 1000 }
    }
}

/// Largest Lyapunov exponent per step (natural log) by the two-trajectory
/// method: the perturbed state starts `d0` away along the first axis and
/// is pulled back to distance `d0` along the current separation after
/// every step. The first `discard` steps are run but not averaged.
pub fn lyapunov_exponent(sys: &LuryeSystem, opts: &LyapunovOptions) -> Result<f64> {
    if sys.plant.domain != Domain::Discrete {
        return Err(Error::DomainMismatch("Lyapunov exponent needs a discrete plant".into()));
    }
    if opts.steps == 0 || !(opts.d0 > 0.0) {
        return Err(Error::InvalidArgument("need steps >= 1 and d0 > 0".into()));
    }
    sys.validate()?;
    let p = FlatPlant::new(&sys.plant);
    let n = p.n;
    if n == 0 {
        return Err(Error::InvalidArgument("plant has no state".into()));
    }
    let mut x = sys.initial_state()?;
    let mut xp = x.clone();
    xp[0] += opts.d0;
    let (mut nx, mut nxp) = (vec![0.0; n], vec![0.0; n]);
    let mut acc = 0.0;
    for k in 0..opts.discard + opts.steps {
        let t = k as f64;
        let s = sys.loop_signals_flat(&p, t, &x)?;
        let sp = sys.loop_signals_flat(&p, t, &xp)?;
        p.ax_bu(&x, s.u1, &mut nx);
        p.ax_bu(&xp, sp.u1, &mut nxp);
        std::mem::swap(&mut x, &mut nx);
        std::mem::swap(&mut xp, &mut nxp);
        let d1 = x.iter().zip(&xp).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        if !(d1 > 0.0) || !d1.is_finite() {
            return Err(Error::DegenerateSeparation { step: k + 1 });
        }
        if k >= opts.discard {
            acc += (d1 / opts.d0).ln();
        }
        let scale = opts.d0 / d1;
        for i in 0..n {
            xp[i] = x[i] + (xp[i] - x[i]) * scale;
        }
    }
    Ok(acc / opts.steps as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// `|X_k|` for `k = 0..len`, in DFT order.
    pub magnitudes: Vec<f64>,
    /// `|Σ|X|² / N - Σ x²| / Σ x²` (0 for a zero signal).
    pub parseval_residual: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Index of the largest bin in `1..=len/2` (DC excluded).
    pub fn dominant_bin(&self) -> usize {
        let half = self.magnitudes.len() / 2;
        (1..=half).max_by(|&a, &b| self.magnitudes[a].partial_cmp(&self.magnitudes[b]).unwrap()).unwrap_or(0)
    }
}

/// DFT magnitudes of the last `len` samples; `len` must be a power of two.
pub fn spectrum(trace: &[f64], len: usize) -> Result<Spectrum> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::LengthNotPowerOfTwo(len));
    }
    if trace.len() < len {
        return Err(Error::WindowTooShort { needed: len, available: trace.len() });
    }
    let tail = &trace[trace.len() - len..];
    let mut buf: Vec<Complex<f64>> = tail.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let energy: f64 = tail.iter().map(|v| v * v).sum();
    let spectral: f64 = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / len as f64;
    let parseval_residual = if energy > 0.0 { (spectral - energy).abs() / energy } else { spectral };
    Ok(Spectrum { magnitudes: buf.iter().map(|c| c.norm()).collect(), parseval_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicDecomposition {
    pub period: usize,
    pub periods_used: usize,
    /// Per-phase mean over the periods used.
    pub profile: Vec<f64>,
    /// Trace minus the repeated profile.
    pub residual: Vec<f64>,
    pub periodic_power: f64,
    pub residual_power: f64,
}

/// Splits the first `floor(len / period) * period` samples into a
/// per-phase mean and a remainder. Needs at least 100 periods.
pub fn decompose_periodic(trace: &[f64], period: usize) -> Result<PeriodicDecomposition> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be >= 1".into()));
    }
    let count = trace.len() / period;
    if count < 100 {
        return Err(Error::WindowTooShort { needed: 100 * period, available: trace.len() });
    }
    let used = &trace[..count * period];
    let mut profile = vec![0.0; period];
    for (i, v) in used.iter().enumerate() {
        profile[i % period] += v;
    }
    for p in &mut profile {
        *p /= count as f64;
    }
    let residual: Vec<f64> = used.iter().enumerate().map(|(i, v)| v - profile[i % period]).collect();
    Ok(PeriodicDecomposition {
        period,
        periods_used: count,
        periodic_power: rms(&profile),
        residual_power: rms(&residual),
        profile,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn period_detection_multiples() {
        let y: Vec<f64> = (0..2000).map(|n| [0.3, -0.2, 0.9, 0.0, 0.4][n % 5]).collect();
        let v = detect_period(&y, 5.0, &PeriodOptions::discrete(8)).unwrap();
        assert_eq!(v, PeriodVerdict::Periodic { multiple: 1 });
        let z: Vec<f64> = (0..3000).map(|n| ((n % 15) as f64).sin()).collect();
        assert_eq!(detect_period(&z, 5.0, &PeriodOptions::discrete(8)).unwrap().multiple(), Some(3));
        let w: Vec<f64> = (0..3000).map(|n| (n as f64 * 0.1234).sin()).collect();
        assert_eq!(detect_period(&w, 5.0, &PeriodOptions::discrete(8)).unwrap(), PeriodVerdict::Aperiodic);
        assert!(matches!(detect_period(&y[..8], 5.0, &PeriodOptions::discrete(2)), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn fractional_period() {
        let h = 0.01;
        let y: Vec<f64> = (0..20_000).map(|i| (2.0 * i as f64 * h).sin()).collect();
        let v = detect_period(&y, PI / h, &PeriodOptions { max_multiple: 4, tol: 1e-3, discard_fraction: 0.5 });
        assert_eq!(v.unwrap().multiple(), Some(1));
    }

    #[test]
    fn power_modes() {
        let r: Vec<f64> = (0..100).map(|n| [1.0, 0.6, -0.6, -1.0, 0.0][n % 5]).collect();
        let exact = power_seminorm(&r, PowerMode::PeriodExact { period: 5, tol: 1e-6 }).unwrap();
        let oracle = ((1.0 + 0.36 + 0.36 + 1.0) / 5.0f64).sqrt();
        assert!((exact - oracle).abs() < 1e-15);
        assert!((exact - 0.7376).abs() < 5e-5);
        let tail = power_seminorm(&r, PowerMode::TailAverage).unwrap();
        assert!((tail - oracle).abs() < 0.01);
        assert_eq!(power_seminorm(&[0.0; 10], PowerMode::TailAverage).unwrap(), 0.0);
        let drift: Vec<f64> = (0..100).map(|n| n as f64).collect();
        assert!(matches!(
            power_seminorm(&drift, PowerMode::PeriodExact { period: 5, tol: 1e-6 }),
            Err(Error::NotSettled)
        ));
    }

    #[test]
    fn bias_of_sinusoid() {
        let y: Vec<f64> = (0..4000).map(|n| (2.0 * PI * n as f64 / 40.0).sin()).collect();
        assert!(bias_estimate(&y).abs() < 1e-9);
    }

    #[test]
    fn single_tone_spectrum() {
        let len = 1 << 16;
        let k0 = (len as f64 / 40.0).round();
        let y: Vec<f64> = (0..len).map(|n| (2.0 * PI * k0 * n as f64 / len as f64).cos()).collect();
        let s = spectrum(&y, len).unwrap();
        assert_eq!(s.dominant_bin(), k0 as usize);
        let peak = s.magnitudes[k0 as usize];
        for (k, m) in s.magnitudes.iter().enumerate() {
            if k != k0 as usize && k != len - k0 as usize {
                assert!(*m < 1e-9 * peak);
            }
        }
        assert!(s.parseval_residual < 1e-9);
        assert!(matches!(spectrum(&y, 1000), Err(Error::LengthNotPowerOfTwo(1000))));
        let z = spectrum(&vec![0.0; 64], 64).unwrap();
        assert!(z.magnitudes.iter().all(|m| *m == 0.0));
    }

    #[test]
    fn decomposition_of_periodic_signal() {
        let y: Vec<f64> = (0..4000).map(|n| ((n % 40) as f64 * 0.3).cos()).collect();
        let d = decompose_periodic(&y, 40).unwrap();
        assert!(d.residual.iter().all(|v| v.abs() < 1e-12));
        assert!((d.periodic_power - rms(&y)).abs() < 1e-12);
        assert!(decompose_periodic(&y[..3999], 40).is_err());
    }
}
