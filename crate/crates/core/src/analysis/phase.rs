use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lp::{LinearProgram, LpOutcome};
use super::{bisect_threshold, inverse_slope};
use crate::error::{Error, Result};
use crate::exec;
use crate::lti::grid::{wrap_angle, FrequencyGrid};
use crate::lti::RationalTransferFunction;

/// Slack added to every phase limit before a violation is flagged.
pub const PHASE_TOL: f64 = 1e-9;

/// Default truncation of the lag set: `-50..=50` without zero.
pub const DEFAULT_LAG_RANGE: i64 = 50;

fn shifted(g: &RationalTransferFunction, inv_k: f64, w: f64) -> Result<Complex64> {
    Ok(g.eval(w)? + inv_k)
}

/// Continuous phase along a sequence of responses: each step adds the
/// wrapped increment of the principal argument.
pub fn unwrap_phase(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev: Option<(f64, f64)> = None;
    for v in values {
        let p = v.arg();
        let phi = match prev {
            None => p,
            Some((pp, phi)) => phi + wrap_angle(p - pp),
        };
        out.push(phi);
        prev = Some((p, phi));
    }
    out
}

/// Evidence that no Altshuller multiplier (or, for `AllPeriods`, none at
/// any period) is suitable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum PhaseLimitWitness {
    /// Unwrapped phase differs by more than `pi` across a harmonic shift.
    Gap {
        period: f64,
        frequency: f64,
        n: i64,
        shifted_frequency: f64,
        gap: f64,
        /// Turns of `2 pi` added to the principal difference.
        winding: i64,
    },
    /// Phase at `(a/b) 2 pi / T` beyond `pi (1 - 1/b)`.
    Rational { period: f64, a: u64, b: u64, frequency: f64, phase: f64, bound: f64 },
    /// Feasible multiplier-exclusion LP.
    Lp {
        period: f64,
        beta: usize,
        p: Vec<u8>,
        n: Vec<u64>,
        frequencies: Vec<f64>,
        lambda: Vec<f64>,
        /// `max_l sum_r lambda_r Re{G (1 - e^{-j w_r l T})}`; `<= 0` certifies.
        objective: f64,
        exponent: LpExponent,
        lags: Vec<i64>,
    },
    /// Phase outside `[-pi/2, pi/2]`.
    AllPeriods { frequency: f64, phase: f64 },
}

impl PhaseLimitWitness {
    /// Re-evaluates the violation from principal values at the stored
    /// frequencies.
    pub fn recheck(&self, g: &RationalTransferFunction, k: f64) -> Result<bool> {
        let inv_k = inverse_slope(k)?;
        Ok(match self {
            PhaseLimitWitness::Gap { frequency, shifted_frequency, winding, .. } => {
                let p0 = shifted(g, inv_k, *frequency)?.arg();
                let p1 = shifted(g, inv_k, *shifted_frequency)?.arg();
                (p1 - p0 + 2.0 * PI * *winding as f64).abs() > PI + PHASE_TOL
            }
            PhaseLimitWitness::Rational { frequency, bound, .. } => {
                shifted(g, inv_k, *frequency)?.arg().abs() > bound + PHASE_TOL
            }
            PhaseLimitWitness::Lp { period, frequencies, lambda, exponent, lags, .. } => {
                let rows = lp_rows(g, inv_k, *period, frequencies, lags, *exponent)?;
                let worst = rows
                    .iter()
                    .map(|row| row.iter().zip(lambda).map(|(a, l)| a * l).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = lambda.iter().sum();
                worst <= lp_tol(&rows) && lambda.iter().all(|&l| l >= -1e-12) && (sum - 1.0).abs() < 1e-9
            }
            PhaseLimitWitness::AllPeriods { frequency, .. } => {
                shifted(g, inv_k, *frequency)?.arg().abs() > PI / 2.0 + PHASE_TOL
            }
        })
    }
}

/// First `(w, n)` in grid order, then `n` order, whose unwrapped phase gap
/// `|phi(w) - phi(w + 2 n pi / T)|` exceeds `pi`. Shifted frequencies off
/// the grid's range are skipped.
pub fn phase_gap_test(
    g: &RationalTransferFunction,
    k: f64,
    period: f64,
    grid: &FrequencyGrid,
    n_range: &[i64],
) -> Result<Option<PhaseLimitWitness>> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period {period} must be > 0")));
    }
    let inv_k = inverse_slope(k)?;
    grid.validate_for(g.domain())?;
    let pts = grid.points();
    let values: Vec<Complex64> =
        exec::map_indexed(pts.len(), |i| shifted(g, inv_k, pts[i])).into_iter().collect::<Result<_>>()?;
    let phi = unwrap_phase(&values);
    let (lo, hi) = (pts[0], pts[pts.len() - 1]);

    let phase_at = |w: f64| -> Result<(f64, f64)> {
        let i = pts.partition_point(|&p| p <= w).saturating_sub(1);
        let p = shifted(g, inv_k, w)?.arg();
        Ok((phi[i] + wrap_angle(p - values[i].arg()), p))
    };

    for (i, &w) in pts.iter().enumerate() {
        for &n in n_range {
            if n == 0 {
                continue;
            }
            let w1 = w + 2.0 * PI * n as f64 / period;
            if w1 < lo || w1 > hi {
                continue;
            }
            let (phi1, p1) = phase_at(w1)?;
            let gap = phi1 - phi[i];
            if gap.abs() > PI + PHASE_TOL {
                let p0 = values[i].arg();
                let winding = ((gap - (p1 - p0)) / (2.0 * PI)).round() as i64;
                return Ok(Some(PhaseLimitWitness::Gap {
                    period,
                    frequency: w,
                    n,
                    shifted_frequency: w1,
                    gap: gap.abs(),
                    winding,
                }));
            }
        }
    }
    Ok(None)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Every coprime `(a, b)` with `2 <= b <= b_max`, `1 <= a <= a_max` whose
/// phase at `(a/b) 2 pi / T` exceeds `pi (1 - 1/b)` in magnitude. Ordered
/// by `b`, then `a`.
pub fn rational_phase_limit_test(
    g: &RationalTransferFunction,
    k: f64,
    period: f64,
    a_max: u64,
    b_max: u64,
) -> Result<Vec<PhaseLimitWitness>> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period {period} must be > 0")));
    }
    let inv_k = inverse_slope(k)?;
    let mut out = Vec::new();
    for b in 2..=b_max {
        for a in 1..=a_max {
            if gcd(a, b) != 1 {
                continue;
            }
            let frequency = a as f64 / b as f64 * 2.0 * PI / period;
            let phase = shifted(g, inv_k, frequency)?.arg();
            let bound = PI * (1.0 - 1.0 / b as f64);
            if phase.abs() > bound + PHASE_TOL {
                out.push(PhaseLimitWitness::Rational { period, a, b, frequency, phase, bound });
            }
        }
    }
    Ok(out)
}

/// Smallest gain (to `tol`) at which `rational_phase_limit_test` first
/// reports a witness, with the witnesses just above it. `lo` must pass and
/// `hi` fail.
pub fn rational_threshold_gain(
    g: &RationalTransferFunction,
    k: f64,
    period: f64,
    a_max: u64,
    b_max: u64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, Vec<PhaseLimitWitness>)> {
    let clean = |s: f64| -> Result<bool> {
        Ok(rational_phase_limit_test(&g.with_gain(s), k, period, a_max, b_max)?.is_empty())
    };
    if !clean(lo)? || clean(hi)? {
        return Err(Error::InvalidArgument(format!("gain bracket [{lo}, {hi}] does not straddle the first violation")));
    }
    let (_, hi) = bisect_threshold(lo, hi, tol, clean)?;
    let w = rational_phase_limit_test(&g.with_gain(hi), k, period, a_max, b_max)?;
    Ok((hi, w))
}

/// How the lag enters the exponent of the exclusion LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpExponent {
    /// `e^{-j w_r l T}`: lags are multiples of the period.
    #[default]
    ScaledByPeriod,
    /// `e^{-j w_r l}` with integer `l`.
    Printed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptions {
    pub lags: Vec<i64>,
    pub exponent: LpExponent,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            lags: (-DEFAULT_LAG_RANGE..=DEFAULT_LAG_RANGE).filter(|&l| l != 0).collect(),
            exponent: LpExponent::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub frequencies: Vec<f64>,
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub feasible: bool,
}

fn lp_frequencies(period: f64, beta: usize, p: &[u8], n: &[u64]) -> Result<Vec<f64>> {
    if beta < 2 {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be > 1")));
    }
    if p.len() != beta - 1 || n.len() != beta - 1 {
        return Err(Error::InvalidArgument(format!(
            "need {} entries in p and n, got {} and {}",
            beta - 1,
            p.len(),
            n.len()
        )));
    }
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period {period} must be > 0")));
    }
    (1..beta)
        .map(|r| {
            let (pr, nr) = (p[r - 1], n[r - 1]);
            let admissible = (pr == 0) || (pr == 1 && nr >= 1);
            if !admissible {
                return Err(Error::DegenerateIndexSet);
            }
            let sign = if pr == 0 { 1.0 } else { -1.0 };
            Ok(sign * r as f64 * PI / (period * beta as f64) + 2.0 * PI * nr as f64 / period)
        })
        .collect()
}

fn lp_rows(
    g: &RationalTransferFunction,
    inv_k: f64,
    period: f64,
    freqs: &[f64],
    lags: &[i64],
    exponent: LpExponent,
) -> Result<Vec<Vec<f64>>> {
    let gv: Vec<Complex64> = freqs.iter().map(|&w| shifted(g, inv_k, w)).collect::<Result<_>>()?;
    let scale = match exponent {
        LpExponent::ScaledByPeriod => period,
        LpExponent::Printed => 1.0,
    };
    Ok(lags
        .iter()
        .map(|&l| {
            freqs
                .iter()
                .zip(&gv)
                .map(|(&w, gr)| {
                    let e = Complex64::from_polar(1.0, -w * l as f64 * scale);
                    (gr * (Complex64::new(1.0, 0.0) - e)).re
                })
                .collect()
        })
        .collect())
}

fn lp_tol(rows: &[Vec<f64>]) -> f64 {
    1e-12 * rows.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()))
}

/// `min_{lambda in simplex} max_l sum_r lambda_r Re{G(j w_r)(1 - e^{-j w_r l T})}`.
pub fn lp_phase_objective(
    g: &RationalTransferFunction,
    k: f64,
    period: f64,
    beta: usize,
    p: &[u8],
    n: &[u64],
    opts: &LpOptions,
) -> Result<LpSolution> {
    let inv_k = inverse_slope(k)?;
    if opts.lags.is_empty() {
        return Err(Error::InvalidArgument("empty lag set".into()));
    }
    let freqs = lp_frequencies(period, beta, p, n)?;
    let rows = lp_rows(g, inv_k, period, &freqs, &opts.lags, opts.exponent)?;
    let m = freqs.len();
    // Variables: lambda_1..lambda_m, t+, t-.
    let mut c = vec![0.0; m + 2];
    c[m] = 1.0;
    c[m + 1] = -1.0;
    let a_ub = rows
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.push(-1.0);
            r.push(1.0);
            r
        })
        .collect();
    let mut eq = vec![1.0; m];
    eq.extend([0.0, 0.0]);
    let lp = LinearProgram { c, a_ub, b_ub: vec![0.0; rows.len()], a_eq: vec![eq], b_eq: vec![1.0] };
    match lp.solve()? {
        LpOutcome::Optimal { x, objective } => Ok(LpSolution {
            frequencies: freqs,
            lambda: x[..m].to_vec(),
            objective,
            feasible: objective <= lp_tol(&rows),
        }),
        other => Err(Error::LinearProgram(format!("unexpected outcome {other:?}"))),
    }
}

/// Witness when the exclusion LP is feasible; `None` is inconclusive.
pub fn lp_phase_limit_test(
    g: &RationalTransferFunction,
    k: f64,
    period: f64,
    beta: usize,
    p: &[u8],
    n: &[u64],
    opts: &LpOptions,
) -> Result<Option<PhaseLimitWitness>> {
    let sol = lp_phase_objective(g, k, period, beta, p, n, opts)?;
    Ok(sol.feasible.then(|| PhaseLimitWitness::Lp {
        period,
        beta,
        p: p.to_vec(),
        n: n.to_vec(),
        frequencies: sol.frequencies,
        lambda: sol.lambda,
        objective: sol.objective,
        exponent: opts.exponent,
        lags: opts.lags.clone(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllPeriodReport {
    /// True when `|phase| <= pi/2` on the whole grid.
    pub holds: bool,
    pub sup_phase: f64,
    pub argmax_frequency: f64,
    /// First frequency at which `|phase|` crosses `pi/2`, located by
    /// bisection between grid neighbours.
    pub crossing_frequency: Option<f64>,
    pub witness: Option<PhaseLimitWitness>,
}

pub fn all_period_limit_test(g: &RationalTransferFunction, k: f64, grid: &FrequencyGrid) -> Result<AllPeriodReport> {
    g.require_stable()?;
    let inv_k = inverse_slope(k)?;
    grid.validate_for(g.domain())?;
    let pts = grid.points();
    let phases: Vec<f64> =
        exec::map_indexed(pts.len(), |i| Ok(shifted(g, inv_k, pts[i])?.arg())).into_iter().collect::<Result<_>>()?;
    let (mut imax, mut sup) = (0, f64::NEG_INFINITY);
    for (i, p) in phases.iter().enumerate() {
        if p.abs() > sup {
            sup = p.abs();
            imax = i;
        }
    }
    let limit = PI / 2.0 + PHASE_TOL;
    let holds = sup <= limit;
    let mut crossing = None;
    let mut witness = None;
    if let Some(i) = phases.iter().position(|p| p.abs() > limit) {
        witness = Some(PhaseLimitWitness::AllPeriods { frequency: pts[i], phase: phases[i] });
        crossing = Some(if i == 0 {
            pts[0]
        } else {
            let excess = |w: f64| -> Result<bool> { Ok(shifted(g, inv_k, w)?.arg().abs() <= PI / 2.0) };
            let (_, hi) = bisect_threshold(pts[i - 1], pts[i], 1e-12 * (1.0 + pts[i]), excess)?;
            hi
        });
    }
    Ok(AllPeriodReport { holds, sup_phase: sup, argmax_frequency: pts[imax], crossing_frequency: crossing, witness })
}
