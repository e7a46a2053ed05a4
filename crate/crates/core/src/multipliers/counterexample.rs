//! A period-`T` nonlinearity and input that break positivity for a
//! multiplier with a tap off the period lattice.

use serde::Serialize;

use super::{Membership, MultiplierClass, TapMultiplier, PERIOD_CHECK_TOL};
use crate::error::{Error, Result};
use crate::lti::Domain;
use crate::sim::Nonlinearity;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCounterexample {
    pub period: f64,
    pub delta: f64,
    /// Off-lattice tap `(offset, coefficient)` the construction is built on.
    pub tap: (f64, f64),
    /// `offset mod T`, in `(0, T)`.
    pub tau: f64,
    /// Number of periods kept by the truncation.
    pub periods: usize,
    pub truncation: f64,
    /// `∫_0^T y (m * u)` for the untruncated periodic signals.
    pub per_period_value: f64,
    /// `∫ y (m * u)` over the truncated signals.
    pub inner_product: f64,
}

impl PositivityCounterexample {
    /// Gains of `N(t, ·)` on the first and second half of each period.
    pub fn gains(&self) -> [f64; 2] {
        [1.0 + self.delta, 1.0 / (1.0 + self.delta)]
    }

    /// The gain-switching nonlinearity as a simulator element.
    pub fn nonlinearity(&self) -> Nonlinearity {
        Nonlinearity::PeriodicGainSwitch { period: self.period, gains: self.gains().to_vec() }
    }

    /// Periodic input: 1 on the first half period, `1 + Δ` on the second.
    pub fn periodic_input(&self, t: f64) -> f64 {
        if t.rem_euclid(self.period) < self.period / 2.0 {
            1.0
        } else {
            1.0 + self.delta
        }
    }

    /// `N(t, x)`.
    pub fn apply(&self, t: f64, x: f64) -> f64 {
        let [g0, g1] = self.gains();
        if t.rem_euclid(self.period) < self.period / 2.0 {
            g0 * x
        } else {
            g1 * x
        }
    }

    /// Truncated input `u`.
    pub fn input(&self, t: f64) -> f64 {
        if (0.0..self.truncation).contains(&t) {
            self.periodic_input(t)
        } else {
            0.0
        }
    }

    pub fn output(&self, t: f64) -> f64 {
        self.apply(t, self.input(t))
    }
}

/// Smallest `Δ` on the 0.1 grid with `T(1 + Δ) - c Δ² < 0`.
pub(crate) fn pick_delta(period: f64, c: f64) -> f64 {
    let root = (period + (period * period + 4.0 * c * period).sqrt()) / (2.0 * c);
    let mut delta = (root * 10.0).ceil() / 10.0;
    while period * (1.0 + delta) - c * delta * delta >= 0.0 {
        delta = ((delta + 0.1) * 10.0).round() / 10.0;
    }
    delta
}

/// Builds the gain-switching counterexample for an OZF multiplier that is
/// not an Altshuller multiplier of period `period`.
pub fn construct_positivity_counterexample(m: &TapMultiplier, period: f64) -> Result<PositivityCounterexample> {
    if m.domain() != Domain::Continuous {
        return Err(Error::DomainMismatch("counterexample is built in continuous time".into()));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidArgument(format!("period {period} must be > 0")));
    }
    if let Membership::NotMember { reason } = m.with_class(MultiplierClass::Ozf)?.validate() {
        return Err(Error::InvalidMultiplier(format!("not an OZF multiplier: {reason}")));
    }

    // Off-lattice tap with the largest h * min(tau, T - tau).
    let mut best: Option<((f64, f64), f64, f64)> = None;
    for &(offset, coeff) in m.taps() {
        let q = offset / period;
        if coeff <= 0.0 || (q - q.round()).abs() <= PERIOD_CHECK_TOL * q.abs().max(1.0) {
            continue;
        }
        let tau = offset.rem_euclid(period);
        let c = coeff * tau.min(period - tau);
        if best.is_none_or(|(_, _, bc)| c > bc) {
            best = Some(((offset, coeff), tau, c));
        }
    }
    let (tap, tau, c) = best.ok_or(Error::NotACounterexampleCandidate)?;
    let delta = pick_delta(period, c);

    let per_period_value = periodic_value(m, period, delta);
    let mut cx = PositivityCounterexample {
        period,
        delta,
        tap,
        tau,
        periods: 0,
        truncation: 0.0,
        per_period_value,
        inner_product: f64::INFINITY,
    };
    // Edge effects of the truncation are bounded; grow until they are swamped.
    let mut periods = 4usize;
    loop {
        cx.periods = periods;
        cx.truncation = periods as f64 * period;
        cx.inner_product = truncated_inner_product(m, &cx);
        if cx.inner_product < 0.0 {
            return Ok(cx);
        }
        if periods > 1 << 20 {
            return Err(Error::InvalidArgument("truncation failed to go negative".into()));
        }
        periods *= 2;
    }
}

/// Closed form of `∫_0^T ȳ (m * ū)` for the periodic signals.
fn periodic_value(m: &TapMultiplier, period: f64, delta: f64) -> f64 {
    let base = period * (1.0 + delta);
    let mut v = base;
    for &(offset, coeff) in m.taps() {
        let tau = offset.rem_euclid(period);
        v -= coeff * (base + tau.min(period - tau) * delta * delta);
    }
    v
}

/// `∫ y(t) [u(t) - Σ h u(t - t_i)] dt` by exact piecewise-constant integration.
fn truncated_inner_product(m: &TapMultiplier, cx: &PositivityCounterexample) -> f64 {
    let half = cx.period / 2.0;
    let end = cx.truncation;
    let own = 2 * cx.periods;
    let mut total = 0.0;
    // Unshifted term: y * u over [0, end).
    for i in 0..own {
        let t = (i as f64 + 0.5) * half;
        total += half * cx.output(t) * cx.input(t);
    }
    for &(offset, coeff) in m.taps() {
        // Breakpoints of y and of u(· - offset) inside [0, end].
        let mut breaks: Vec<f64> = (0..=own).map(|i| i as f64 * half).collect();
        for i in 0..=own {
            let b = offset + i as f64 * half;
            if b > 0.0 && b < end {
                breaks.push(b);
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut acc = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b > a {
                let t = 0.5 * (a + b);
                acc += (b - a) * cx.output(t) * cx.input(t - offset);
            }
        }
        total -= coeff * acc;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tap(offset: f64, c: f64) -> TapMultiplier {
        TapMultiplier::new(Domain::Continuous, vec![(offset, c)], MultiplierClass::Ozf).unwrap()
    }

    /// Midpoint rule on a uniform grid; exact up to the cells that straddle
    /// a breakpoint.
    fn quadrature(m: &TapMultiplier, cx: &PositivityCounterexample, n: usize) -> f64 {
        let lo = -cx.period;
        let hi = cx.truncation + cx.period;
        let h = (hi - lo) / n as f64;
        (0..n)
            .map(|i| {
                let t = lo + (i as f64 + 0.5) * h;
                let mu = cx.input(t) - m.taps().iter().map(|&(o, c)| c * cx.input(t - o)).sum::<f64>();
                h * mu * cx.output(t)
            })
            .sum()
    }

    #[test]
    fn half_period_tap() {
        // 0.25 Δ² - Δ - 1 > 0  <=>  Δ > 2 + 2√2 ≈ 4.83
        let oracle = 2.0 + 2.0 * 2f64.sqrt();
        assert!(oracle > 4.8 && oracle < 4.9);
        let m = tap(0.5, 0.5);
        let cx = construct_positivity_counterexample(&m, 1.0).unwrap();
        assert_eq!(cx.delta, 4.9);
        let nl = cx.nonlinearity();
        nl.validate().unwrap();
        assert_eq!(nl.eval(0.2, 1.0), cx.apply(0.2, 1.0));
        assert_eq!(nl.eval(0.7, 2.0), cx.apply(0.7, 2.0));
        assert!(cx.per_period_value < 0.0);
        assert!(cx.inner_product < 0.0);
        let q = quadrature(&m, &cx, 400_000);
        assert!((q - cx.inner_product).abs() < 1e-3 * cx.inner_product.abs().max(1.0));
    }

    #[test]
    fn lagged_correlation_closed_form() {
        // ∫_0^T ū(t + τ) ȳ(t) dt = T(1+Δ) + min(τ, T-τ) Δ², against quadrature.
        let (period, delta) = (PI, 3.0);
        let cx = PositivityCounterexample {
            period,
            delta,
            tap: (0.0, 0.0),
            tau: 0.0,
            periods: 1,
            truncation: f64::INFINITY,
            per_period_value: 0.0,
            inner_product: 0.0,
        };
        for tau in [0.3, PI / 2.0, 2.5] {
            let n = 200_000;
            let h = period / n as f64;
            let q: f64 = (0..n)
                .map(|i| {
                    let t = (i as f64 + 0.5) * h;
                    h * cx.periodic_input(t + tau) * cx.apply(t, cx.periodic_input(t))
                })
                .sum();
            let closed = period * (1.0 + delta) + tau.min(period - tau) * delta * delta;
            assert!((q - closed).abs() < 1e-3, "tau {tau}: {q} vs {closed}");
        }
    }

    #[test]
    fn quarter_period_tap_at_pi() {
        let m = tap(PI / 2.0, 0.3);
        let cx = construct_positivity_counterexample(&m, PI).unwrap();
        let c = 0.3 * PI / 2.0;
        assert!(PI * (1.0 + cx.delta) - c * cx.delta * cx.delta < 0.0);
        let prev = cx.delta - 0.1;
        assert!(PI * (1.0 + prev) - c * prev * prev >= 0.0);
        assert!(cx.inner_product < 0.0);
        let q = quadrature(&m, &cx, 400_000);
        assert!((q - cx.inner_product).abs() < 1e-3 * cx.inner_product.abs().max(1.0));
    }

    #[test]
    fn lattice_multiplier_rejected() {
        let m =
            TapMultiplier::new(Domain::Continuous, vec![(PI, 0.2), (-2.0 * PI, 0.3)], MultiplierClass::Ozf).unwrap();
        assert_eq!(construct_positivity_counterexample(&m, PI), Err(Error::NotACounterexampleCandidate));
        let id = TapMultiplier::identity(Domain::Continuous, MultiplierClass::Ozf);
        assert!(construct_positivity_counterexample(&id, 1.0).is_err());
    }

    #[test]
    fn mixed_taps_and_negative_coefficients() {
        let m =
            TapMultiplier::new(Domain::Continuous, vec![(1.0, 0.3), (0.25, 0.1), (-1.7, 0.2)], MultiplierClass::Ozf)
                .unwrap();
        let cx = construct_positivity_counterexample(&m, 1.0).unwrap();
        assert_eq!(cx.tap, (-1.7, 0.2));
        assert!(cx.inner_product < 0.0);
        let q = quadrature(&m, &cx, 4_000_000);
        assert!((q - cx.inner_product).abs() < 1e-3 * cx.inner_product.abs().max(1.0));

        let bad = tap(0.5, -0.2);
        assert!(matches!(construct_positivity_counterexample(&bad, 1.0), Err(Error::InvalidMultiplier(_))));
    }
}
