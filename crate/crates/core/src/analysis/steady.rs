use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::RationalTransferFunction;
use crate::sim::Nonlinearity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub u2: f64,
    pub y2: f64,
    pub dc_gain: f64,
    pub residual: f64,
}

/// Constant solution of the loop for constant `r2` (and `r1 = 0`):
/// `u2 = r2 - g y2`, `y2 = phi(u2)` with `g = G(0)`, found by bisection on
/// `u + g phi(u) - r2`.
pub fn steady_state_map(g: &RationalTransferFunction, phi: &Nonlinearity, r2: f64) -> Result<SteadyState> {
    phi.validate()?;
    if phi.period().is_some() {
        return Err(Error::InvalidArgument("steady-state map needs a time-invariant nonlinearity".into()));
    }
    g.require_stable()?;
    let dc = g.dc_gain()?;
    let k = phi.slope_bound();
    if dc < 0.0 && !(1.0 + dc * k > 0.0) {
        return Err(Error::NoUniqueSteadyState(format!("1 + G(0) k = {} is not positive", 1.0 + dc * k)));
    }
    let f = |u: f64| u + dc * phi.eval(0.0, u) - r2;
    let mut step = 1.0 + r2.abs();
    let (mut lo, mut hi) = (-step, step);
    while f(lo) > 0.0 || f(hi) < 0.0 {
        step *= 2.0;
        lo = -step;
        hi = step;
        if step > 1e300 {
            return Err(Error::NoUniqueSteadyState("no sign change found".into()));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Ok(SteadyState { u2: u, y2: phi.eval(0.0, u), dc_gain: dc, residual: f(u) })
}
