use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{bisect_threshold, check_domains, inverse_slope, reported_slope, GridSummary};
use crate::error::{Error, Result};
use crate::exec;
use crate::lti::grid::FrequencyGrid;
use crate::lti::{FrequencyResponse, RationalTransferFunction};
use crate::multipliers::Multiplier;

/// A multiplier is suitable when its margin exceeds this.
pub const EPS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityResult {
    /// `min_w Re{M(w) (1/k + G(w))}` over the grid.
    pub margin: f64,
    pub argmin_frequency: f64,
    pub suitable: bool,
    pub eps: f64,
    /// `None` when the slope is unbounded.
    pub k: Option<f64>,
    pub multiplier: String,
    pub grid: GridSummary,
}

pub(crate) fn pointwise_margin(m: Complex64, g: Complex64, inv_k: f64) -> f64 {
    (m * (g + inv_k)).re
}

/// `Re{M(w) (1/k + G(w))}` at every grid point.
pub fn suitability_curve(
    m: &Multiplier,
    g: &RationalTransferFunction,
    k: f64,
    grid: &FrequencyGrid,
) -> Result<Vec<f64>> {
    let inv_k = inverse_slope(k)?;
    check_domains(m, g, grid)?;
    let pts = grid.points();
    exec::map_indexed(pts.len(), |i| {
        let w = pts[i];
        Ok(pointwise_margin(m.response(w)?, g.eval(w)?, inv_k))
    })
    .into_iter()
    .collect()
}

pub fn suitability_margin(
    m: &Multiplier,
    g: &RationalTransferFunction,
    k: f64,
    grid: &FrequencyGrid,
) -> Result<SuitabilityResult> {
    g.require_stable()?;
    if !m.validate().is_accepted() {
        return Err(Error::InvalidMultiplier(format!("{} fails class validation", m.describe())));
    }
    let curve = suitability_curve(m, g, k, grid)?;
    let (mut i_min, mut margin) = (0, f64::INFINITY);
    for (i, &v) in curve.iter().enumerate() {
        if v < margin {
            margin = v;
            i_min = i;
        }
    }
    Ok(SuitabilityResult {
        margin,
        argmin_frequency: grid.points()[i_min],
        suitable: margin > EPS_TOL,
        eps: EPS_TOL,
        k: reported_slope(k),
        multiplier: m.describe(),
        grid: GridSummary::of(grid),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleReport {
    pub gain: f64,
    pub result: SuitabilityResult,
}

/// Suitability with the identity multiplier.
pub fn circle_criterion(g: &RationalTransferFunction, k: f64, grid: &FrequencyGrid) -> Result<CircleReport> {
    let m = Multiplier::identity(g.domain());
    Ok(CircleReport { gain: g.gain(), result: suitability_margin(&m, g, k, grid)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalGain {
    /// Largest gain found to pass; `None` if every gain tried passed.
    pub gain: Option<f64>,
    /// Smallest gain found to fail.
    pub failing: Option<f64>,
    pub tol: f64,
}

const MAX_DOUBLINGS: usize = 60;

/// Largest gain scale `s` for which `passes(s)` holds, by doubling then
/// bisection to `tol`. `passes` is assumed to hold on `(0, s*)` only.
pub fn critical_gain<P>(tol: f64, passes: P) -> Result<CriticalGain>
where
    P: Fn(f64) -> Result<bool>,
{
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut doublings = 0;
    while passes(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Ok(CriticalGain { gain: None, failing: None, tol });
        }
    }
    let (lo, hi) = bisect_threshold(lo, hi, tol, passes)?;
    Ok(CriticalGain { gain: Some(lo), failing: Some(hi), tol })
}

impl CriticalGain {
    /// Circle-criterion threshold for the gain of `g` (its numerator
    /// coefficients are kept; only the leading gain is swept).
    pub fn circle(g: &RationalTransferFunction, k: f64, grid: &FrequencyGrid, tol: f64) -> Result<Self> {
        g.require_stable()?;
        let m = Multiplier::identity(g.domain());
        critical_gain(tol, |s| {
            let gs = g.with_gain(s);
            let curve = suitability_curve(&m, &gs, k, grid)?;
            Ok(curve.iter().all(|&v| v > EPS_TOL))
        })
    }
}
