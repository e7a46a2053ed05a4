//! Frequency-domain certificates for Lurye loops.

mod bounds;
pub mod lp;
mod phase;
mod search;
mod steady;
mod suitability;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::grid::{FrequencyGrid, GridMeta, REFINE_FACTOR, REFINE_PHASE_DEG};
use crate::lti::{Domain, FrequencyResponse, RationalTransferFunction};

pub use bounds::{
    gain_bound, gain_bound_with, quadratic_coefficients, BoundOptions, Channel, GainBoundReport, Signal, Table1Variant,
};
pub use phase::{
    all_period_limit_test, lp_phase_limit_test, lp_phase_objective, phase_gap_test, rational_phase_limit_test,
    rational_threshold_gain, unwrap_phase, AllPeriodReport, LpExponent, LpOptions, LpSolution, PhaseLimitWitness,
    PHASE_TOL,
};
pub use search::{search_multiplier, SearchForm, SearchObjective, SearchResult, SearchSpec};
pub use steady::{steady_state_map, SteadyState};
pub use suitability::{
    circle_criterion, critical_gain, suitability_curve, suitability_margin, CircleReport, CriticalGain,
    SuitabilityResult, EPS_TOL,
};

/// Grid on which analyses run when the caller does not supply one.
///
/// Continuous grids get one pass of local refinement wherever the phase of
/// `f` jumps by more than the refinement threshold between neighbours.
pub fn analysis_grid<F>(domain: Domain, density: Option<usize>, f: F) -> FrequencyGrid
where
    F: Fn(f64) -> Option<Complex64> + Sync + Send,
{
    let base = FrequencyGrid::default_for(domain, density);
    match domain {
        Domain::Discrete => base,
        Domain::Continuous => base.refined(f, REFINE_PHASE_DEG, REFINE_FACTOR),
    }
}

/// [`analysis_grid`] refined on the phase of `G` itself.
pub fn plant_grid(g: &RationalTransferFunction, density: Option<usize>) -> FrequencyGrid {
    analysis_grid(g.domain(), density, |w| g.eval(w).ok())
}

/// `1/k`, with `k = inf` meaning a monotone nonlinearity with no slope bound.
pub(crate) fn inverse_slope(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("slope bound k = {k} must be > 0")));
    }
    Ok(if k.is_infinite() { 0.0 } else { 1.0 / k })
}

/// `k` as reported: `None` for an unbounded slope.
pub(crate) fn reported_slope(k: f64) -> Option<f64> {
    k.is_finite().then_some(k)
}

pub(crate) fn check_domains(a: &dyn FrequencyResponse, b: &dyn FrequencyResponse, grid: &FrequencyGrid) -> Result<()> {
    if a.domain() != b.domain() {
        return Err(Error::DomainMismatch(format!("multiplier is {} but plant is {}", a.domain(), b.domain())));
    }
    grid.validate_for(b.domain())
}

/// Grid summary carried by every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(flatten)]
    pub meta: GridMeta,
}

impl GridSummary {
    pub fn of(grid: &FrequencyGrid) -> Self {
        let p = grid.points();
        GridSummary { points: p.len(), lo: p[0], hi: p[p.len() - 1], meta: grid.meta().clone() }
    }
}

/// Bisection on a pass/fail predicate assumed monotone in `s`: `pass(lo)`
/// holds and `pass(hi)` does not. Returns the final `(lo, hi)` bracket,
/// `hi - lo <= tol`.
pub fn bisect_threshold<P>(mut lo: f64, mut hi: f64, tol: f64, pass: P) -> Result<(f64, f64)>
where
    P: Fn(f64) -> Result<bool>,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pass(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

const GOLDEN_TOP_PEAKS: usize = 5;
const GOLDEN_MAX_ITERS: usize = 100;

/// Sup of `f` given its samples on `points`: the grid maximum, improved by
/// golden-section search around the largest few local maxima.
pub(crate) fn refine_sup<F>(points: &[f64], values: &[f64], f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = points.len();
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut best_w = points[best_i];
    if n < 2 {
        return Ok((best, best_w));
    }
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || values[i] >= values[i - 1]) && (i + 1 == n || values[i] >= values[i + 1]))
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(GOLDEN_TOP_PEAKS);
    for i in peaks {
        let lo = points[i.saturating_sub(1)];
        let hi = points[(i + 1).min(n - 1)];
        let (w, v) = golden_max(&f, lo, hi)?;
        if v > best {
            best = v;
            best_w = w;
        }
    }
    Ok((best, best_w))
}

fn golden_max<F>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..GOLDEN_MAX_ITERS {
        if b - a < 1e-10 * (1.0 + x1.abs()) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}
