//! Frequency grids used to discretise "for all w" conditions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Domain;
use crate::error::{Error, Result};
use crate::exec;

/// Base density of the default continuous grid, in points per decade.
pub const CONTINUOUS_POINTS_PER_DECADE: usize = 2000;
/// Number of points in the default discrete grid on `[0, pi]`.
pub const DISCRETE_POINTS: usize = 4096;
/// Neighbouring samples whose phase differs by more than this get refined.
pub const REFINE_PHASE_DEG: f64 = 2.0;
pub const REFINE_FACTOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    LogSpaced { lo: f64, hi: f64, per_decade: usize, with_zero: bool },
    Uniform { lo: f64, hi: f64, n: usize },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub kind: GridKind,
    /// Number of intervals subdivided by [`FrequencyGrid::refined`].
    pub refined_intervals: usize,
    pub refinement_factor: usize,
}

/// Strictly increasing list of evaluation frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    meta: GridMeta,
}

impl FrequencyGrid {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("frequency grid is empty".into()));
        }
        if points.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("frequency grid has non-finite points".into()));
        }
        if points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidArgument("frequency grid is not strictly increasing".into()));
        }
        Ok(Self { points, meta: GridMeta { kind: GridKind::Custom, refined_intervals: 0, refinement_factor: 1 } })
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!("bad uniform grid [{lo}, {hi}] x {n}")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        points[n - 1] = hi;
        Ok(Self {
            points,
            meta: GridMeta { kind: GridKind::Uniform { lo, hi, n }, refined_intervals: 0, refinement_factor: 1 },
        })
    }

    /// Log-spaced points on `[lo, hi]`, optionally preceded by `w = 0`.
    pub fn log_spaced(lo: f64, hi: f64, per_decade: usize, with_zero: bool) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || per_decade == 0 {
            return Err(Error::InvalidArgument(format!("bad log grid [{lo}, {hi}]")));
        }
        let decades = (hi / lo).log10();
        let n = (decades * per_decade as f64).round() as usize + 1;
        let mut points = Vec::with_capacity(n + 1);
        if with_zero {
            points.push(0.0);
        }
        let (l0, l1) = (lo.log10(), hi.log10());
        for i in 0..n {
            points.push(10f64.powf(l0 + (l1 - l0) * i as f64 / (n - 1) as f64));
        }
        Ok(Self {
            points,
            meta: GridMeta {
                kind: GridKind::LogSpaced { lo, hi, per_decade, with_zero },
                refined_intervals: 0,
                refinement_factor: 1,
            },
        })
    }

    /// `{0} ∪ [1e-3, 1e4]` rad/s at `per_decade` log-spaced points per decade.
    pub fn continuous_default(per_decade: usize) -> Self {
        Self::log_spaced(1e-3, 1e4, per_decade, true).expect("static grid")
    }

    /// Uniform on `[0, pi]` rad/sample.
    pub fn discrete_default(n: usize) -> Self {
        Self::uniform(0.0, PI, n).expect("static grid")
    }

    /// Default grid for a domain; `density` overrides the base density.
    pub fn default_for(domain: Domain, density: Option<usize>) -> Self {
        match domain {
            Domain::Continuous => Self::continuous_default(density.unwrap_or(CONTINUOUS_POINTS_PER_DECADE)),
            Domain::Discrete => Self::discrete_default(density.unwrap_or(DISCRETE_POINTS)),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn meta(&self) -> &GridMeta {
        &self.meta
    }

    /// Checks the domain-specific range constraint.
    pub fn validate_for(&self, domain: Domain) -> Result<()> {
        if domain == Domain::Discrete {
            let (lo, hi) = (self.points[0], *self.points.last().unwrap());
            if lo < 0.0 || hi > PI + 1e-12 {
                return Err(Error::InvalidArgument(format!("discrete grid must lie in [0, pi], got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Union with another grid (used to show monotonicity of suprema).
    pub fn merged(&self, other: &FrequencyGrid) -> FrequencyGrid {
        let mut points: Vec<f64> = self.points.iter().chain(other.points.iter()).copied().collect();
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        FrequencyGrid { points, meta: GridMeta { kind: GridKind::Custom, refined_intervals: 0, refinement_factor: 1 } }
    }

    /// One pass of local refinement: every interval across which the phase
    /// of `f` jumps by more than `threshold_deg` is split into `factor`
    /// equal sub-intervals.
    pub fn refined<F>(&self, f: F, threshold_deg: f64, factor: usize) -> FrequencyGrid
    where
        F: Fn(f64) -> Option<Complex64> + Sync + Send,
    {
        let values = exec::map_indexed(self.points.len(), |i| f(self.points[i]));
        let threshold = threshold_deg.to_radians();
        let mut points = Vec::with_capacity(self.points.len());
        let mut refined_intervals = 0;
        for i in 0..self.points.len() {
            points.push(self.points[i]);
            if i + 1 == self.points.len() {
                break;
            }
            let jump = match (values[i], values[i + 1]) {
                (Some(a), Some(b)) => wrap_angle(b.arg() - a.arg()).abs(),
                _ => 0.0,
            };
            if jump > threshold && factor > 1 {
                refined_intervals += 1;
                let (lo, hi) = (self.points[i], self.points[i + 1]);
                for k in 1..factor {
                    points.push(lo + (hi - lo) * k as f64 / factor as f64);
                }
            }
        }
        FrequencyGrid {
            points,
            meta: GridMeta {
                kind: self.meta.kind.clone(),
                refined_intervals: self.meta.refined_intervals + refined_intervals,
                refinement_factor: factor,
            },
        }
    }
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x <= -PI {
        x += 2.0 * PI;
    }
    x
}
