use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Memoryless (possibly periodically time-varying) nonlinearity `N(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Linear {
        gain: f64,
    },
    /// `clamp(x, -limit, limit)`.
    Saturation {
        #[serde(default = "one")]
        limit: f64,
    },
    /// Zero on `[-width, width]`, slope one outside.
    Deadzone {
        width: f64,
    },
    /// Linear interpolation through `(x, y)` points, extended by the end
    /// slopes.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
    /// `N(t, x) = gains[i] x` on the i-th of `gains.len()` equal slices of
    /// each period.
    PeriodicGainSwitch {
        period: f64,
        gains: Vec<f64>,
    },
    /// `base(t, x + r(t)) - base(t, r(t))` for a reference input sequence
    /// `r`, indexed by sample and repeated with its length.
    Deviation {
        base: Box<Nonlinearity>,
        reference: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Nonlinearity::Linear { gain: 0.0 }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Nonlinearity::Linear { gain } => gain * x,
            Nonlinearity::Saturation { limit } => x.clamp(-limit, *limit),
            Nonlinearity::Deadzone { width } => {
                if x <= -width {
                    x + width
                } else if x >= *width {
                    x - width
                } else {
                    0.0
                }
            }
            Nonlinearity::PiecewiseLinear { points } => pwl(points, x),
            Nonlinearity::PeriodicGainSwitch { period, gains } => {
                let phase = t.rem_euclid(*period) / period;
                let i = ((phase * gains.len() as f64) as usize).min(gains.len() - 1);
                gains[i] * x
            }
            Nonlinearity::Deviation { base, reference } => {
                let n = t.round() as i64;
                let r = reference[n.rem_euclid(reference.len() as i64) as usize];
                base.eval(t, x + r) - base.eval(t, r)
            }
        }
    }

    /// Checks monotonicity and finite slopes; call once before simulating.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::NonmonotoneNonlinearity(m));
        match self {
            Nonlinearity::Linear { gain } if !(*gain >= 0.0 && gain.is_finite()) => {
                bad(format!("linear gain {gain} must be finite and >= 0"))
            }
            Nonlinearity::Saturation { limit } if !(*limit > 0.0 && limit.is_finite()) => {
                Err(Error::InvalidArgument(format!("saturation limit {limit} must be > 0")))
            }
            Nonlinearity::Deadzone { width } if !(*width >= 0.0 && width.is_finite()) => {
                Err(Error::InvalidArgument(format!("deadzone width {width} must be >= 0")))
            }
            Nonlinearity::PiecewiseLinear { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidArgument("piecewise-linear map needs 2 points".into()));
                }
                if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite breakpoint".into()));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidArgument("breakpoints must be strictly increasing in x".into()));
                    }
                    if w[1].1 < w[0].1 {
                        return bad(format!("decreasing segment between x={} and x={}", w[0].0, w[1].0));
                    }
                }
                Ok(())
            }
            Nonlinearity::PeriodicGainSwitch { period, gains } => {
                if !(*period > 0.0 && period.is_finite()) || gains.is_empty() {
                    return Err(Error::InvalidArgument("gain switch needs period > 0 and gains".into()));
                }
                if let Some(g) = gains.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
                    return bad(format!("negative or non-finite gain {g}"));
                }
                Ok(())
            }
            Nonlinearity::Deviation { base, reference } => {
                if reference.is_empty() {
                    return Err(Error::InvalidArgument("empty deviation reference".into()));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    /// Upper slope bound `k` (difference quotients lie in `[0, k]`).
    pub fn slope_bound(&self) -> f64 {
        match self {
            Nonlinearity::Linear { gain } => *gain,
            Nonlinearity::Saturation { .. } | Nonlinearity::Deadzone { .. } => 1.0,
            Nonlinearity::PiecewiseLinear { points } => {
                points.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).fold(0.0, f64::max)
            }
            Nonlinearity::PeriodicGainSwitch { gains, .. } => gains.iter().copied().fold(0.0, f64::max),
            Nonlinearity::Deviation { base, .. } => base.slope_bound(),
        }
    }

    /// `N(t, -x) = -N(t, x)`.
    pub fn is_odd(&self) -> bool {
        match self {
            Nonlinearity::PiecewiseLinear { points } => {
                let probes = points.iter().flat_map(|&(x, _)| [x, -x, 2.0 * x.abs() + 1.0]);
                probes.into_iter().all(|x| (pwl(points, -x) + pwl(points, x)).abs() <= 1e-12 * (1.0 + x.abs()))
            }
            Nonlinearity::Deviation { .. } => false,
            _ => true,
        }
    }

    /// Period of the time variation, if any.
    pub fn period(&self) -> Option<f64> {
        match self {
            Nonlinearity::PeriodicGainSwitch { period, .. } => Some(*period),
            Nonlinearity::Deviation { reference, .. } => Some(reference.len() as f64),
            _ => None,
        }
    }
}

fn pwl(points: &[(f64, f64)], x: f64) -> f64 {
    let n = points.len();
    let seg = if x <= points[0].0 {
        0
    } else if x >= points[n - 1].0 {
        n - 2
    } else {
        points.partition_point(|p| p.0 <= x) - 1
    };
    let ((x0, y0), (x1, y1)) = (points[seg], points[seg + 1]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_branches() {
        let q = Nonlinearity::Saturation { limit: 1.0 };
        assert_eq!(q.eval(0.0, -3.0), -1.0);
        assert_eq!(q.eval(0.0, 0.4), 0.4);
        assert_eq!(q.eval(0.0, 2.0), 1.0);
        assert!(q.is_odd());
        assert_eq!(q.slope_bound(), 1.0);
    }

    #[test]
    fn deadzone_branches() {
        let q = Nonlinearity::Deadzone { width: 0.2 };
        assert!((q.eval(0.0, -1.0) + 0.8).abs() < 1e-15);
        assert_eq!(q.eval(0.0, 0.1), 0.0);
        assert!((q.eval(0.0, 0.7) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn piecewise_linear() {
        let q = Nonlinearity::PiecewiseLinear { points: vec![(-1.0, -2.0), (0.0, 0.0), (1.0, 0.5)] };
        q.validate().unwrap();
        assert_eq!(q.eval(0.0, 0.5), 0.25);
        assert_eq!(q.eval(0.0, -2.0), -4.0);
        assert_eq!(q.eval(0.0, 3.0), 1.5);
        assert_eq!(q.slope_bound(), 2.0);
        assert!(!q.is_odd());
        let odd = Nonlinearity::PiecewiseLinear { points: vec![(-1.0, -0.5), (1.0, 0.5)] };
        assert!(odd.is_odd());
        let bad = Nonlinearity::PiecewiseLinear { points: vec![(0.0, 1.0), (1.0, 0.0)] };
        assert!(matches!(bad.validate(), Err(Error::NonmonotoneNonlinearity(_))));
    }

    #[test]
    fn gain_switch_is_periodic() {
        let q = Nonlinearity::PeriodicGainSwitch { period: 2.0, gains: vec![3.0, 0.5] };
        q.validate().unwrap();
        assert_eq!(q.eval(0.5, 1.0), 3.0);
        assert_eq!(q.eval(1.5, 1.0), 0.5);
        assert_eq!(q.eval(4.5, 1.0), q.eval(0.5, 1.0));
        assert_eq!(q.period(), Some(2.0));
        assert!(Nonlinearity::PeriodicGainSwitch { period: 1.0, gains: vec![-1.0] }.validate().is_err());
    }

    #[test]
    fn deviation_vanishes_at_zero() {
        let base = Nonlinearity::Deadzone { width: 0.2 };
        let q = Nonlinearity::Deviation { base: Box::new(base.clone()), reference: vec![0.5, -0.1, 0.9] };
        for n in 0..6 {
            assert_eq!(q.eval(n as f64, 0.0), 0.0);
        }
        assert_eq!(q.eval(3.0, 0.3), base.eval(0.0, 0.8) - base.eval(0.0, 0.5));
    }

    #[test]
    fn json() {
        let q: Nonlinearity = serde_json::from_str(r#"{"kind":"deadzone","width":0.5}"#).unwrap();
        assert_eq!(q, Nonlinearity::Deadzone { width: 0.5 });
        let q: Nonlinearity = serde_json::from_str(r#"{"kind":"saturation"}"#).unwrap();
        assert_eq!(q, Nonlinearity::Saturation { limit: 1.0 });
    }
}
