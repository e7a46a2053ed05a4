//! Rational transfer functions in `s` and `z`.

pub mod grid;
pub mod poly;
mod realization;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use grid::{wrap_angle, FrequencyGrid, GridKind, GridMeta};
pub use realization::StateSpaceRealization;

use crate::error::{Error, Result};

/// Poles this close to the stability boundary get their own verdict.
pub const MARGINAL_POLE_TOL: f64 = 1e-9;
/// Relative threshold on `|den(p)|` for a pole on the evaluation contour.
pub const CONTOUR_POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "s", alias = "continuous")]
    Continuous,
    #[serde(rename = "z", alias = "discrete")]
    Discrete,
}

impl Domain {
    /// Evaluation point on the contour: `jw` or `e^{jw}`.
    pub fn contour_point(self, w: f64) -> Complex64 {
        match self {
            Domain::Continuous => Complex64::new(0.0, w),
            Domain::Discrete => Complex64::from_polar(1.0, w),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Continuous => "s",
            Domain::Discrete => "z",
        })
    }
}

/// Anything with a frequency response on the imaginary axis / unit circle.
pub trait FrequencyResponse: Sync {
    fn domain(&self) -> Domain;
    fn response(&self, w: f64) -> Result<Complex64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    MarginallyStable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub verdict: Stability,
    pub poles: Vec<Complex64>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == Stability::Stable
    }
}

/// `gain * num(p) / den(p)`, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfRepr", into = "TfRepr")]
pub struct RationalTransferFunction {
    domain: Domain,
    num: Vec<f64>,
    den: Vec<f64>,
    gain: f64,
}

#[derive(Serialize, Deserialize)]
struct TfRepr {
    domain: Domain,
    num: Vec<f64>,
    den: Vec<f64>,
    #[serde(default = "one")]
    g: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<TfRepr> for RationalTransferFunction {
    type Error = Error;
    fn try_from(r: TfRepr) -> Result<Self> {
        Self::new(r.domain, r.num, r.den, r.g)
    }
}

impl From<RationalTransferFunction> for TfRepr {
    fn from(t: RationalTransferFunction) -> Self {
        TfRepr { domain: t.domain, num: t.num, den: t.den, g: t.gain }
    }
}

impl RationalTransferFunction {
    pub fn new(domain: Domain, num: Vec<f64>, den: Vec<f64>, gain: f64) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidTransferFunction("empty coefficient list".into()));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) || !gain.is_finite() {
            return Err(Error::InvalidTransferFunction("non-finite coefficient".into()));
        }
        let den = poly::trim(&den);
        if den == [0.0] {
            return Err(Error::InvalidTransferFunction("zero denominator".into()));
        }
        Ok(Self { domain, num: poly::trim(&num), den, gain })
    }

    pub fn continuous(num: &[f64], den: &[f64], gain: f64) -> Result<Self> {
        Self::new(Domain::Continuous, num.to_vec(), den.to_vec(), gain)
    }

    pub fn discrete(num: &[f64], den: &[f64], gain: f64) -> Result<Self> {
        Self::new(Domain::Discrete, num.to_vec(), den.to_vec(), gain)
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        Self::new(domain, vec![1.0], vec![1.0], c).expect("finite constant")
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn num_degree(&self) -> usize {
        self.num.len() - 1
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        self.num_degree() <= self.den_degree() || self.is_zero()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num_degree() < self.den_degree() || self.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.gain == 0.0 || self.num == [0.0]
    }

    /// Same polynomials, different scalar gain.
    pub fn with_gain(&self, gain: f64) -> Self {
        Self { gain, ..self.clone() }
    }

    /// `c + self`, folded into a single fraction with unit gain.
    pub fn plus_constant(&self, c: f64) -> Self {
        let num = poly::add(&poly::scale(&self.den, c), &poly::scale(&self.num, self.gain));
        Self { domain: self.domain, num, den: self.den.clone(), gain: 1.0 }
    }

    /// Frequency response at `w`. Negative frequencies are evaluated as the
    /// conjugate of `+|w|`, so `H(-w) = conj(H(w))` holds bit for bit.
    pub fn eval(&self, w: f64) -> Result<Complex64> {
        if !w.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite frequency {w}")));
        }
        let v = self.eval_nonneg(w.abs())?;
        Ok(if w < 0.0 { v.conj() } else { v })
    }

    fn eval_nonneg(&self, w: f64) -> Result<Complex64> {
        let w = match self.domain {
            // Reduce into [0, 2pi) so that periodicity is exact too.
            Domain::Discrete => w.rem_euclid(2.0 * std::f64::consts::PI),
            Domain::Continuous => w,
        };
        let p = self.domain.contour_point(w);
        let d = poly::eval(&self.den, p);
        if d.norm() < CONTOUR_POLE_TOL * poly::norm(&self.den) {
            return Err(Error::PoleOnEvaluationContour { frequency: w });
        }
        Ok(poly::eval(&self.num, p) / d * self.gain)
    }

    /// Evaluation at an arbitrary complex point (no contour checks).
    pub fn eval_at(&self, p: Complex64) -> Complex64 {
        poly::eval(&self.num, p) / poly::eval(&self.den, p) * self.gain
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        poly::roots(&self.den)
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        poly::roots(&self.num)
    }

    pub fn stability(&self) -> Result<StabilityReport> {
        let poles = self.poles()?;
        let distance = |p: &Complex64| match self.domain {
            Domain::Continuous => p.re,
            Domain::Discrete => p.norm() - 1.0,
        };
        let verdict = if poles.iter().any(|p| distance(p) >= MARGINAL_POLE_TOL) {
            Stability::Unstable
        } else if poles.iter().any(|p| distance(p) > -MARGINAL_POLE_TOL) {
            Stability::MarginallyStable
        } else {
            Stability::Stable
        };
        Ok(StabilityReport { verdict, poles })
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.stability()?.is_stable())
    }

    /// Errors with [`Error::UnstablePlant`] unless strictly stable.
    pub fn require_stable(&self) -> Result<()> {
        let report = self.stability()?;
        if report.is_stable() {
            Ok(())
        } else {
            let poles: Vec<String> = report.poles.iter().map(|p| format!("{p:.6}")).collect();
            Err(Error::UnstablePlant { poles: poles.join(", ") })
        }
    }

    /// Value at `w = 0`, i.e. `s = 0` or `z = 1`.
    pub fn dc_gain(&self) -> Result<f64> {
        let v = self.eval(0.0)?;
        debug_assert!(v.im.abs() < 1e-12);
        Ok(v.re)
    }

    /// Controllable canonical realization.
    pub fn to_state_space(&self) -> Result<StateSpaceRealization> {
        StateSpaceRealization::from_transfer_function(self)
    }
}

impl FrequencyResponse for RationalTransferFunction {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn response(&self, w: f64) -> Result<Complex64> {
        self.eval(w)
    }
}

impl fmt::Display for RationalTransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * {:?} / {:?} ({})", self.gain, self.num, self.den, self.domain)
    }
}
