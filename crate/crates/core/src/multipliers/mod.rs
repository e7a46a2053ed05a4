//! Delay-tap and first-order rational multipliers.

mod counterexample;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use counterexample::{construct_positivity_counterexample, PositivityCounterexample};

use crate::error::{Error, Result};
use crate::lti::{Domain, FrequencyResponse, RationalTransferFunction};

/// Sums within this of 1 are rejected as non-strict.
pub const STRICT_SUM_TOL: f64 = 1e-12;
/// Relative tolerance for taps on the period lattice during validation.
pub const LATTICE_TOL: f64 = 1e-12;
/// Relative tolerance used by [`TapMultiplier::altshuller_period_check`].
pub const PERIOD_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierClass {
    /// Nonnegative taps summing below one.
    Ozf,
    /// Signed taps with absolute sum below one; valid for odd nonlinearities.
    OzfOdd,
    /// OZF taps restricted to nonzero multiples of the period.
    Altshuller(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport {
    pub period: f64,
    /// Nearest multiple of the period for each tap.
    pub multiples: Vec<i64>,
    pub on_lattice: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Membership {
    Member {
        /// `1 - sum` (or `1 - sum |h|` for the odd class).
        sum_margin: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        lattice: Option<LatticeReport>,
    },
    NotMember {
        reason: String,
    },
    /// Membership taken on the user's word.
    Asserted {
        note: String,
    },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }

    /// Member or asserted member.
    pub fn is_accepted(&self) -> bool {
        !matches!(self, Membership::NotMember { .. })
    }
}

/// `M = 1 - sum_i h_i e^{-j w t_i}` with `t_i` in seconds or samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TapRepr", into = "TapRepr")]
pub struct TapMultiplier {
    domain: Domain,
    taps: Vec<(f64, f64)>,
    class: MultiplierClass,
}

#[derive(Serialize, Deserialize)]
struct TapRepr {
    domain: Domain,
    taps: Vec<(f64, f64)>,
    #[serde(default = "default_class")]
    class: MultiplierClass,
}

fn default_class() -> MultiplierClass {
    MultiplierClass::Ozf
}

impl TryFrom<TapRepr> for TapMultiplier {
    type Error = Error;
    fn try_from(r: TapRepr) -> Result<Self> {
        Self::new(r.domain, r.taps, r.class)
    }
}

impl From<TapMultiplier> for TapRepr {
    fn from(m: TapMultiplier) -> Self {
        TapRepr { domain: m.domain, taps: m.taps, class: m.class }
    }
}

impl TapMultiplier {
    pub fn new(domain: Domain, taps: Vec<(f64, f64)>, class: MultiplierClass) -> Result<Self> {
        for &(offset, coeff) in &taps {
            if !offset.is_finite() || !coeff.is_finite() {
                return Err(Error::InvalidMultiplier("non-finite tap".into()));
            }
            if offset == 0.0 {
                return Err(Error::InvalidMultiplier("tap at offset 0".into()));
            }
            if domain == Domain::Discrete && offset.fract() != 0.0 {
                return Err(Error::InvalidMultiplier(format!("discrete tap offset {offset} is not an integer")));
            }
        }
        if let MultiplierClass::Altshuller(t) = class {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidMultiplier(format!("Altshuller period {t} must be > 0")));
            }
        }
        Ok(Self { domain, taps, class })
    }

    pub fn identity(domain: Domain, class: MultiplierClass) -> Self {
        Self { domain, taps: Vec::new(), class }
    }

    /// `1 - c z^{-k}`; a negative `k` gives an anticausal tap.
    pub fn discrete_tap(k: i64, c: f64, class: MultiplierClass) -> Result<Self> {
        Self::new(Domain::Discrete, vec![(k as f64, c)], class)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn taps(&self) -> &[(f64, f64)] {
        &self.taps
    }

    pub fn class(&self) -> MultiplierClass {
        self.class
    }

    pub fn with_class(&self, class: MultiplierClass) -> Result<Self> {
        Self::new(self.domain, self.taps.clone(), class)
    }

    pub fn is_identity(&self) -> bool {
        self.taps.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn eval(&self, w: f64) -> Complex64 {
        let wa = w.abs();
        let mut v = Complex64::new(1.0, 0.0);
        for &(offset, coeff) in &self.taps {
            v -= Complex64::from_polar(coeff, -wa * offset);
        }
        if w < 0.0 {
            v.conj()
        } else {
            v
        }
    }

    pub fn validate(&self) -> Membership {
        validate_taps(&self.taps, self.class)
    }

    /// True iff every offset is a nonzero multiple of `period` (relative
    /// tolerance 1e-9) and the coefficients satisfy the OZF conditions.
    pub fn altshuller_period_check(&self, period: f64) -> bool {
        if !(period > 0.0) {
            return false;
        }
        let on_lattice = self.taps.iter().all(|&(offset, _)| {
            let q = offset / period;
            let n = q.round();
            n != 0.0 && (q - n).abs() <= PERIOD_CHECK_TOL * q.abs().max(1.0)
        });
        on_lattice && validate_taps(&self.taps, MultiplierClass::Ozf).is_member()
    }

    pub fn describe(&self) -> String {
        if self.taps.is_empty() {
            return "1".into();
        }
        let var = match self.domain {
            Domain::Discrete => "z",
            Domain::Continuous => "e^{-jw",
        };
        let mut s = String::from("1");
        for &(offset, coeff) in &self.taps {
            let sign = if coeff >= 0.0 { '-' } else { '+' };
            match self.domain {
                Domain::Discrete => s.push_str(&format!(" {sign} {}{var}^{}", coeff.abs(), -offset as i64)),
                Domain::Continuous => s.push_str(&format!(" {sign} {}{var}*{offset}}}", coeff.abs())),
            }
        }
        s
    }
}

fn nearest_multiples(taps: &[(f64, f64)], period: f64) -> (Vec<i64>, bool) {
    let mut on = true;
    let multiples = taps
        .iter()
        .map(|&(offset, _)| {
            let q = offset / period;
            let n = q.round();
            if n == 0.0 || (q - n).abs() > LATTICE_TOL * q.abs().max(1.0) {
                on = false;
            }
            n as i64
        })
        .collect();
    (multiples, on)
}

fn validate_taps(taps: &[(f64, f64)], class: MultiplierClass) -> Membership {
    let not = |reason: String| Membership::NotMember { reason };
    if let Some(&(o, _)) = taps.iter().find(|&&(o, c)| o == 0.0 || !o.is_finite() || !c.is_finite()) {
        return not(format!("invalid tap offset {o}"));
    }
    let signed = matches!(class, MultiplierClass::OzfOdd);
    if !signed {
        if let Some(&(o, c)) = taps.iter().find(|&&(_, c)| c < 0.0) {
            return not(format!("negative coefficient {c} at offset {o}"));
        }
    }
    let sum: f64 = taps.iter().map(|&(_, c)| c.abs()).sum();
    if (sum - 1.0).abs() <= STRICT_SUM_TOL {
        return not(format!("non-strict sum {sum}"));
    }
    if sum > 1.0 {
        return not(format!("coefficient sum {sum} is not below 1"));
    }
    let lattice = match class {
        MultiplierClass::Altshuller(period) => {
            let (multiples, on_lattice) = nearest_multiples(taps, period);
            if !on_lattice {
                return not(format!("taps are not on the lattice of period {period}"));
            }
            Some(LatticeReport { period, multiples, on_lattice })
        }
        _ => None,
    };
    Membership::Member { sum_margin: 1.0 - sum, lattice }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipEvidence {
    ValidatedFirstOrder,
    UserAsserted,
}

/// A rational multiplier. Only first-order leads `(1 + a s)/(1 + b s)` with
/// `0 <= b < a` are validated automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RationalRepr", into = "RationalRepr")]
pub struct RationalMultiplier {
    tf: RationalTransferFunction,
    class: MultiplierClass,
    evidence: MembershipEvidence,
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    #[serde(flatten)]
    tf: RationalTransferFunction,
    #[serde(default = "default_class")]
    class: MultiplierClass,
    #[serde(default)]
    asserted: bool,
}

impl TryFrom<RationalRepr> for RationalMultiplier {
    type Error = Error;
    fn try_from(r: RationalRepr) -> Result<Self> {
        if r.asserted {
            Ok(Self::asserted(r.tf, r.class))
        } else {
            Self::new(r.tf, r.class)
        }
    }
}

impl From<RationalMultiplier> for RationalRepr {
    fn from(m: RationalMultiplier) -> Self {
        RationalRepr { tf: m.tf, class: m.class, asserted: m.evidence == MembershipEvidence::UserAsserted }
    }
}

impl RationalMultiplier {
    /// Accepts only first-order leads; anything else needs [`Self::asserted`].
    pub fn new(tf: RationalTransferFunction, class: MultiplierClass) -> Result<Self> {
        match first_order_lead(&tf) {
            Some(_) => Ok(Self { tf, class, evidence: MembershipEvidence::ValidatedFirstOrder }),
            None => Err(Error::InvalidMultiplier(
                "only first-order leads (1+as)/(1+bs), 0 <= b < a, are validated; \
                 assert membership explicitly for other forms"
                    .into(),
            )),
        }
    }

    pub fn asserted(tf: RationalTransferFunction, class: MultiplierClass) -> Self {
        Self { tf, class, evidence: MembershipEvidence::UserAsserted }
    }

    /// `(1 + a s)/(1 + b s)`.
    pub fn lead(a: f64, b: f64) -> Result<Self> {
        let tf = RationalTransferFunction::continuous(&[a, 1.0], &[b, 1.0], 1.0)?;
        Self::new(tf, MultiplierClass::Ozf)
    }

    pub fn tf(&self) -> &RationalTransferFunction {
        &self.tf
    }

    pub fn class(&self) -> MultiplierClass {
        self.class
    }

    pub fn evidence(&self) -> MembershipEvidence {
        self.evidence
    }

    pub fn validate(&self) -> Membership {
        match self.evidence {
            MembershipEvidence::ValidatedFirstOrder => {
                let (a, b, _) = first_order_lead(&self.tf).expect("checked on construction");
                Membership::Member { sum_margin: b / a, lattice: None }
            }
            MembershipEvidence::UserAsserted => {
                Membership::Asserted { note: "membership of a general rational multiplier asserted by the user".into() }
            }
        }
    }
}

/// `(a, b, dc)` if `tf = dc * (1 + a s)/(1 + b s)` with `dc > 0`, `0 <= b < a`.
fn first_order_lead(tf: &RationalTransferFunction) -> Option<(f64, f64, f64)> {
    if tf.domain() != Domain::Continuous || tf.num_degree() != 1 || tf.den_degree() > 1 {
        return None;
    }
    let (n1, n0) = (tf.num()[0], tf.num()[1]);
    let (d1, d0) = if tf.den_degree() == 1 { (tf.den()[0], tf.den()[1]) } else { (0.0, tf.den()[0]) };
    if n0 == 0.0 || d0 == 0.0 {
        return None;
    }
    let (a, b, dc) = (n1 / n0, d1 / d0, tf.gain() * n0 / d0);
    (dc > 0.0 && b >= 0.0 && b < a).then_some((a, b, dc))
}

/// Either multiplier representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Multiplier {
    Taps(TapMultiplier),
    Rational(RationalMultiplier),
}

impl Multiplier {
    pub fn identity(domain: Domain) -> Self {
        Multiplier::Taps(TapMultiplier::identity(domain, MultiplierClass::Ozf))
    }

    pub fn class(&self) -> MultiplierClass {
        match self {
            Multiplier::Taps(m) => m.class(),
            Multiplier::Rational(m) => m.class(),
        }
    }

    pub fn validate(&self) -> Membership {
        match self {
            Multiplier::Taps(m) => m.validate(),
            Multiplier::Rational(m) => m.validate(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Multiplier::Taps(m) => m.describe(),
            Multiplier::Rational(m) => format!("{}", m.tf()),
        }
    }
}

impl From<TapMultiplier> for Multiplier {
    fn from(m: TapMultiplier) -> Self {
        Multiplier::Taps(m)
    }
}

impl From<RationalMultiplier> for Multiplier {
    fn from(m: RationalMultiplier) -> Self {
        Multiplier::Rational(m)
    }
}

impl FrequencyResponse for TapMultiplier {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn response(&self, w: f64) -> Result<Complex64> {
        Ok(self.eval(w))
    }
}

impl FrequencyResponse for RationalMultiplier {
    fn domain(&self) -> Domain {
        self.tf.domain()
    }

    fn response(&self, w: f64) -> Result<Complex64> {
        self.tf.eval(w)
    }
}

impl FrequencyResponse for Multiplier {
    fn domain(&self) -> Domain {
        match self {
            Multiplier::Taps(m) => m.domain(),
            Multiplier::Rational(m) => FrequencyResponse::domain(m),
        }
    }

    fn response(&self, w: f64) -> Result<Complex64> {
        match self {
            Multiplier::Taps(m) => Ok(m.eval(w)),
            Multiplier::Rational(m) => m.response(w),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn table2_forms_validate() {
        let causal = TapMultiplier::discrete_tap(1, 0.68, MultiplierClass::Ozf).unwrap();
        assert!(causal.validate().is_member());

        let odd = TapMultiplier::discrete_tap(-1, -0.57, MultiplierClass::Ozf).unwrap();
        match odd.validate() {
            Membership::NotMember { reason } => assert!(reason.contains("negative")),
            other => panic!("{other:?}"),
        }
        assert!(odd.with_class(MultiplierClass::OzfOdd).unwrap().validate().is_member());
        // 1 + 0.57z at w: 1 + 0.57 e^{jw}
        let w = 0.7;
        let expect = Complex64::new(1.0, 0.0) + Complex64::from_polar(0.57, w);
        assert!((odd.eval(w) - expect).norm() < 1e-15);
    }

    #[test]
    fn identity_in_every_class() {
        for class in [
            MultiplierClass::Ozf,
            MultiplierClass::OzfOdd,
            MultiplierClass::Altshuller(3.0),
            MultiplierClass::Altshuller(0.1),
        ] {
            let m = TapMultiplier::identity(Domain::Discrete, class);
            assert!(m.validate().is_member());
            assert_eq!(m.eval(1.234), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn sum_rules() {
        let m = TapMultiplier::new(Domain::Discrete, vec![(1.0, 0.6), (2.0, 0.4)], MultiplierClass::Ozf).unwrap();
        match m.validate() {
            Membership::NotMember { reason } => assert!(reason.contains("non-strict")),
            other => panic!("{other:?}"),
        }
        let m = TapMultiplier::new(Domain::Discrete, vec![(1.0, 0.6), (2.0, 0.5)], MultiplierClass::Ozf).unwrap();
        assert!(!m.validate().is_member());
        let m = TapMultiplier::new(Domain::Discrete, vec![(1.0, 0.6), (2.0, -0.3)], MultiplierClass::OzfOdd).unwrap();
        assert!(m.validate().is_member());
        assert!(TapMultiplier::new(Domain::Discrete, vec![(0.0, 0.1)], MultiplierClass::Ozf).is_err());
        assert!(TapMultiplier::new(Domain::Discrete, vec![(1.5, 0.1)], MultiplierClass::Ozf).is_err());
    }

    #[test]
    fn response_values() {
        let m = TapMultiplier::new(Domain::Discrete, vec![(5.0, 0.16), (-10.0, 0.04)], MultiplierClass::Ozf).unwrap();
        assert!((m.eval(0.0) - Complex64::new(0.8, 0.0)).norm() < 1e-15);
        let theta = 1.04;
        let m = TapMultiplier::new(
            Domain::Continuous,
            vec![(2.0 * theta * PI, 0.82)],
            MultiplierClass::Altshuller(2.0 * theta * PI),
        )
        .unwrap();
        let w = 0.9;
        let expect = 1.0 - Complex64::from_polar(0.82, -2.0 * theta * w * PI);
        assert!((m.eval(w) - expect).norm() < 1e-14);
        assert_eq!(m.eval(-w), m.eval(w).conj());
    }

    #[test]
    fn period_check() {
        let m = TapMultiplier::new(Domain::Continuous, vec![(PI, 0.2)], MultiplierClass::Ozf).unwrap();
        assert!(m.altshuller_period_check(PI));
        assert!(m.altshuller_period_check(PI / 2.0));
        assert!(!m.altshuller_period_check(2.0 * PI));
        let m = TapMultiplier::new(Domain::Continuous, vec![(1.5, 0.2)], MultiplierClass::Ozf).unwrap();
        assert!(!m.altshuller_period_check(1.0));
        let lattice =
            TapMultiplier::new(Domain::Continuous, vec![(PI, 0.2), (-2.0 * PI, 0.1)], MultiplierClass::Altshuller(PI))
                .unwrap();
        match lattice.validate() {
            Membership::Member { lattice: Some(l), .. } => assert_eq!(l.multiples, vec![1, -2]),
            other => panic!("{other:?}"),
        }
        let off = lattice.with_class(MultiplierClass::Altshuller(1.0)).unwrap();
        assert!(!off.validate().is_member());
    }

    #[test]
    fn rational_leads() {
        let m = RationalMultiplier::lead(9.0, 1e-6).unwrap();
        assert_eq!(m.evidence(), MembershipEvidence::ValidatedFirstOrder);
        assert!(m.validate().is_member());
        assert!(RationalMultiplier::lead(1.0, 2.0).is_err());
        let tf = RationalTransferFunction::continuous(&[1.0, 2.0, 1.0], &[1.0, 3.0, 1.0], 1.0).unwrap();
        assert!(RationalMultiplier::new(tf.clone(), MultiplierClass::Ozf).is_err());
        let a = RationalMultiplier::asserted(tf, MultiplierClass::Ozf);
        assert!(matches!(a.validate(), Membership::Asserted { .. }));
        assert!(a.validate().is_accepted());
    }

    #[test]
    fn json_forms() {
        let m: Multiplier = serde_json::from_str(r#"{"domain":"z","taps":[[1,0.68]],"class":"ozf"}"#).unwrap();
        assert!(matches!(&m, Multiplier::Taps(t) if t.taps() == [(1.0, 0.68)]));
        let m: Multiplier =
            serde_json::from_str(r#"{"domain":"s","taps":[[2.5,0.5]],"class":{"altshuller":2.5}}"#).unwrap();
        assert_eq!(m.class(), MultiplierClass::Altshuller(2.5));
        let r: Multiplier = serde_json::from_str(r#"{"domain":"s","num":[9,1],"den":[1e-6,1],"class":"ozf"}"#).unwrap();
        assert!(matches!(r, Multiplier::Rational(_)));
        let back: Multiplier = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
