use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::suitability::pointwise_margin;
use super::{check_domains, inverse_slope, refine_sup, reported_slope, GridSummary};
use crate::error::{Error, Result};
use crate::exec;
use crate::lti::grid::FrequencyGrid;
use crate::lti::{FrequencyResponse, RationalTransferFunction};
use crate::multipliers::Multiplier;

/// Loop signal: `r1`, `r2` are exogenous, the rest internal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    R1,
    R2,
    U1,
    U2,
    Y1,
    Y2,
}

impl Signal {
    fn name(self) -> &'static str {
        match self {
            Signal::R1 => "r1",
            Signal::R2 => "r2",
            Signal::U1 => "u1",
            Signal::U2 => "u2",
            Signal::Y1 => "y1",
            Signal::Y2 => "y2",
        }
    }
}

/// Input-output channel of the loop, from an exogenous input to an
/// internal signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Channel {
    pub source: Signal,
    pub target: Signal,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::new(Signal::R1, Signal::U1),
        Channel::new(Signal::R1, Signal::U2),
        Channel::new(Signal::R1, Signal::Y1),
        Channel::new(Signal::R1, Signal::Y2),
        Channel::new(Signal::R2, Signal::U1),
        Channel::new(Signal::R2, Signal::U2),
        Channel::new(Signal::R2, Signal::Y1),
        Channel::new(Signal::R2, Signal::Y2),
    ];

    pub const fn new(source: Signal, target: Signal) -> Self {
        Channel { source, target }
    }

    pub fn r2_y2() -> Self {
        Channel::new(Signal::R2, Signal::Y2)
    }

    /// True for the channels whose bound is the root of a quadratic.
    pub fn is_quadratic(self) -> bool {
        use Signal::*;
        matches!((self.source, self.target), (R1, U1) | (R1, U2) | (R1, Y1) | (R2, U2))
    }

    fn check(self) -> Result<()> {
        use Signal::*;
        if matches!(self.source, R1 | R2) && matches!(self.target, U1 | U2 | Y1 | Y2) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{self} is not an input-output channel")))
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source.name(), self.target.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| match t.trim().to_ascii_lowercase().as_str() {
            "r1" => Ok(Signal::R1),
            "r2" => Ok(Signal::R2),
            "u1" => Ok(Signal::U1),
            "u2" => Ok(Signal::U2),
            "y1" => Ok(Signal::Y1),
            "y2" => Ok(Signal::Y2),
            other => Err(Error::InvalidArgument(format!("unknown signal '{other}'"))),
        };
        let (a, b) = s
            .split_once("->")
            .or_else(|| s.split_once(':'))
            .ok_or_else(|| Error::InvalidArgument(format!("channel '{s}' should look like r2->y2")))?;
        let ch = Channel::new(parse(a)?, parse(b)?);
        ch.check()?;
        Ok(ch)
    }
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Constant term used for the `r2 -> u2` quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Table1Variant {
    /// `c = Re[M/k]`, as tabulated.
    #[default]
    Printed,
    /// `c = 2 Re[M/k]`, as the quadratic gain condition gives it.
    Eq21,
}

impl FromStr for Table1Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Table1Variant::Printed),
            "eq21" => Ok(Table1Variant::Eq21),
            _ => Err(Error::InvalidArgument(format!("unknown table variant '{s}'"))),
        }
    }
}

/// `(a, b, c)` with the channel bound the positive root of
/// `a h^2 - b h - c = 0`; closed-form channels have `c = 0`.
pub fn quadratic_coefficients(
    ch: Channel,
    variant: Table1Variant,
    m: Complex64,
    g: Complex64,
    inv_k: f64,
) -> (f64, f64, f64) {
    use Signal::*;
    let a = 2.0 * pointwise_margin(m, g, inv_k);
    let (m2, g2, mg2) = (m.norm_sqr(), g.norm_sqr(), (m * g).norm_sqr());
    let rm_k = m.re * inv_k;
    let (b, c) = match (ch.source, ch.target) {
        (R2, Y2) | (R2, U1) => (1.0 + m2, 0.0),
        (R1, Y2) => (1.0 + mg2, 0.0),
        (R2, Y1) => (g2 + m2, 0.0),
        (R1, U1) => (1.0 + mg2, 2.0 * rm_k),
        (R1, U2) | (R1, Y1) => (g2 * (1.0 + m2), g2 * 2.0 * rm_k),
        (R2, U2) => (
            g2 + m2,
            match variant {
                Table1Variant::Printed => rm_k,
                Table1Variant::Eq21 => 2.0 * rm_k,
            },
        ),
        _ => unreachable!("channel checked on entry"),
    };
    (a, b, c)
}

fn pointwise_bound(ch: Channel, variant: Table1Variant, m: Complex64, g: Complex64, inv_k: f64, w: f64) -> Result<f64> {
    let (a, b, c) = quadratic_coefficients(ch, variant, m, g, inv_k);
    if !(a > 0.0) {
        return Err(Error::NotSuitable { margin: 0.5 * a, frequency: w });
    }
    if c == 0.0 {
        return Ok(b / a);
    }
    let disc = b * b + 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant { frequency: w });
    }
    Ok((b + disc.sqrt()) / (2.0 * a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    pub variant: Table1Variant,
    /// Golden-section refinement of the grid supremum.
    pub refine: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions { variant: Table1Variant::Printed, refine: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainBoundReport {
    pub channel: Channel,
    /// Final bound, after the floor.
    pub bound: f64,
    /// Supremum of the pointwise ratio or root before the floor.
    pub sup: f64,
    pub argmax_frequency: f64,
    pub floor: Option<f64>,
    pub k: Option<f64>,
    pub multiplier: String,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<Table1Variant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub grid: GridSummary,
}

pub fn gain_bound(
    m: &Multiplier,
    g: &RationalTransferFunction,
    k: f64,
    channel: Channel,
    grid: &FrequencyGrid,
) -> Result<GainBoundReport> {
    gain_bound_with(m, g, k, channel, grid, BoundOptions::default())
}

pub fn gain_bound_with(
    m: &Multiplier,
    g: &RationalTransferFunction,
    k: f64,
    channel: Channel,
    grid: &FrequencyGrid,
    opts: BoundOptions,
) -> Result<GainBoundReport> {
    channel.check()?;
    let suit = super::suitability_margin(m, g, k, grid)?;
    if !suit.suitable {
        return Err(Error::NotSuitable { margin: suit.margin, frequency: suit.argmin_frequency });
    }
    let inv_k = inverse_slope(k)?;
    check_domains(m, g, grid)?;
    let pts = grid.points();
    let at = |w: f64| -> Result<f64> { pointwise_bound(channel, opts.variant, m.response(w)?, g.eval(w)?, inv_k, w) };
    let values: Vec<f64> = exec::map_indexed(pts.len(), |i| at(pts[i])).into_iter().collect::<Result<_>>()?;
    let (sup, argmax) = if opts.refine { refine_sup(pts, &values, at)? } else { grid_max(pts, &values) };

    use Signal::*;
    let floor = match (channel.source, channel.target) {
        (R1, U1) | (R2, U2) => Some(1.0),
        (R1, U2) | (R1, Y1) => {
            let g2 = |w: f64| -> Result<f64> { Ok(g.eval(w)?.norm_sqr()) };
            let gv: Vec<f64> = exec::map_indexed(pts.len(), |i| g2(pts[i])).into_iter().collect::<Result<_>>()?;
            Some(if opts.refine { refine_sup(pts, &gv, g2)?.0 } else { grid_max(pts, &gv).0 })
        }
        _ => None,
    };
    let bound = floor.map_or(sup, |f| sup.max(f));
    let r2u2 = channel == Channel::new(R2, U2);
    Ok(GainBoundReport {
        channel,
        bound,
        sup,
        argmax_frequency: argmax,
        floor,
        k: reported_slope(k),
        multiplier: m.describe(),
        margin: suit.margin,
        variant: r2u2.then_some(opts.variant),
        note: (r2u2 && inv_k > 0.0).then(|| {
            "r2->u2 constant term differs between the tabulated form (Re[M/k]) and the \
             quadratic gain condition (2Re[M/k])"
                .to_string()
        }),
        grid: suit.grid,
    })
}

fn grid_max(pts: &[f64], values: &[f64]) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, pts[0]);
    for (&w, &v) in pts.iter().zip(values) {
        if v > best.0 {
            best = (v, w);
        }
    }
    best
}
