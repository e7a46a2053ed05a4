use serde::{Deserialize, Serialize};

use super::bounds::{gain_bound_with, BoundOptions, Channel, GainBoundReport, Table1Variant};
use super::suitability::{suitability_curve, EPS_TOL};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::lti::grid::FrequencyGrid;
use crate::lti::RationalTransferFunction;
use crate::multipliers::{Multiplier, MultiplierClass, TapMultiplier};

/// Parametric family searched over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SearchForm {
    /// `1 - c e^{-jw lag}` (`1 - c z^-lag` in discrete time).
    OneTapCausal {
        #[serde(default = "unit_lag")]
        lag: f64,
    },
    /// `1 - c e^{jw lag}`, or `1 + c e^{jw lag}` in the odd class.
    OneTapAnticausal {
        #[serde(default = "unit_lag")]
        lag: f64,
        #[serde(default)]
        odd: bool,
    },
    /// `1 - sum_i c_i e^{-jw m_i T}` with all `c_i >= 0`.
    AltshullerLattice { period: f64, multiples: Vec<i64> },
}

fn unit_lag() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "snake_case")]
pub enum SearchObjective {
    /// Maximise the suitability margin.
    Margin,
    /// Minimise the gain bound on a channel.
    Bound {
        channel: Channel,
        #[serde(default)]
        variant: Table1Variant,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub form: SearchForm,
    pub objective: SearchObjective,
    pub k: f64,
    pub step: f64,
    pub coeff_max: f64,
    pub mode: ExecMode,
}

impl SearchSpec {
    pub fn new(form: SearchForm, objective: SearchObjective, k: f64) -> Self {
        SearchSpec { form, objective, k, step: 0.01, coeff_max: 0.99, mode: ExecMode::default() }
    }

    fn levels(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.coeff_max >= 0.0) {
            return Err(Error::InvalidArgument("search needs step > 0 and coeff_max >= 0".into()));
        }
        let n = (self.coeff_max / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| (i as f64 * self.step * 1e9).round() / 1e9).collect())
    }

    /// Candidate coefficient vectors in lexicographic order.
    fn candidates(&self) -> Result<Vec<Vec<f64>>> {
        let levels = self.levels()?;
        let dims = match &self.form {
            SearchForm::OneTapCausal { .. } | SearchForm::OneTapAnticausal { .. } => 1,
            SearchForm::AltshullerLattice { multiples, .. } => {
                if multiples.is_empty() || multiples.contains(&0) {
                    return Err(Error::InvalidArgument("lattice multiples must be nonzero".into()));
                }
                multiples.len()
            }
        };
        let mut out = vec![Vec::new()];
        for _ in 0..dims {
            let mut next = Vec::new();
            for prefix in &out {
                let used: f64 = prefix.iter().sum();
                for &c in &levels {
                    if dims > 1 && used + c > self.coeff_max + 1e-9 {
                        break;
                    }
                    let mut v: Vec<f64> = prefix.clone();
                    v.push(c);
                    next.push(v);
                }
            }
            out = next;
        }
        Ok(out)
    }

    fn build(&self, g: &RationalTransferFunction, coeffs: &[f64]) -> Result<TapMultiplier> {
        let domain = g.domain();
        let (taps, class) = match &self.form {
            SearchForm::OneTapCausal { lag } => (vec![(*lag, coeffs[0])], MultiplierClass::Ozf),
            SearchForm::OneTapAnticausal { lag, odd: false } => (vec![(-*lag, coeffs[0])], MultiplierClass::Ozf),
            SearchForm::OneTapAnticausal { lag, odd: true } => (vec![(-*lag, -coeffs[0])], MultiplierClass::OzfOdd),
            SearchForm::AltshullerLattice { period, multiples } => (
                multiples.iter().zip(coeffs).map(|(&m, &c)| (m as f64 * period, c)).collect(),
                MultiplierClass::Altshuller(*period),
            ),
        };
        let taps = taps.into_iter().filter(|&(_, c)| c != 0.0).collect();
        TapMultiplier::new(domain, taps, class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub multiplier: TapMultiplier,
    pub coefficients: Vec<f64>,
    pub margin: f64,
    pub bound: Option<GainBoundReport>,
    pub evaluated: usize,
    pub feasible: usize,
}

struct Scored {
    margin: f64,
    bound: Option<GainBoundReport>,
}

/// Grid search over tap coefficients. Ties go to the lexicographically
/// smallest coefficient vector.
pub fn search_multiplier(
    g: &RationalTransferFunction,
    grid: &FrequencyGrid,
    spec: &SearchSpec,
) -> Result<SearchResult> {
    g.require_stable()?;
    let cands = spec.candidates()?;
    let mults: Vec<TapMultiplier> = cands.iter().map(|c| spec.build(g, c)).collect::<Result<_>>()?;
    let scored: Vec<Result<Option<Scored>>> = exec::map_indexed_with(spec.mode, cands.len(), |i| {
        let m = Multiplier::from(mults[i].clone());
        if !m.validate().is_accepted() {
            return Ok(None);
        }
        let curve = suitability_curve(&m, g, spec.k, grid)?;
        let margin = curve.iter().copied().fold(f64::INFINITY, f64::min);
        if !(margin > EPS_TOL) {
            return Ok(None);
        }
        match spec.objective {
            SearchObjective::Margin => Ok(Some(Scored { margin, bound: None })),
            SearchObjective::Bound { channel, variant } => {
                let opts = BoundOptions { variant, refine: true };
                match gain_bound_with(&m, g, spec.k, channel, grid, opts) {
                    Ok(r) => Ok(Some(Scored { margin, bound: Some(r) })),
                    Err(Error::NotSuitable { .. }) | Err(Error::NegativeDiscriminant { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            }
        }
    });

    let mut best: Option<(usize, Scored)> = None;
    let mut feasible = 0;
    for (i, s) in scored.into_iter().enumerate() {
        let Some(s) = s? else { continue };
        feasible += 1;
        let better = match &best {
            None => true,
            Some((_, b)) => match (&s.bound, &b.bound) {
                (Some(x), Some(y)) => x.bound < y.bound,
                _ => s.margin > b.margin,
            },
        };
        if better {
            best = Some((i, s));
        }
    }
    let (i, s) = best.ok_or(Error::NoFeasibleMultiplier)?;
    Ok(SearchResult {
        multiplier: mults[i].clone(),
        coefficients: cands[i].clone(),
        margin: s.margin,
        bound: s.bound,
        evaluated: cands.len(),
        feasible,
    })
}
