//! Small dense linear programs: two-phase tableau simplex with Bland's rule.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

/// `min c·x` subject to `a_ub x <= b_ub`, `a_eq x = b_eq`, `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimises `cost · x` over the current basis, with columns at or
    /// beyond `allowed` barred from entering.
    fn optimise(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            // Reduced costs.
            let m = self.t.len();
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..m {
                    d -= cost[self.basis[i]] * self.t[i][j];
                }
                if d < -PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[i][j];
                if a > PIVOT_TOL {
                    let ratio = self.t[i][self.cols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || ((ratio - lr).abs() <= PIVOT_TOL && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((i, _)) => self.pivot(i, j),
                None => return Ok(false),
            }
        }
        Err(Error::LinearProgram("pivot limit reached".into()))
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpOutcome> {
        let n = self.c.len();
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(Error::LinearProgram("row / right-hand side count mismatch".into()));
        }
        if self.a_ub.iter().chain(&self.a_eq).any(|r| r.len() != n) {
            return Err(Error::LinearProgram("row length differs from variable count".into()));
        }
        let n_ub = self.a_ub.len();
        let m = n_ub + self.a_eq.len();
        // Columns: x | slacks (one per ub row) | artificials (one per row).
        let n_slack = n_ub;
        let art0 = n + n_slack;
        let cols = art0 + m;
        let mut t = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for (i, (row, &b)) in self.a_ub.iter().zip(&self.b_ub).chain(self.a_eq.iter().zip(&self.b_eq)).enumerate() {
            let mut tr = vec![0.0; cols + 1];
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                tr[j] = sign * row[j];
            }
            if i < n_ub {
                tr[n + i] = sign;
            }
            tr[cols] = sign * b;
            if i < n_ub && sign > 0.0 {
                basis.push(n + i);
            } else {
                tr[art0 + i] = 1.0;
                basis.push(art0 + i);
            }
            t.push(tr);
        }
        let mut tab = Tableau { t, basis, cols };

        // Phase 1: drive the artificials to zero.
        let mut phase1 = vec![0.0; cols];
        for v in phase1.iter_mut().skip(art0) {
            *v = 1.0;
        }
        if !tab.optimise(&phase1, cols)? {
            return Err(Error::LinearProgram("phase 1 unbounded".into()));
        }
        let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= art0).map(|i| tab.t[i][cols]).sum();
        let scale = 1.0 + self.b_ub.iter().chain(&self.b_eq).fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > 1e-9 * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Pivot any remaining (zero-level) artificials out of the basis.
        for i in 0..m {
            if tab.basis[i] >= art0 {
                if let Some(j) = (0..art0).find(|&j| tab.t[i][j].abs() > PIVOT_TOL) {
                    tab.pivot(i, j);
                }
            }
        }

        // Phase 2.
        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(&self.c);
        if !tab.optimise(&cost, art0)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.t[i][cols];
            }
        }
        let objective = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpOutcome::Optimal { x, objective })
    }
}
