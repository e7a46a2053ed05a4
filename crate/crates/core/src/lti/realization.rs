use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Domain, FrequencyResponse, RationalTransferFunction};
use crate::error::{Error, Result};

/// Single-input single-output `(A, B, C, D)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SsRepr", into = "SsRepr")]
pub struct StateSpaceRealization {
    pub domain: Domain,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    /// Direct feedthrough.
    pub d: f64,
}

#[derive(Serialize, Deserialize)]
struct SsRepr {
    domain: Domain,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    #[serde(default)]
    d: f64,
}

impl TryFrom<SsRepr> for StateSpaceRealization {
    type Error = Error;
    fn try_from(r: SsRepr) -> Result<Self> {
        let n = r.b.len();
        if r.a.len() != n || r.a.iter().any(|row| row.len() != n) || r.c.len() != n {
            return Err(Error::InvalidArgument(format!("inconsistent realization dimensions (B has {n} rows)")));
        }
        let a = DMatrix::from_fn(n, n, |i, j| r.a[i][j]);
        Self::new(r.domain, a, DVector::from_vec(r.b), RowDVector::from_vec(r.c), r.d)
    }
}

impl From<StateSpaceRealization> for SsRepr {
    fn from(s: StateSpaceRealization) -> Self {
        let n = s.order();
        SsRepr {
            domain: s.domain,
            a: (0..n).map(|i| (0..n).map(|j| s.a[(i, j)]).collect()).collect(),
            b: s.b.iter().copied().collect(),
            c: s.c.iter().copied().collect(),
            d: s.d,
        }
    }
}

impl StateSpaceRealization {
    pub fn new(domain: Domain, a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>, d: f64) -> Result<Self> {
        let n = b.len();
        if a.nrows() != n || a.ncols() != n || c.len() != n {
            return Err(Error::InvalidArgument("inconsistent realization dimensions".into()));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|x| !x.is_finite()) || !d.is_finite() {
            return Err(Error::InvalidArgument("non-finite realization entry".into()));
        }
        Ok(Self { domain, a, b, c, d })
    }

    pub fn from_transfer_function(tf: &RationalTransferFunction) -> Result<Self> {
        if !tf.is_proper() {
            return Err(Error::ImproperTransferFunction { num: tf.num_degree(), den: tf.den_degree() });
        }
        let den = tf.den();
        let n = tf.den_degree();
        let lead = den[0];
        let a_coef: Vec<f64> = den.iter().map(|x| x / lead).collect();
        let mut b_coef = vec![0.0; n + 1];
        let num = tf.num();
        for (k, &x) in num.iter().rev().enumerate() {
            if k <= n {
                b_coef[n - k] = x / lead;
            }
        }
        let d = b_coef[0];
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -a_coef[j + 1]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let mut b = DVector::zeros(n);
        if n > 0 {
            b[0] = 1.0;
        }
        let c = RowDVector::from_fn(n, |_, j| tf.gain() * (b_coef[j + 1] - d * a_coef[j + 1]));
        Self::new(tf.domain(), a, b, c, tf.gain() * d)
    }

    pub fn order(&self) -> usize {
        self.b.len()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d == 0.0
    }

    /// `C (pI - A)^{-1} B + D` on the contour.
    pub fn eval(&self, w: f64) -> Result<Complex64> {
        let n = self.order();
        if n == 0 {
            return Ok(Complex64::new(self.d, 0.0));
        }
        let p = self.domain.contour_point(w);
        let m = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { p } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let rhs = DVector::from_fn(n, |i, _| Complex64::new(self.b[i], 0.0));
        let x = m.lu().solve(&rhs).ok_or(Error::PoleOnEvaluationContour { frequency: w })?;
        let y: Complex64 = (0..n).map(|i| x[i] * self.c[i]).sum();
        Ok(y + self.d)
    }

    /// `h_0 = D`, `h_k = C A^{k-1} B`.
    pub fn markov_parameters(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d);
        let mut v = self.b.clone();
        for _ in 1..count {
            out.push((&self.c * &v)[0]);
            v = &self.a * v;
        }
        out
    }

    pub fn controllability_matrix(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut m = DMatrix::zeros(n, n);
        let mut v = self.b.clone();
        for j in 0..n {
            m.set_column(j, &v);
            v = &self.a * v;
        }
        m
    }

    pub fn observability_matrix(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut m = DMatrix::zeros(n, n);
        let mut v = self.c.clone();
        for i in 0..n {
            m.set_row(i, &v);
            v = &v * &self.a;
        }
        m
    }

    /// Rank tests on the controllability and observability matrices.
    pub fn is_minimal(&self) -> bool {
        let n = self.order();
        if n == 0 {
            return true;
        }
        let full_rank = |m: DMatrix<f64>| {
            let scale = m.amax().max(1.0);
            m.rank(1e-10 * scale) == n
        };
        full_rank(self.controllability_matrix()) && full_rank(self.observability_matrix())
    }
}

impl FrequencyResponse for StateSpaceRealization {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn response(&self, w: f64) -> Result<Complex64> {
        self.eval(w)
    }
}
