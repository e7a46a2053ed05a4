//! Real polynomials stored in descending powers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Drops leading zeros; the zero polynomial becomes `[0.0]`.
pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    match coeffs.iter().position(|&c| c != 0.0) {
        Some(i) => coeffs[i..].to_vec(),
        None => vec![0.0],
    }
}

pub fn degree(coeffs: &[f64]) -> usize {
    trim(coeffs).len() - 1
}

/// Horner evaluation at a complex point.
pub fn eval(coeffs: &[f64], p: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * p + c)
}

pub fn eval_real(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

pub fn norm(coeffs: &[f64]) -> f64 {
    coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum of two polynomials, aligned at the constant term.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (k, &x) in a.iter().rev().enumerate() {
        out[n - 1 - k] += x;
    }
    for (k, &y) in b.iter().rev().enumerate() {
        out[n - 1 - k] += y;
    }
    trim(&out)
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Roots as eigenvalues of the companion matrix, with multiplicity.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let c = trim(coeffs);
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[0];
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -c[j + 1] / lead;
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let schur = nalgebra::Schur::try_new(companion, f64::EPSILON, 10_000).ok_or(Error::RootFindingFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trim_and_degree() {
        assert_eq!(trim(&[0.0, 0.0, 1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(trim(&[0.0, 0.0]), vec![0.0]);
        assert_eq!(degree(&[0.0, 3.0, 1.0, 0.0]), 2);
    }

    #[test]
    fn mul_add() {
        // (s + 1)(s - 1) = s^2 - 1
        assert_eq!(mul(&[1.0, 1.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
        assert_eq!(add(&[1.0, 0.0, -1.0], &[1.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(add(&[1.0], &[-1.0]), vec![0.0]);
    }

    #[test]
    fn roots_with_multiplicity() {
        // z(z - 0.5)
        let mut r = roots(&[1.0, -0.5, 0.0]).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!(r[0].norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.5, 0.0)).norm() < 1e-14);

        // s^2 + 1
        let r = roots(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(r.len(), 2);
        for z in r {
            assert!((z.norm() - 1.0).abs() < 1e-12 && z.re.abs() < 1e-12);
        }
    }
}
