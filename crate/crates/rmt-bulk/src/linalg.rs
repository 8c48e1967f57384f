//! Small dense helpers on top of `nalgebra`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Inverse with a 1-norm condition estimate; fails above `max_cond`.
pub fn inverse_checked(a: &DMatrix<f64>, what: &str, max_cond: f64) -> Result<(DMatrix<f64>, f64)> {
    let inv = a.clone().lu().try_inverse();
    match inv {
        Some(inv) => {
            let cond = one_norm(a) * one_norm(&inv);
            if !cond.is_finite() || cond > max_cond {
                Err(Error::Singular { what: what.into(), cond })
            } else {
                Ok((inv, cond))
            }
        }
        None => Err(Error::Singular { what: what.into(), cond: f64::INFINITY }),
    }
}

/// Determinant by LU with partial pivoting.
pub fn det(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    a.clone().lu().determinant()
}

/// Reverses rows and columns: `R A R` with `R` the exchange matrix.
pub fn flip(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    DMatrix::from_fn(r, c, |i, j| a[(r - 1 - i, c - 1 - j)])
}
