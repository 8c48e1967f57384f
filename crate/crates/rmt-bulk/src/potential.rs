//! Polynomial potentials `V(x) = k_0 + k_1 x + ... + k_{2m} x^{2m}`.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An even-degree polynomial with positive leading coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Potential {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Potential {
    type Error = Error;
    fn try_from(c: Vec<f64>) -> Result<Self> {
        Potential::new(c)
    }
}

impl From<Potential> for Vec<f64> {
    fn from(v: Potential) -> Self {
        v.coeffs
    }
}

impl Potential {
    /// Coefficients `k_0..k_{2m}`; trailing zeros are dropped.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Potential("non-finite coefficient".into()));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let deg = coeffs.len().saturating_sub(1);
        if deg < 2 || deg % 2 != 0 {
            return Err(Error::Potential(format!("degree must be even and >= 2, got {deg}")));
        }
        if coeffs[deg] <= 0.0 {
            return Err(Error::Potential("leading coefficient must be positive".into()));
        }
        Ok(Self { coeffs })
    }

    /// `kappa * x^{2m}`.
    pub fn monomial(m: usize, kappa: f64) -> Result<Self> {
        let mut c = vec![0.0; 2 * m + 1];
        c[2 * m] = kappa;
        Self::new(c)
    }

    /// Parses `"k4=1,k2=-0.5"`. Unlisted coefficients are zero.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut c: Vec<f64> = Vec::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, val) = item
                .split_once('=')
                .ok_or_else(|| Error::Potential(format!("expected kI=value, got '{item}'")))?;
            let idx: usize = key
                .trim()
                .strip_prefix('k')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Potential(format!("bad coefficient name '{key}'")))?;
            let v: f64 = val
                .trim()
                .parse()
                .map_err(|_| Error::Potential(format!("bad value '{val}'")))?;
            if c.len() <= idx {
                c.resize(idx + 1, 0.0);
            }
            c[idx] = v;
        }
        Self::new(c)
    }

    /// Canonical `k0=..,k4=..` form listing the nonzero coefficients.
    pub fn spec_string(&self) -> String {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| format!("k{i}={c}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Half-degree `m`.
    pub fn m(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// Bandwidth parameter `n = 2m - 1`.
    pub fn n(&self) -> usize {
        2 * self.m() - 1
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Leading coefficient `k_{2m}`.
    pub fn kappa(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    /// Subleading coefficient `k_{2m-1}`.
    pub fn kappa_sub(&self) -> f64 {
        self.coeffs[self.degree() - 1]
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|c| *c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let d = self.degree();
        (1..=d).rev().fold(0.0, |acc, i| acc * x + i as f64 * self.coeffs[i])
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        let d = self.degree();
        (2..=d)
            .rev()
            .fold(0.0, |acc, i| acc * x + (i * (i - 1)) as f64 * self.coeffs[i])
    }

    pub fn eval_mp(&self, x: &Float) -> Float {
        let mut acc = Float::with_val(x.prec(), 0);
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += *c;
        }
        acc
    }

    pub fn deriv_mp(&self, x: &Float) -> Float {
        let mut acc = Float::with_val(x.prec(), 0);
        for i in (1..=self.degree()).rev() {
            acc *= x;
            acc += i as f64 * self.coeffs[i];
        }
        acc
    }

    /// Returns `(a, r0)` such that `V(x) >= a |x|^{2m}` for `|x| >= r0`.
    pub fn growth_bound(&self) -> (f64, f64) {
        let d = self.degree();
        let lower: f64 = self.coeffs[..d].iter().map(|c| c.abs()).sum();
        if lower == 0.0 {
            (self.kappa(), 0.0)
        } else {
            (0.5 * self.kappa(), (2.0 * lower / self.kappa()).max(1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_roundtrip() {
        let v = Potential::parse("k4=1, k2=-0.5").unwrap();
        assert_eq!(v.m(), 2);
        assert_eq!(v.n(), 3);
        assert_eq!(v.coeffs(), &[0.0, 0.0, -0.5, 0.0, 1.0]);
        assert_eq!(Potential::parse(&v.spec_string()).unwrap(), v);
        assert!(v.is_even());
    }

    #[test]
    fn rejects_bad_degree_and_sign() {
        assert!(Potential::parse("k3=1").is_err());
        assert!(Potential::parse("k4=-1").is_err());
        assert!(Potential::parse("k0=1").is_err());
        assert!(Potential::parse("k4").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let v = Potential::parse("k6=0.7,k3=0.2,k1=-1.5").unwrap();
        let h = 1e-5;
        for &x in &[-1.3, 0.0, 0.4, 2.1] {
            let fd = (v.eval(x + h) - v.eval(x - h)) / (2.0 * h);
            assert!((fd - v.deriv(x)).abs() < 1e-6 * (1.0 + fd.abs()));
            let fd2 = (v.deriv(x + h) - v.deriv(x - h)) / (2.0 * h);
            assert!((fd2 - v.second_deriv(x)).abs() < 1e-5 * (1.0 + fd2.abs()));
        }
    }

    #[test]
    fn growth_bound_holds() {
        let v = Potential::parse("k4=1,k1=0.3,k2=-2").unwrap();
        let (a, r0) = v.growth_bound();
        for i in 0..200 {
            let x = r0 + 0.05 * i as f64;
            assert!(v.eval(x) >= a * x.powi(4));
            assert!(v.eval(-x) >= a * x.powi(4));
        }
    }
}
