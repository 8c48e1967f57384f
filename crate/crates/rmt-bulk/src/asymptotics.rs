//! Limiting objects: MRS numbers, the equilibrium polynomial `h`, `theta`,
//! `I(q)`, and the Toeplitz limits of the `D` and `eps` matrices.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::gauss_legendre;
use crate::riccati::y_m_eval;

/// Leading-order MRS numbers `(c_N, d_N)`.
pub fn mrs_leading(v: &Potential, n_idx: usize) -> (f64, f64) {
    let m = v.m();
    let ratio = double_factorial_ratio(m);
    let c = (ratio / v.kappa()).powf(1.0 / (2 * m) as f64) * (n_idx as f64).powf(1.0 / (2 * m) as f64);
    let d = -v.kappa_sub() / (2.0 * m as f64 * v.kappa());
    (c, d)
}

/// `(2m)!! / (m (2m-1)!!)`.
fn double_factorial_ratio(m: usize) -> f64 {
    (1..=m).fold(1.0 / m as f64, |acc, i| acc * (2 * i) as f64 / (2 * i - 1) as f64)
}

/// Exact coefficients `beta_0..beta_{m-1}` of `h(x) = sum beta_k x^{2k}`.
pub fn h_coeffs(m: usize) -> Vec<Rational> {
    assert!(m >= 1);
    let mut out = Vec::with_capacity(m);
    let mut prod = Rational::from(2);
    for k in 0..m {
        let i = m - k;
        prod *= Rational::from((2 * i, 2 * i - 1));
        out.push(prod.clone());
    }
    out
}

/// The equilibrium polynomial `h` with exact and `f64` coefficients.
#[derive(Clone, Debug)]
pub struct HFunction {
    pub m: usize,
    pub beta: Vec<Rational>,
    beta_f: Vec<f64>,
}

impl HFunction {
    pub fn new(m: usize) -> Self {
        let beta = h_coeffs(m);
        let beta_f = beta.iter().map(Rational::to_f64).collect();
        Self { m, beta, beta_f }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        self.beta_f.iter().rev().fold(0.0, |acc, b| acc * x2 + b)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut acc = 0.0;
        for k in (1..self.m).rev() {
            acc = acc * x2 + 2.0 * k as f64 * self.beta_f[k];
        }
        acc * x
    }

    /// Coefficients of `h` as a polynomial in `x` (dense, degree `2m-2`).
    pub fn poly(&self) -> Vec<Rational> {
        let mut p = vec![Rational::new(); 2 * self.m - 1];
        for (k, b) in self.beta.iter().enumerate() {
            p[2 * k] = b.clone();
        }
        p
    }
}

pub fn h_eval(m: usize, x: f64) -> f64 {
    HFunction::new(m).eval(x)
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

fn poly_add(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let mut s = Rational::new();
            if let Some(x) = a.get(i) {
                s += x;
            }
            if let Some(y) = b.get(i) {
                s += y;
            }
            s
        })
        .collect()
}

fn poly_deriv(a: &[Rational]) -> Vec<Rational> {
    if a.len() <= 1 {
        return vec![Rational::new()];
    }
    a.iter().enumerate().skip(1).map(|(i, c)| Rational::from(c * i as u32)).collect()
}

fn r(n: i64) -> Rational {
    Rational::from(n)
}

/// `x(x^2-1)h' + ((2m-1) - 2(m-1)x^2)h - 4m` as an exact polynomial.
pub fn h_ode_residual_poly(m: usize) -> Vec<Rational> {
    let h = HFunction::new(m).poly();
    let lhs1 = poly_mul(&[r(0), r(-1), r(0), r(1)], &poly_deriv(&h));
    let lhs2 = poly_mul(&[r(2 * m as i64 - 1), r(0), r(-2 * (m as i64 - 1))], &h);
    poly_add(&poly_add(&lhs1, &lhs2), &[r(-4 * m as i64)])
}

/// `h_m - (2m/(2m-1))(2 + x^2 h_{m-1})` as an exact polynomial.
pub fn h_recursion_residual_poly(m: usize) -> Vec<Rational> {
    assert!(m >= 2);
    let hm = HFunction::new(m).poly();
    let hm1 = HFunction::new(m - 1).poly();
    let mut inner = poly_mul(&[r(0), r(0), r(1)], &hm1);
    inner[0] += 2;
    let f = Rational::from((2 * m, 2 * m - 1));
    let scaled: Vec<Rational> = inner.iter().map(|c| -Rational::from(c * &f)).collect();
    poly_add(&hm, &scaled)
}

/// `(4m/(2m-1)) 2F1(1, 1-m; 3/2-m; x^2)` as exact coefficients in `x^2`.
pub fn h_hypergeometric_coeffs(m: usize) -> Vec<Rational> {
    let pref = Rational::from((4 * m, 2 * m - 1));
    let a = r(1 - m as i64);
    let c = Rational::from((3 - 2 * m as i64, 2));
    let mut term = Rational::from(1);
    let mut out = Vec::new();
    for k in 0..m {
        out.push(Rational::from(&pref * &term));
        let ak = Rational::from(&a + k as i64);
        let ck = Rational::from(&c + k as i64);
        term *= ak;
        term /= ck;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct HStructureReport {
    pub m: usize,
    /// The ODE holds as a polynomial identity in exact arithmetic.
    pub ode_exact: bool,
    pub ode_residual_max: f64,
    pub recursion_exact: Option<bool>,
    pub hypergeometric_exact: bool,
    pub integral_residual_max: f64,
    pub monotone: bool,
}

/// Checks the ODE, recursion, hypergeometric and integral forms of `h`.
pub fn h_structure_check(m: usize, grid: &[f64]) -> HStructureReport {
    let h = HFunction::new(m);
    let ode_exact = h_ode_residual_poly(m).iter().all(|c| *c == 0);
    let recursion_exact = (m >= 2).then(|| h_recursion_residual_poly(m).iter().all(|c| *c == 0));
    let hypergeometric_exact = h_hypergeometric_coeffs(m) == h.beta;
    let mut ode_residual_max: f64 = 0.0;
    let mut integral_residual_max: f64 = 0.0;
    for &x in grid {
        let res = x * (x * x - 1.0) * h.deriv(x) + ((2 * m - 1) as f64 - 2.0 * (m - 1) as f64 * x * x) * h.eval(x)
            - 4.0 * m as f64;
        ode_residual_max = ode_residual_max.max(res.abs());
        integral_residual_max = integral_residual_max.max((h_integral_form(m, x) - h.eval(x)).abs());
    }
    let monotone = (0..=200).all(|i| h.deriv(i as f64 / 200.0) >= 0.0);
    HStructureReport {
        m,
        ode_exact,
        ode_residual_max,
        recursion_exact,
        hypergeometric_exact,
        integral_residual_max,
        monotone,
    }
}

/// `(4m/(x sqrt(1-x^2))) int_x^1 (x/t)^{2m} dt / sqrt(1-t^2)` via `t = cos u`.
pub fn h_integral_form(m: usize, x: f64) -> f64 {
    let top = x.acos();
    let integral = gl_integrate(|u| (x / u.cos()).powi(2 * m as i32), 0.0, top, 4, 40);
    4.0 * m as f64 / (x * (1.0 - x * x).sqrt()) * integral
}

/// Composite Gauss-Legendre rule on `[a, b]`.
pub(crate) fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, nodes: usize) -> f64 {
    let (t, w) = gauss_legendre(nodes);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (ti, wi) in t.iter().zip(&w) {
            s += wi * f(mid + 0.5 * h * ti);
        }
    }
    0.5 * h * s
}

/// `theta(x) = (1/2) int_0^x sqrt(1-t^2) h(t) dt`, computed with `t = sin u`.
pub fn theta_eval(m: usize, x: f64) -> f64 {
    let h = HFunction::new(m);
    let top = x.clamp(-1.0, 1.0).asin();
    0.5 * gl_integrate(|u| u.cos().powi(2) * h.eval(u.sin()), 0.0, top, 4, 40)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaReport {
    pub m: usize,
    pub theta_at_one: f64,
    pub ode_residual_max: f64,
}

/// Residual of `theta - x theta'/(2m) - arcsin x` and the value `theta(1)`.
pub fn theta_ode_check(m: usize, grid: &[f64]) -> ThetaReport {
    let h = HFunction::new(m);
    let mut worst: f64 = 0.0;
    for &x in grid {
        let dtheta = 0.5 * (1.0 - x * x).sqrt() * h.eval(x);
        let res = theta_eval(m, x) - x * dtheta / (2 * m) as f64 - x.asin();
        worst = worst.max(res.abs());
    }
    ThetaReport { m, theta_at_one: theta_eval(m, 1.0), ode_residual_max: worst }
}

/// `(I(q), I~(q))` for odd `q`, via the `theta` representation.
pub fn i_q(m: usize, q: i64) -> Result<(f64, f64)> {
    if q % 2 == 0 {
        return Err(Error::Invalid(format!("I(q) is defined for odd q only, got {q}")));
    }
    let aq = q.unsigned_abs() as f64;
    let sign = q.signum() as f64;
    // y_m is even, so integrate over [0, pi/2] and double
    let panels = ((aq / 2.0).ceil() as usize).max(4);
    let integral = 2.0 * gl_integrate(|t| (aq * t).cos() * y_m_eval(m, t), 0.0, PI / 2.0, panels, 32);
    let s = (q as f64 * PI / 2.0).sin();
    let mut value = sign / (2 * m) as f64 + 2.0 / (m as f64 * PI) * s * integral;
    if q.abs() == 1 {
        value += sign * 0.5;
    }
    Ok((value, m as f64 * value - 0.5))
}

/// `I(q)` from its defining `x` integral with `x = sin t`; an independent check.
pub fn i_q_direct(m: usize, q: i64) -> f64 {
    let h = HFunction::new(m);
    let aq = q.unsigned_abs() as f64;
    let panels = ((aq / 2.0).ceil() as usize).max(8);
    let f = |t: f64| {
        let c = t.cos();
        if c < 1e-300 {
            return 0.0;
        }
        (aq * t).cos() / (h.eval(t.sin()) * c)
    };
    let integral = 2.0 * gl_integrate(f, 0.0, PI / 2.0, panels, 40);
    2.0 / PI * (q as f64 * PI / 2.0).sin() * integral
}

/// Table of `I(q)` and `I~(q)` for odd `q` in `[-qmax, qmax]`.
#[derive(Clone, Debug, Serialize)]
pub struct IqTable {
    pub m: usize,
    pub values: BTreeMap<i64, (f64, f64)>,
}

impl IqTable {
    pub fn new(m: usize, qmax: i64) -> Self {
        let mut values = BTreeMap::new();
        let mut q = 1;
        while q <= qmax {
            let (i, it) = i_q(m, q).expect("odd q");
            values.insert(q, (i, it));
            values.insert(-q, (-i, -(m as f64) * i - 0.5));
            q += 2;
        }
        Self { m, values }
    }

    pub fn i(&self, q: i64) -> Result<f64> {
        self.values.get(&q).map(|v| v.0).ok_or(Error::MissingQ(q))
    }

    pub fn itilde(&self, q: i64) -> Result<f64> {
        self.values.get(&q).map(|v| v.1).ok_or(Error::MissingQ(q))
    }
}

pub(crate) fn binom_int(n: u32, k: u32) -> Integer {
    Integer::from(Integer::binomial_u(n, k))
}

/// Limit of `(D phi_{N+j}, phi_{N+k}) / (m kappa b_{N+j}^n)`.
pub fn thm1_limit(m: usize, j: i64, k: i64) -> f64 {
    let n = (2 * m - 1) as i64;
    let d = j - k;
    if d == 0 || d.abs() > n || d % 2 == 0 {
        return 0.0;
    }
    let b = binom_int(n as u32, ((n - d.abs()) / 2) as u32).to_f64();
    d.signum() as f64 * b
}

/// Limit of `(eps phi_{N+j}, phi_{N+k}) (N+j) / c_{N+j}`; `parity` is `N mod 2`.
pub fn thm2_limit(m: usize, parity: i64, j: i64, k: i64, iq: &IqTable) -> Result<f64> {
    let d = j - k;
    if d % 2 == 0 {
        return Ok(0.0);
    }
    let sign = if (parity + j).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(sign / (2 * m) as f64 - iq.i(d)?)
}

/// `2 (m!)^2 / (2m)!` exactly.
pub fn scale_constant(m: usize) -> Rational {
    let mf = Integer::from(Integer::factorial(m as u32));
    let tmf = Integer::from(Integer::factorial(2 * m as u32));
    Rational::from((Integer::from(&mf * &mf) * 2u32, tmf))
}

/// Limits of the blocks `B_12 N / c_N` and `D_21 2^{2m-1} / (m kappa c_N^{2m-1})`
/// for even `N`, and the constant `2(m!)^2/(2m)!` multiplying their product.
#[derive(Clone, Debug)]
pub struct BaLimits {
    pub b12: DMatrix<f64>,
    pub d21: DMatrix<f64>,
    pub scale: Rational,
}

pub fn ba_limits(m: usize, iq: &IqTable) -> Result<BaLimits> {
    if m < 2 {
        return Err(Error::Invalid("ba_limits needs m >= 2".into()));
    }
    let n = 2 * m - 1;
    let mut b12 = DMatrix::zeros(n, n);
    let mut d21 = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let j = r as i64 - n as i64;
            let k = c as i64;
            b12[(r, c)] = thm2_limit(m, 0, j, k, iq)?;
            if c >= r && (c - r) % 2 == 0 {
                d21[(r, c)] = binom_int(n as u32, ((c - r) / 2) as u32).to_f64();
            }
        }
    }
    Ok(BaLimits { b12, d21, scale: scale_constant(m) })
}
