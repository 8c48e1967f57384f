//! The matrices `T_m'`, `T_{m-1}` and the three bound chains for `det T_{m-1} != 0`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::asymptotics::{binom_int, scale_constant, IqTable};
use crate::error::{Error, Result};
use crate::linalg::{det, max_abs};

/// `gamma_m = 2 (m!)^2 / (m (2m)!)`.
pub fn gamma_m(m: usize) -> Rational {
    scale_constant(m) / Rational::from(m as u32)
}

/// `(m!)^2 2^{2m-2} / (m (2m)!)`, exactly.
pub fn central_ratio(m: usize) -> Rational {
    let mut r = Rational::from((1u32, 4 * m as u32));
    for i in 1..=m as u32 {
        r *= Rational::from((2 * i, 2 * i - 1));
    }
    r
}

/// `1/2 - (m!)^2 2^{2m-2} / (m (2m)!)`, the factor in the operator-norm estimate.
pub fn norm_factor(m: usize) -> f64 {
    (Rational::from((1, 2)) - central_ratio(m)).to_f64()
}

/// `sum_{l<m} binom(2m-1, l)`.
pub fn half_binomial_sum(m: usize) -> Integer {
    (0..m as u32).map(|l| binom_int(2 * m as u32 - 1, l)).sum()
}

#[derive(Clone, Debug)]
pub struct TMatrices {
    pub m: usize,
    pub tm_prime: DMatrix<f64>,
    pub tm_minus1: DMatrix<f64>,
    pub gamma_m: Rational,
    /// `ones + I~(q)`, `q = 2(k-j) + 2m-1`.
    pub x: DMatrix<f64>,
    /// `binom(2m-1, k-j)` on and above the diagonal.
    pub y: DMatrix<f64>,
}

fn upper_binomials(n: usize, size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |j, k| if k >= j { binom_int(n as u32, (k - j) as u32).to_f64() } else { 0.0 })
}

pub fn build_t(m: usize, iq: &IqTable) -> Result<TMatrices> {
    if m < 2 {
        return Err(Error::Invalid("T matrices need m >= 2".into()));
    }
    let n = 2 * m - 1;
    let s = scale_constant(m).to_f64();
    let q_of = |j: usize, k: usize| n as i64 + 2 * (k as i64 - j as i64);
    let mut inner = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            inner[(j, k)] = -1.0 / (2 * m) as f64 + iq.i(q_of(j, k))?;
        }
    }
    let yp = upper_binomials(n, m);
    let tm_prime = DMatrix::identity(m, m) - (inner * &yp) * s;
    let mut x = DMatrix::zeros(m - 1, m - 1);
    for j in 0..m - 1 {
        for k in 0..m - 1 {
            x[(j, k)] = 1.0 + iq.itilde(q_of(j, k))?;
        }
    }
    let y = upper_binomials(n, m - 1);
    let g = gamma_m(m);
    let tm_minus1 = DMatrix::identity(m - 1, m - 1) - (&x * &y) * g.to_f64();
    Ok(TMatrices { m, tm_prime, tm_minus1, gamma_m: g, x, y })
}

impl TMatrices {
    /// `T_{m-1}` from the `I(q)` form `I - s [ones/(2m) + I(q)] Y`.
    pub fn tm_minus1_from_i(&self, iq: &IqTable) -> Result<DMatrix<f64>> {
        let m = self.m;
        let n = 2 * m - 1;
        let s = scale_constant(m).to_f64();
        let mut inner = DMatrix::zeros(m - 1, m - 1);
        for j in 0..m - 1 {
            for k in 0..m - 1 {
                inner[(j, k)] = 1.0 / (2 * m) as f64 + iq.i(n as i64 + 2 * (k as i64 - j as i64))?;
            }
        }
        Ok(DMatrix::identity(m - 1, m - 1) - (inner * &self.y) * s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DetReport {
    pub m: usize,
    pub det_tm_prime: f64,
    pub det_tm_minus1: f64,
    pub relative_gap: f64,
    pub abs_det: f64,
    pub distance_to_inv_sqrt2: f64,
    pub reconstruction: f64,
}

pub fn det_report(t: &TMatrices, iq: &IqTable) -> Result<DetReport> {
    let a = det(&t.tm_prime);
    let b = det(&t.tm_minus1);
    let recon = max_abs(&(t.tm_minus1_from_i(iq)? - &t.tm_minus1));
    Ok(DetReport {
        m: t.m,
        det_tm_prime: a,
        det_tm_minus1: b,
        relative_gap: ((a - b) / b).abs(),
        abs_det: b.abs(),
        distance_to_inv_sqrt2: (b.abs() - std::f64::consts::FRAC_1_SQRT_2).abs(),
        reconstruction: recon,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Crude,
    Refined,
    LargeM,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub m: usize,
    pub route: Route,
    /// Bound on `||gamma_m X Y||` in the max norm; the route certifies when it is `< 1`.
    pub bound_value: f64,
    pub passes: bool,
    pub components: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(m: usize, route: Route, bound_value: f64, components: BTreeMap<String, f64>) -> Self {
        Self { m, route, bound_value, passes: bound_value < 1.0, components }
    }
}

/// `t_m = sqrt((2m-1)/(2m-2))`.
pub fn t_m(m: usize) -> f64 {
    ((2 * m - 1) as f64 / (2 * m - 2) as f64).sqrt()
}

/// `L(m)`, the a priori bound on `|I~(q)|`.
pub fn l_of_m(m: usize) -> f64 {
    let t = t_m(m);
    ((2 * m - 1) as f64).ln() - 2.0 + (t + 1.0) * (1.0 + 1.0 / t).ln() - (t - 1.0) * (1.0 - 1.0 / t).ln()
}

pub fn l_bound(m: usize) -> f64 {
    l_of_m(m) / PI
}

pub fn crude_bound(m: usize) -> Result<BoundReport> {
    if m < 2 {
        return Err(Error::Invalid("bounds need m >= 2".into()));
    }
    let l = l_bound(m);
    let f = norm_factor(m);
    let comps = BTreeMap::from([("L".to_string(), l), ("t_m".to_string(), t_m(m)), ("norm_factor".to_string(), f)]);
    Ok(BoundReport::new(m, Route::Crude, (1.0 + l) * f, comps))
}

/// `4 sqrt(m + 1/2) / (q pi)`.
pub fn q_estimate(m: usize, q: usize) -> f64 {
    4.0 * (m as f64 + 0.5).sqrt() / (q as f64 * PI)
}

fn row_sum_bound(m: usize, xt: impl Fn(usize, usize) -> f64) -> f64 {
    let n = 2 * m - 1;
    let y = upper_binomials(n, m - 1);
    let g = gamma_m(m).to_f64();
    (0..m - 1)
        .map(|i| {
            let mut s = 0.0;
            for k in 0..m - 1 {
                for j in 0..m - 1 {
                    s += xt(i, k) * y[(k, j)];
                }
            }
            s
        })
        .fold(0.0, f64::max)
        * g
}

pub fn refined_bound(m: usize) -> Result<BoundReport> {
    if m < 2 {
        return Err(Error::Invalid("bounds need m >= 2".into()));
    }
    let l = l_bound(m);
    let q = |j: usize, k: usize| (2 * k as i64 - 2 * j as i64 + 2 * m as i64 - 1) as usize;
    let v = row_sum_bound(m, |j, k| 1.0 + l.min(q_estimate(m, q(j, k))));
    let comps = BTreeMap::from([("L".to_string(), l), ("gamma_m".to_string(), gamma_m(m).to_f64())]);
    Ok(BoundReport::new(m, Route::Refined, v, comps))
}

/// The refined row sum with every entry replaced by `1 + L(m)`.
pub fn crude_row_sum(m: usize) -> f64 {
    let l = l_bound(m);
    row_sum_bound(m, |_, _| 1.0 + l)
}

/// `A(m), B(m), C(m), Denom(m)`.
pub fn abcd(m: usize) -> (f64, f64, f64, f64) {
    let mf = m as f64;
    let s2 = std::f64::consts::SQRT_2;
    let rm = mf.sqrt();
    let a = 7.0 / (PI * s2) * (mf - 1.0) * rm / ((mf - 0.5) * (mf - 2.5));
    let b = 3.0 / (PI * s2) * (0.5 * mf.ln() / (1.0 + 0.5 / rm).powf(mf - 1.5) + (2.0f64 / 3.0).powf(mf - 0.5));
    let c = 3.0 / (s2 - 1.0) / PI / (1.0 + (s2 - 1.0) / s2 / rm).powf(mf);
    let d = (mf - 1.5) / (mf - 0.5) * (1.0 - (-rm * (1.0 - 0.5 / mf) / (1.0 + 1.0 / rm)).exp());
    (a, b, c, d)
}

/// The four summands of `C_2(m)`, with the appendix constants 6 and 2.8.
pub fn c2_summands(m: usize) -> [f64; 4] {
    let mf = m as f64;
    let (a, b, c, d) = abcd(m);
    [
        (a + b + c) / d,
        6.0 / (PI * mf.sqrt()),
        0.5 / (mf - 1.5),
        4.0 / PI * (2.8 / PI + 4.0 / PI * (mf - 1.0) / (mf - 1.5) / mf.powf(0.75)),
    ]
}

pub fn c2(m: usize) -> f64 {
    c2_summands(m).iter().sum()
}

/// `[4 sqrt(m + 1/2) / pi]`.
pub fn small_q_limit(m: usize) -> usize {
    (4.0 / PI * (m as f64 + 0.5).sqrt()).floor() as usize
}

pub fn c1(m: usize) -> f64 {
    let v = 4.0 / PI * (m as f64 + 0.5).sqrt();
    1.0 + v / (v.floor() + 1.0)
}

pub fn large_m_bound(m: usize) -> Result<BoundReport> {
    if m < 38 {
        return Err(Error::Invalid(format!("the large-m route needs m >= 38, got {m}")));
    }
    let (a, b, c, d) = abcd(m);
    let (v1, v2) = (c1(m), c2(m));
    let cm = v1.max(v2);
    let f = norm_factor(m);
    let comps = BTreeMap::from([
        ("A".to_string(), a),
        ("B".to_string(), b),
        ("C".to_string(), c),
        ("Denom".to_string(), d),
        ("C1".to_string(), v1),
        ("C2".to_string(), v2),
        ("C".to_string(), cm),
        ("norm_factor".to_string(), f),
    ]);
    Ok(BoundReport::new(m, Route::LargeM, cm * f, comps))
}

/// Routes applicable to `m`: crude for `m <= 51`, refined for `m <= 99`, large-m for `m >= 38`.
pub fn routes_for(m: usize) -> Vec<Route> {
    let mut r = Vec::new();
    if (2..=51).contains(&m) {
        r.push(Route::Crude);
    }
    if (2..=99).contains(&m) {
        r.push(Route::Refined);
    }
    if m >= 38 {
        r.push(Route::LargeM);
    }
    r
}

pub fn bound(m: usize, route: Route) -> Result<BoundReport> {
    match route {
        Route::Crude => crude_bound(m),
        Route::Refined => refined_bound(m),
        Route::LargeM => large_m_bound(m),
    }
}
