//! `y_m(theta)`, its Riccati equation, and the `G` / `G_a` ratios.

use std::f64::consts::PI;

use serde::Serialize;

use crate::asymptotics::{gl_integrate, HFunction};
use crate::orthopoly::binom;

/// Evaluator for `y_m(theta) = (m / cos) (1/h(sin) - 1/(4m) - cos^2/2)`.
#[derive(Clone, Debug)]
pub struct YmEvaluator {
    pub m: usize,
    h: HFunction,
    /// `4m - h(x) = sum_{j>=1} gamma_j (1 - x^2)^j`, stored as `gamma_1, gamma_2, ...`
    gamma: Vec<f64>,
}

/// Below this value of `cos(theta)` the expanded form is used.
pub const REMOVABLE_RADIUS: f64 = 1e-3;

impl YmEvaluator {
    pub fn new(m: usize) -> Self {
        let h = HFunction::new(m);
        let beta: Vec<f64> = h.beta.iter().map(|b| b.to_f64()).collect();
        let gamma = (1..m)
            .map(|j| {
                let s: f64 = (j..m).map(|k| beta[k] * binom(k, j)).sum();
                if j % 2 == 1 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        Self { m, h, gamma }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let t = theta.abs().min(PI / 2.0);
        let c = t.cos();
        let m = self.m as f64;
        let x = t.sin();
        if c > REMOVABLE_RADIUS {
            m / c * (1.0 / self.h.eval(x) - 1.0 / (4.0 * m) - 0.5 * c * c)
        } else {
            let c2 = c * c;
            let p = self.gamma.iter().rev().fold(0.0, |acc, g| acc * c2 + g);
            m * c * (p / (4.0 * m * self.h.eval(x)) - 0.5)
        }
    }
}

pub fn y_m_eval(m: usize, theta: f64) -> f64 {
    YmEvaluator::new(m).eval(theta)
}

/// Right side of `y' = (4/sin)(y + (2m+1) cos/4)(y + 1/(2 cos))`.
pub fn riccati_rhs(m: usize, theta: f64, y: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    4.0 / s * (y + (2 * m + 1) as f64 * c / 4.0) * (y + 1.0 / (2.0 * c))
}

#[derive(Clone, Debug, Serialize)]
pub struct RiccatiReport {
    pub m: usize,
    pub step: f64,
    pub points: usize,
    pub max_residual: f64,
}

/// Residual of the Riccati equation with a fourth-order central difference.
pub fn riccati_residual(m: usize, grid: &[f64], step: f64) -> RiccatiReport {
    let y = YmEvaluator::new(m);
    let mut worst: f64 = 0.0;
    for &t in grid {
        let d = (-y.eval(t + 2.0 * step) + 8.0 * y.eval(t + step) - 8.0 * y.eval(t - step) + y.eval(t - 2.0 * step))
            / (12.0 * step);
        worst = worst.max((d - riccati_rhs(m, t, y.eval(t))).abs());
    }
    RiccatiReport { m, step, points: grid.len(), max_residual: worst }
}

/// `n` equally spaced points in `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct YProfile {
    pub m: usize,
    pub theta_min: f64,
    pub y_min: f64,
    pub unimodal: bool,
    /// Sign changes of the derivative on the sampling grid.
    pub sign_changes: usize,
    pub max_value: f64,
    /// `-sqrt(m + 1/2) / 2`.
    pub lower_bound: f64,
    /// Second difference at 0 against `-(2m-1)/(2(2m-3))`.
    pub ypp0: f64,
    pub ypp0_law: f64,
}

pub fn y_m_profile(m: usize) -> YProfile {
    let y = YmEvaluator::new(m);
    let n = 4001;
    let grid = linspace(0.0, PI / 2.0, n);
    let vals: Vec<f64> = grid.iter().map(|&t| y.eval(t)).collect();
    let mut changes = Vec::new();
    let diffs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let mut last = 0.0f64;
    for d in diffs {
        if d == 0.0 {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            changes.push(last < 0.0 && d > 0.0);
        }
        last = d;
    }
    let unimodal = changes.len() == 1 && changes[0];
    let imin = (0..n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let lo = grid[imin.saturating_sub(1)];
    let hi = grid[(imin + 1).min(n - 1)];
    let (theta_min, y_min) = golden_min(|t| y.eval(t), lo, hi);
    let h = 1e-3;
    let ypp0 = 2.0 * (y.eval(h) - y.eval(0.0)) / (h * h);
    YProfile {
        m,
        theta_min,
        y_min,
        unimodal,
        sign_changes: changes.len(),
        max_value: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lower_bound: -0.5 * (m as f64 + 0.5).sqrt(),
        ypp0,
        ypp0_law: if m >= 2 { -0.5 * (2 * m - 1) as f64 / (2 * m - 3) as f64 } else { f64::NAN },
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// `int_0^1 f(v) dv / sqrt(1-v)` with `v = 1 - t^2`, panels graded towards `t = 1`.
pub fn endpoint_integral(f: impl Fn(f64) -> f64) -> f64 {
    let g = |t: f64| 2.0 * f(1.0 - t * t);
    let mut s = 0.0;
    let mut lo = 0.0;
    for i in 1..=48 {
        let hi = 1.0 - 0.5f64.powi(i);
        s += gl_integrate(&g, lo, hi, 1, 24);
        lo = hi;
    }
    s + gl_integrate(&g, lo, 1.0, 1, 24)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GValues {
    pub g: f64,
    pub g_a: f64,
    pub gap: f64,
}

/// `G(rho)`, `G_a(rho)` and their difference.
pub fn g_funcs(m: usize, rho: f64) -> GValues {
    let k = m as f64 + 0.5;
    let pw = |v: f64| (1.0 + rho * v).powf(-k);
    let ex = |v: f64| (-rho * k * v).exp();
    let g = endpoint_integral(|v| pw(v) * v) / endpoint_integral(pw);
    let g_a = endpoint_integral(|v| ex(v) * v) / endpoint_integral(ex);
    GValues { g, g_a, gap: g - g_a }
}

/// `R(m) = 1 / (1 + 1/sqrt m)`.
pub fn r_of_m(m: usize) -> f64 {
    1.0 / (1.0 + 1.0 / (m as f64).sqrt())
}

/// `Delta(s) = s^2 int e^{-s v R} v^2 / sqrt(1-v) / int e^{-s v} / sqrt(1-v)`.
pub fn delta_ratio(s: f64, r: f64) -> f64 {
    s * s * endpoint_integral(|v| (-s * v * r).exp() * v * v) / endpoint_integral(|v| (-s * v).exp())
}

/// `y_m` from the `G` representation, `x = sin theta`, `rho = x^{-2} - 1`.
pub fn y_m_from_g(m: usize, theta: f64) -> f64 {
    let x = theta.abs().sin();
    let c = (1.0 - x * x).sqrt();
    let rho = 1.0 / (x * x) - 1.0;
    -0.5 * c - 0.5 * (m as f64 - 1.0) * c * g_funcs(m, rho).g
}

/// The integral `int_0^{pi/2} cos(q theta) y_m(theta) d theta`.
pub fn cos_moment(m: usize, q: f64) -> f64 {
    let y = YmEvaluator::new(m);
    let panels = ((q.abs() / 2.0).ceil() as usize).max(4);
    gl_integrate(|t| (q * t).cos() * y.eval(t), 0.0, PI / 2.0, panels, 32)
}
