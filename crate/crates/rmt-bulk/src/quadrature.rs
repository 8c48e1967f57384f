//! Gauss-Legendre rules in `f64` and multiprecision, and the composite
//! panel scheme used to build recurrence tables for `exp(-V)`.

use rug::float::Constant;
use rug::ops::PowAssign;
use rug::Float;

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_deriv(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Multiprecision Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre_mp(n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    assert!(n >= 1);
    let work = prec + 32;
    let zero = Float::with_val(prec, 0);
    let mut x = vec![zero.clone(); n];
    let mut w = vec![zero; n];
    let pi = Float::with_val(64, Constant::Pi).to_f64();
    let stop = Float::with_val(work, Float::i_exp(1, -(prec as i32) - 8));
    for i in 0..n.div_ceil(2) {
        let guess = (pi * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut z = Float::with_val(work, guess);
        let mut converged = 0;
        for _ in 0..200 {
            let (p, d) = legendre_mp(n, &z);
            let dz = Float::with_val(work, &p / &d);
            z -= &dz;
            if dz.abs() < stop {
                converged += 1;
                if converged == 2 {
                    break;
                }
            }
        }
        let (_, d) = legendre_mp(n, &z);
        let one_minus = Float::with_val(work, 1 - Float::with_val(work, &z * &z));
        let wi = Float::with_val(work, 2 / (one_minus * Float::with_val(work, &d * &d)));
        x[i] = Float::with_val(prec, -&z);
        x[n - 1 - i] = Float::with_val(prec, &z);
        w[i] = Float::with_val(prec, &wi);
        w[n - 1 - i] = Float::with_val(prec, &wi);
    }
    if n % 2 == 1 {
        x[n / 2] = Float::with_val(prec, 0);
    }
    (x, w)
}

fn legendre_mp(n: usize, x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut p0 = Float::with_val(prec, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let mut p2 = Float::with_val(prec, x * &p1);
        p2 *= (2 * k - 1) as u32;
        p2 -= Float::with_val(prec, &p0 * (k - 1) as u32);
        p2 /= k as u32;
        p0 = std::mem::replace(&mut p1, p2);
    }
    let mut d = Float::with_val(prec, x * &p1);
    d -= &p0;
    d *= n as u32;
    let den = Float::with_val(prec, x * x) - 1u32;
    d /= Float::with_val(prec, den);
    (p1, d)
}

/// Construction parameters for [`Quadrature`].
#[derive(Clone, Debug)]
pub struct QuadratureOptions {
    pub precision_bits: u32,
    pub nodes_per_panel: usize,
    /// Highest monomial degree that must be resolved.
    pub max_moment: usize,
    /// Upper bound on the total number of panels.
    pub max_panels: usize,
}

impl QuadratureOptions {
    pub fn new(precision_bits: u32, nodes_per_panel: usize, max_moment: usize) -> Self {
        Self { precision_bits, nodes_per_panel, max_moment, max_panels: 1024 }
    }
}

/// Composite Gauss-Legendre scheme on `[-T, T]` for the weight `exp(-V)`.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub potential: Potential,
    pub t: f64,
    /// Panel end points, ascending, symmetric about 0.
    pub panels: Vec<(f64, f64)>,
    pub nodes_per_panel: usize,
    pub precision_bits: u32,
    pub max_moment: usize,
    /// Nodes, ascending.
    pub x: Vec<Float>,
    /// Plain Gauss-Legendre weights.
    pub w: Vec<Float>,
    /// `w * exp(-V(x))`.
    pub ew: Vec<Float>,
    /// `exp(-V(x) / 2)`.
    pub half: Vec<Float>,
    /// Certified bound on `log2` of the discarded mass of `exp(-V)`.
    pub log2_tail: f64,
}

/// Natural log of the bound `2 g(T) / c` on `int_{|x|>T} |x|^k exp(-V)`,
/// where `g(x) = x^k exp(-a x^p)` and `c = a p T^{p-1} - k/T`.
fn ln_tail(k: usize, a: f64, p: usize, t: f64) -> f64 {
    let c = a * p as f64 * t.powi(p as i32 - 1) - k as f64 / t;
    if c <= 0.0 {
        return f64::INFINITY;
    }
    std::f64::consts::LN_2 + k as f64 * t.ln() - a * t.powi(p as i32) - c.ln()
}

/// Composite rule with the default moment range `4 * 64`.
pub fn build_quadrature(v: &Potential, precision_bits: u32, panel_hint: usize) -> Result<Quadrature> {
    build_quadrature_with(v, &QuadratureOptions::new(precision_bits, panel_hint, 4 * 64))
}

pub fn build_quadrature_with(v: &Potential, opts: &QuadratureOptions) -> Result<Quadrature> {
    let prec = opts.precision_bits;
    if prec < 64 {
        return Err(Error::Precision(prec));
    }
    if opts.nodes_per_panel < 8 {
        return Err(Error::Invalid("at least 8 nodes per panel are required".into()));
    }
    let (a, r0) = v.growth_bound();
    let p = v.degree();
    let guard = -((prec + 10) as f64) * std::f64::consts::LN_2;
    let mut t = r0.max(0.25);
    while ln_tail(0, a, p, t) > guard {
        t += 0.125;
    }
    let (tx, tw) = gauss_legendre_mp(opts.nodes_per_panel, prec);
    loop {
        let q = resolve_panels(v, t, &tx, &tw, opts)?;
        // relative tail for the top moment, against its computed absolute value
        let kmax = opts.max_moment;
        let mut abs_k = Float::with_val(prec, 0);
        for (xi, ewi) in q.x.iter().zip(&q.ew) {
            let mut term = Float::with_val(prec, xi.abs_ref());
            term.pow_assign(kmax as u32);
            term *= ewi;
            abs_k += term;
        }
        let ln_abs = abs_k.ln().to_f64();
        if ln_tail(kmax, a, p, t) <= guard + ln_abs {
            return Ok(q);
        }
        t += 0.125;
    }
}

fn resolve_panels(
    v: &Potential,
    t: f64,
    tx: &[Float],
    tw: &[Float],
    opts: &QuadratureOptions,
) -> Result<Quadrature> {
    let prec = opts.precision_bits;
    let mut half_panels = (t.ceil() as usize).max(2);
    let coarse = assemble(v, t, half_panels, tx, tw, prec);
    let mut coarse_m = moments(&coarse.0, &coarse.2, opts.max_moment, prec);
    let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32 - 20)));
    loop {
        half_panels *= 2;
        if 2 * half_panels > opts.max_panels {
            let first = first_unresolved(&coarse_m, &coarse_m, &tol).unwrap_or(0);
            return Err(Error::UnresolvedMoment { moment: first, panels: opts.max_panels });
        }
        let fine = assemble(v, t, half_panels, tx, tw, prec);
        let fine_m = moments(&fine.0, &fine.2, opts.max_moment, prec);
        match first_unresolved(&coarse_m, &fine_m, &tol) {
            None => {
                let (x, w, ew, half, panels) = fine;
                let (a, _) = v.growth_bound();
                let log2_tail = ln_tail(0, a, v.degree(), t) / std::f64::consts::LN_2;
                return Ok(Quadrature {
                    potential: v.clone(),
                    t,
                    panels,
                    nodes_per_panel: tx.len(),
                    precision_bits: prec,
                    max_moment: opts.max_moment,
                    x,
                    w,
                    ew,
                    half,
                    log2_tail,
                });
            }
            Some(k) if 4 * half_panels > opts.max_panels => {
                return Err(Error::UnresolvedMoment { moment: k, panels: opts.max_panels });
            }
            Some(_) => coarse_m = fine_m,
        }
    }
}

type Assembled = (Vec<Float>, Vec<Float>, Vec<Float>, Vec<Float>, Vec<(f64, f64)>);

fn assemble(v: &Potential, t: f64, half_panels: usize, tx: &[Float], tw: &[Float], prec: u32) -> Assembled {
    let h = Float::with_val(prec, t) / half_panels as u32;
    let hw = Float::with_val(prec, &h / 2u32);
    // positive half first, then mirrored
    let mut pos_x = Vec::with_capacity(half_panels * tx.len());
    let mut pos_w = Vec::with_capacity(half_panels * tx.len());
    let mut pos_panels = Vec::with_capacity(half_panels);
    for i in 0..half_panels {
        let left = Float::with_val(prec, &h * i as u32);
        let mid = Float::with_val(prec, &left + &hw);
        let right = Float::with_val(prec, &h * (i + 1) as u32);
        pos_panels.push((left.to_f64(), right.to_f64()));
        for (ti, wi) in tx.iter().zip(tw) {
            pos_x.push(Float::with_val(prec, &mid + Float::with_val(prec, &hw * ti)));
            pos_w.push(Float::with_val(prec, &hw * wi));
        }
    }
    let mut x: Vec<Float> = pos_x.iter().rev().map(|z| Float::with_val(prec, -z)).collect();
    let mut w: Vec<Float> = pos_w.iter().rev().cloned().collect();
    x.extend(pos_x);
    w.extend(pos_w);
    let mut panels: Vec<(f64, f64)> = pos_panels.iter().rev().map(|(a, b)| (-b, -a)).collect();
    panels.extend(pos_panels);
    let mut ew = Vec::with_capacity(x.len());
    let mut half = Vec::with_capacity(x.len());
    for (xi, wi) in x.iter().zip(&w) {
        let vx = v.eval_mp(xi);
        let hv = Float::with_val(prec, -vx / 2u32).exp();
        let e = Float::with_val(prec, &hv * &hv);
        ew.push(Float::with_val(prec, wi * &e));
        half.push(hv);
    }
    (x, w, ew, half, panels)
}

/// Signed and absolute moments `sum ew x^k`, `sum ew |x|^k`.
fn moments(x: &[Float], ew: &[Float], kmax: usize, prec: u32) -> Vec<(Float, Float)> {
    let mut out = vec![(Float::with_val(prec, 0), Float::with_val(prec, 0)); kmax + 1];
    for (xi, ewi) in x.iter().zip(ew) {
        let mut term = ewi.clone();
        for (k, slot) in out.iter_mut().enumerate() {
            if k > 0 {
                term *= xi;
            }
            slot.0 += &term;
            slot.1 += Float::with_val(prec, term.abs_ref());
        }
    }
    out
}

fn first_unresolved(a: &[(Float, Float)], b: &[(Float, Float)], tol: &Float) -> Option<usize> {
    a.iter().zip(b).position(|(ma, mb)| {
        let diff = Float::with_val(ma.0.prec(), &ma.0 - &mb.0).abs();
        diff > Float::with_val(ma.0.prec(), tol * &mb.1)
    })
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `int exp(-V)` over the window.
    pub fn mass(&self) -> Float {
        let mut s = Float::with_val(self.precision_bits, 0);
        for e in &self.ew {
            s += e;
        }
        s
    }

    /// `int f(x) exp(-V(x)) dx` for an `f64` integrand, summed in `f64`.
    pub fn integrate_weighted(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.ew).map(|(x, e)| f(x.to_f64()) * e.to_f64()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    #[test]
    fn f64_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        for k in 0..24 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "k={k}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn mp_rule_matches_f64_rule() {
        let (x, w) = gauss_legendre(9);
        let (xm, wm) = gauss_legendre_mp(9, 200);
        for i in 0..9 {
            assert!((x[i] - xm[i].to_f64()).abs() < 1e-15);
            assert!((w[i] - wm[i].to_f64()).abs() < 1e-15);
        }
        // x^16 at 200 bits
        let mut s = Float::with_val(200, 0);
        for (xi, wi) in xm.iter().zip(&wm) {
            s += Float::with_val(200, xi.pow(16u32)) * wi;
        }
        let exact = Float::with_val(200, 2) / 17u32;
        assert!(Float::with_val(200, s - exact).abs() < Float::with_val(200, Float::i_exp(1, -190)));
    }

    #[test]
    fn gaussian_window_is_about_ten() {
        let v = Potential::monomial(1, 1.0).unwrap();
        let q = build_quadrature_with(&v, &QuadratureOptions::new(128, 24, 8)).unwrap();
        assert!(q.t > 9.0 && q.t <= 10.5, "T = {}", q.t);
        assert!(q.log2_tail < -138.0);
        let sqrt_pi = Float::with_val(128, Constant::Pi).sqrt();
        let err = Float::with_val(128, q.mass() - sqrt_pi).abs().to_f64();
        assert!(err < 1e-35, "err {err}");
    }

    #[test]
    fn panels_are_symmetric_and_positive() {
        let v = Potential::parse("k4=1,k2=-1").unwrap();
        let q = build_quadrature_with(&v, &QuadratureOptions::new(96, 16, 16)).unwrap();
        let n = q.len();
        for i in 0..n {
            assert_eq!(q.x[i].to_f64(), -q.x[n - 1 - i].to_f64());
            assert!(q.w[i] > 0);
        }
        assert_eq!(q.panels.first().unwrap().0, -q.t);
        assert!(q.panels.iter().any(|p| p.1 == 0.0));
    }

    #[test]
    fn panel_budget_failure_names_a_moment() {
        let v = Potential::monomial(2, 1.0).unwrap();
        let opts = QuadratureOptions { precision_bits: 256, nodes_per_panel: 8, max_moment: 256, max_panels: 8 };
        match build_quadrature_with(&v, &opts) {
            Err(Error::UnresolvedMoment { moment, panels }) => {
                assert_eq!(panels, 8);
                assert!(moment <= 256);
            }
            other => panic!("expected failure, got {:?}", other.map(|q| q.len())),
        }
    }
}
