//! Orthonormal polynomials for `exp(-V)`: the discretized Stieltjes
//! recurrence in multiprecision and an `f64` evaluator for `phi_j`,
//! `phi_j'` and `eps phi_j`.

use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::{gauss_legendre, Quadrature};

/// Recurrence `x p_j = b_j p_{j+1} + a_j p_j + b_{j-1} p_{j-1}` with
/// `p_0 = mu0^{-1/2}`.
#[derive(Clone, Debug)]
pub struct RecurrenceTable {
    pub potential: Potential,
    pub jmax: usize,
    pub precision_bits: u32,
    pub mu0: Float,
    pub a: Vec<Float>,
    pub b: Vec<Float>,
}

/// Discretized Stieltjes procedure against `quad`.
pub fn recurrence_table(v: &Potential, jmax: usize, quad: &Quadrature) -> Result<RecurrenceTable> {
    if jmax < 1 {
        return Err(Error::Invalid("Jmax must be at least 1".into()));
    }
    if &quad.potential != v {
        return Err(Error::Invalid("quadrature was built for a different potential".into()));
    }
    let prec = quad.precision_bits;
    let zero = Float::with_val(prec, 0);
    let mu0 = quad.mass();
    let p0 = Float::with_val(prec, mu0.recip_sqrt_ref());
    let mut p = vec![p0; quad.len()];
    let mut p_prev = vec![zero.clone(); quad.len()];
    let mut a = Vec::with_capacity(jmax + 1);
    let mut b: Vec<Float> = Vec::with_capacity(jmax + 1);
    let mut tmp = Float::new(prec);
    for j in 0..=jmax {
        let mut aj = zero.clone();
        for ((x, e), pj) in quad.x.iter().zip(&quad.ew).zip(&p) {
            tmp.assign(pj * pj);
            tmp *= x;
            tmp *= e;
            aj += &tmp;
        }
        let mut q = Vec::with_capacity(quad.len());
        let mut norm2 = zero.clone();
        for (i, x) in quad.x.iter().enumerate() {
            let mut qi = Float::with_val(prec, x - &aj);
            qi *= &p[i];
            if j > 0 {
                tmp.assign(&b[j - 1] * &p_prev[i]);
                qi -= &tmp;
            }
            tmp.assign(&qi * &qi);
            tmp *= &quad.ew[i];
            norm2 += &tmp;
            q.push(qi);
        }
        if !(norm2.is_finite() && norm2 > 0) {
            return Err(Error::Positivity(j));
        }
        let bj = norm2.sqrt();
        for qi in q.iter_mut() {
            *qi /= &bj;
        }
        a.push(aj);
        b.push(bj);
        p_prev = std::mem::replace(&mut p, q);
    }
    Ok(RecurrenceTable { potential: v.clone(), jmax, precision_bits: prec, mu0, a, b })
}

/// Serialized form: every number is a decimal string.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RecurrenceTableFile {
    pub coeffs: Vec<String>,
    pub jmax: usize,
    pub precision_bits: u32,
    pub mu0: String,
    pub a: Vec<String>,
    pub b: Vec<String>,
}

fn dec(x: &Float) -> String {
    x.to_string_radix(10, None)
}

fn parse_dec(s: &str, prec: u32) -> Result<Float> {
    Float::parse(s)
        .map(|p| Float::with_val(prec, p))
        .map_err(|e| Error::Cache(format!("bad decimal '{s}': {e}")))
}

impl RecurrenceTable {
    pub fn a_f64(&self) -> Vec<f64> {
        self.a.iter().map(Float::to_f64).collect()
    }

    pub fn b_f64(&self) -> Vec<f64> {
        self.b.iter().map(Float::to_f64).collect()
    }

    /// Cache key fields `(coeffs, Jmax, precision_bits)`.
    pub fn key(&self) -> (String, usize, u32) {
        (self.potential.spec_string(), self.jmax, self.precision_bits)
    }

    pub fn to_file(&self) -> RecurrenceTableFile {
        RecurrenceTableFile {
            coeffs: self.potential.coeffs().iter().map(|c| format!("{c}")).collect(),
            jmax: self.jmax,
            precision_bits: self.precision_bits,
            mu0: dec(&self.mu0),
            a: self.a.iter().map(dec).collect(),
            b: self.b.iter().map(dec).collect(),
        }
    }

    pub fn from_file(f: &RecurrenceTableFile) -> Result<Self> {
        let coeffs = f
            .coeffs
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| Error::Cache(format!("bad coefficient '{c}'"))))
            .collect::<Result<Vec<_>>>()?;
        let potential = Potential::new(coeffs)?;
        if f.a.len() != f.jmax + 1 || f.b.len() != f.jmax + 1 {
            return Err(Error::Cache("coefficient arrays do not match Jmax".into()));
        }
        let prec = f.precision_bits;
        let a = f.a.iter().map(|s| parse_dec(s, prec)).collect::<Result<Vec<_>>>()?;
        let b = f.b.iter().map(|s| parse_dec(s, prec)).collect::<Result<Vec<_>>>()?;
        if let Some(j) = b.iter().position(|bj| !(bj.is_finite() && *bj > 0)) {
            return Err(Error::Positivity(j));
        }
        Ok(Self { potential, jmax: f.jmax, precision_bits: prec, mu0: parse_dec(&f.mu0, prec)?, a, b })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: RecurrenceTableFile = serde_json::from_str(s).map_err(|e| Error::Cache(e.to_string()))?;
        Self::from_file(&f)
    }
}

/// Values of `phi_j`, `phi_j'` and `eps phi_j` at one point for
/// `j = 0..=upto`.
#[derive(Clone, Debug)]
pub struct PointData {
    pub x: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub eps: Vec<f64>,
    /// `x` lies outside the truncation window; `eps` holds the tail constants.
    pub outside: bool,
}

/// `f64` evaluator for the orthonormal functions of a recurrence table.
#[derive(Clone, Debug)]
pub struct PhiBasis {
    pub potential: Potential,
    pub jmax: usize,
    pub precision_bits: u32,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    p0: f64,
    pub t: f64,
    pub panels: Vec<(f64, f64)>,
    /// Quadrature nodes and plain weights.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `phi_j` at the nodes, `[j][i]`, from the multiprecision recurrence.
    pub phi_nodes: Vec<Vec<f64>>,
    /// `eps phi_j` at the nodes, `[j][i]`.
    pub eps_nodes: Vec<Vec<f64>>,
    after: Vec<Vec<f64>>,
    totals: Vec<f64>,
    ref_x: Vec<f64>,
    ref_w: Vec<f64>,
}

const RESCALE: f64 = 3.273390607896142e150; // 2^500

/// `S[i][l] = int_{-1}^{t_i} ell_l`, the Gauss-Legendre integration matrix.
fn integration_matrix(t: &[f64], w: &[f64]) -> Vec<Vec<f64>> {
    let n = t.len();
    let leg = |x: f64| {
        let mut p = vec![0.0; n + 1];
        p[0] = 1.0;
        if n > 0 {
            p[1] = x;
        }
        for k in 1..n {
            p[k + 1] = ((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
        }
        p
    };
    let at_nodes: Vec<Vec<f64>> = t.iter().map(|&x| leg(x)).collect();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        let pi = &at_nodes[i];
        let q: Vec<f64> = (0..n)
            .map(|k| if k == 0 { t[i] + 1.0 } else { (pi[k + 1] - pi[k - 1]) / (2 * k + 1) as f64 })
            .collect();
        for l in 0..n {
            let pl = &at_nodes[l];
            let acc: f64 = (0..n).map(|k| (2 * k + 1) as f64 * 0.5 * pl[k] * q[k]).sum();
            s[i][l] = w[l] * acc;
        }
    }
    s
}

impl PhiBasis {
    pub fn new(table: &RecurrenceTable, quad: &Quadrature) -> Result<Self> {
        if table.potential != quad.potential {
            return Err(Error::Invalid("table and quadrature potentials differ".into()));
        }
        let prec = quad.precision_bits.max(table.precision_bits);
        let jmax = table.jmax;
        let n_nodes = quad.len();
        let mut phi_nodes = vec![vec![0.0; n_nodes]; jmax + 1];
        let p0 = Float::with_val(prec, table.mu0.recip_sqrt_ref());
        let mut tmp = Float::new(prec);
        for i in 0..n_nodes {
            let x = &quad.x[i];
            let mut prev = Float::with_val(prec, 0);
            let mut cur = p0.clone();
            for j in 0..=jmax {
                tmp.assign(&cur * &quad.half[i]);
                phi_nodes[j][i] = tmp.to_f64();
                if j < jmax {
                    let mut next = Float::with_val(prec, x - &table.a[j]);
                    next *= &cur;
                    if j > 0 {
                        tmp.assign(&table.b[j - 1] * &prev);
                        next -= &tmp;
                    }
                    next /= &table.b[j];
                    prev = std::mem::replace(&mut cur, next);
                }
            }
        }
        let nodes: Vec<f64> = quad.x.iter().map(Float::to_f64).collect();
        let weights: Vec<f64> = quad.w.iter().map(Float::to_f64).collect();
        let npp = quad.nodes_per_panel;
        let (ref_x, ref_w) = gauss_legendre(npp);
        let smat = integration_matrix(&ref_x, &ref_w);
        let n_panels = quad.panels.len();
        let mut panel_int = vec![vec![0.0; jmax + 1]; n_panels];
        let mut eps_nodes = vec![vec![0.0; n_nodes]; jmax + 1];
        let mut totals = vec![0.0; jmax + 1];
        for j in 0..=jmax {
            let f = &phi_nodes[j];
            for (p, slot) in panel_int.iter_mut().enumerate() {
                slot[j] = (p * npp..(p + 1) * npp).map(|i| weights[i] * f[i]).sum();
            }
            totals[j] = panel_int.iter().map(|s| s[j]).sum();
            let mut before = 0.0;
            for (p, &(a, b)) in quad.panels.iter().enumerate() {
                let hw = 0.5 * (b - a);
                for r in 0..npp {
                    let part: f64 = (0..npp).map(|l| smat[r][l] * f[p * npp + l]).sum();
                    eps_nodes[j][p * npp + r] = before + hw * part - 0.5 * totals[j];
                }
                before += panel_int[p][j];
            }
        }
        let mut after = vec![vec![0.0; jmax + 1]; n_panels];
        for p in (0..n_panels.saturating_sub(1)).rev() {
            for j in 0..=jmax {
                after[p][j] = after[p + 1][j] + panel_int[p + 1][j];
            }
        }
        Ok(Self {
            potential: table.potential.clone(),
            jmax,
            precision_bits: table.precision_bits,
            a: table.a_f64(),
            b: table.b_f64(),
            p0: p0.to_f64(),
            t: quad.t,
            panels: quad.panels.clone(),
            nodes,
            weights,
            phi_nodes,
            eps_nodes,
            after,
            totals,
            ref_x,
            ref_w,
        })
    }

    /// Builds quadrature, recurrence and evaluator in one step.
    pub fn build(v: &Potential, jmax: usize, precision_bits: u32) -> Result<Self> {
        let (_, basis) = Self::build_with_table(v, jmax, precision_bits)?;
        Ok(basis)
    }

    pub fn build_with_table(v: &Potential, jmax: usize, precision_bits: u32) -> Result<(RecurrenceTable, Self)> {
        let quad = crate::quadrature::build_quadrature_with(
            v,
            &crate::quadrature::QuadratureOptions::new(precision_bits, 40, 4 * jmax),
        )?;
        let table = recurrence_table(v, jmax, &quad)?;
        let basis = Self::new(&table, &quad)?;
        Ok((table, basis))
    }

    /// Rebuilds the evaluator for a cached table.
    pub fn from_table(table: &RecurrenceTable) -> Result<Self> {
        let quad = crate::quadrature::build_quadrature_with(
            &table.potential,
            &crate::quadrature::QuadratureOptions::new(table.precision_bits, 40, 4 * table.jmax),
        )?;
        Self::new(table, &quad)
    }

    pub fn m(&self) -> usize {
        self.potential.m()
    }

    pub fn n(&self) -> usize {
        self.potential.n()
    }

    fn check(&self, j: usize) -> Result<()> {
        if j > self.jmax {
            Err(Error::Index { index: j, jmax: self.jmax })
        } else {
            Ok(())
        }
    }

    /// `phi_j(x)` and `phi_j'(x)` for `j = 0..=upto`.
    pub fn phi_dphi_all(&self, x: f64, upto: usize) -> (Vec<f64>, Vec<f64>) {
        let upto = upto.min(self.jmax);
        let v = self.potential.eval(x);
        let vp = self.potential.deriv(x);
        let mut phi = Vec::with_capacity(upto + 1);
        let mut dphi = Vec::with_capacity(upto + 1);
        let (mut pp, mut p, mut dpp, mut dp) = (0.0, self.p0, 0.0, 0.0);
        let mut ls = 0.0;
        for j in 0..=upto {
            let f = (ls - 0.5 * v).exp();
            phi.push(p * f);
            dphi.push((dp - 0.5 * vp * p) * f);
            if j == upto {
                break;
            }
            let bprev = if j > 0 { self.b[j - 1] } else { 0.0 };
            let pn = ((x - self.a[j]) * p - bprev * pp) / self.b[j];
            let dpn = ((x - self.a[j]) * dp + p - bprev * dpp) / self.b[j];
            pp = p;
            p = pn;
            dpp = dp;
            dp = dpn;
            if p.abs() > RESCALE || dp.abs() > RESCALE {
                pp /= RESCALE;
                p /= RESCALE;
                dpp /= RESCALE;
                dp /= RESCALE;
                ls += 500.0 * std::f64::consts::LN_2;
            }
        }
        (phi, dphi)
    }

    pub fn phi_all(&self, x: f64, upto: usize) -> Vec<f64> {
        self.phi_dphi_all(x, upto).0
    }

    /// `eps phi_j(x)` for `j = 0..=upto`; the flag marks points outside the window.
    pub fn eps_all(&self, x: f64, upto: usize) -> (Vec<f64>, bool) {
        let upto = upto.min(self.jmax);
        if x >= self.t {
            return ((0..=upto).map(|j| 0.5 * self.totals[j]).collect(), true);
        }
        if x <= -self.t {
            return ((0..=upto).map(|j| -0.5 * self.totals[j]).collect(), true);
        }
        let p = self.panels.partition_point(|&(_, b)| b <= x).min(self.panels.len() - 1);
        let b = self.panels[p].1;
        let hw = 0.5 * (b - x);
        let mid = 0.5 * (b + x);
        let mut partial = vec![0.0; upto + 1];
        for (t, w) in self.ref_x.iter().zip(&self.ref_w) {
            let f = self.phi_all(mid + hw * t, upto);
            for j in 0..=upto {
                partial[j] += w * hw * f[j];
            }
        }
        let out = (0..=upto).map(|j| 0.5 * self.totals[j] - partial[j] - self.after[p][j]).collect();
        (out, false)
    }

    pub fn point(&self, x: f64, upto: usize) -> PointData {
        let (phi, dphi) = self.phi_dphi_all(x, upto);
        let (eps, outside) = self.eps_all(x, upto);
        PointData { x, phi, dphi, eps, outside }
    }

    pub fn phi(&self, j: usize, x: f64) -> Result<f64> {
        self.check(j)?;
        Ok(self.phi_all(x, j)[j])
    }

    pub fn dphi(&self, j: usize, x: f64) -> Result<f64> {
        self.check(j)?;
        Ok(self.phi_dphi_all(x, j).1[j])
    }

    pub fn eps(&self, j: usize, x: f64) -> Result<f64> {
        self.check(j)?;
        Ok(self.eps_all(x, j).0[j])
    }

    /// `int phi_j` over the window.
    pub fn total_integral(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        Ok(self.totals[j])
    }

    /// `int f phi_j phi_k` by the node rule.
    pub fn inner(&self, j: usize, k: usize, f: impl Fn(f64) -> f64) -> f64 {
        let (pj, pk) = (&self.phi_nodes[j], &self.phi_nodes[k]);
        (0..self.nodes.len()).map(|i| self.weights[i] * f(self.nodes[i]) * pj[i] * pk[i]).sum()
    }

    /// Gram matrix `(phi_j, phi_k)` for `j, k <= upto`.
    pub fn gram(&self, upto: usize) -> Vec<Vec<f64>> {
        (0..=upto).map(|j| (0..=upto).map(|k| self.inner(j, k, |_| 1.0)).collect()).collect()
    }

    /// `(x^q phi_N, phi_k)` ratios against `b_N^q binom(q, l)`.
    pub fn xq_expansion_check(&self, n_idx: usize, q: usize) -> Result<XqReport> {
        if n_idx < q || n_idx + q > self.jmax {
            return Err(Error::Invalid(format!("need q <= N and N + q <= Jmax (N={n_idx}, q={q})")));
        }
        let bn = self.b[n_idx];
        let coef = |k: usize| self.inner(n_idx, k, |x| x.powi(q as i32));
        let mut ratios = Vec::new();
        for l in 0..=q {
            let k = n_idx - q + 2 * l;
            ratios.push(coef(k) / (bn.powi(q as i32) * binom(q, l)));
        }
        let mut odd = Vec::new();
        for l in 1..=q {
            let k = n_idx - q + 2 * l - 1;
            odd.push(coef(k) / bn.powi(q as i32));
        }
        Ok(XqReport { n: n_idx, q, even_ratios: ratios, odd_coefficients: odd })
    }
}

pub(crate) fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct XqReport {
    pub n: usize,
    pub q: usize,
    /// `(x^q phi_N, phi_{N-q+2l}) / (b_N^q binom(q, l))`, `l = 0..=q`.
    pub even_ratios: Vec<f64>,
    /// `(x^q phi_N, phi_{N-q+2l-1}) / b_N^q`, `l = 1..=q`.
    pub odd_coefficients: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_quadrature_with, QuadratureOptions};

    fn hermite(jmax: usize) -> (RecurrenceTable, PhiBasis) {
        let v = Potential::monomial(1, 1.0).unwrap();
        PhiBasis::build_with_table(&v, jmax, 128).unwrap()
    }

    #[test]
    fn hermite_coefficients() {
        let (t, _) = hermite(12);
        for j in 0..=12 {
            let exact = ((j + 1) as f64 / 2.0).sqrt();
            assert!((t.b[j].to_f64() - exact).abs() < 1e-15);
            assert!(t.a[j].to_f64().abs() < 1e-30);
        }
        // b_3 = sqrt 2 in full precision
        let two = Float::with_val(128, 2).sqrt();
        assert!(Float::with_val(128, &t.b[3] - two).abs() < Float::with_val(128, 1e-32));
    }

    #[test]
    fn hermite_phi_values() {
        let (_, b) = hermite(10);
        let pi_q = std::f64::consts::PI.powf(-0.25);
        assert!((b.phi(0, 0.0).unwrap() - pi_q).abs() < 1e-15);
        assert!(b.phi(1, 0.0).unwrap().abs() < 1e-16);
        assert!(b.dphi(0, 0.0).unwrap().abs() < 1e-16);
        assert!((b.dphi(1, 0.0).unwrap() - 2f64.sqrt() * pi_q).abs() < 1e-15);
        // phi_1 = sqrt2 x phi_0
        for &x in &[-1.7, 0.3, 2.2] {
            let f = b.phi_all(x, 1);
            assert!((f[1] - 2f64.sqrt() * x * f[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn index_errors() {
        let (_, b) = hermite(5);
        assert!(matches!(b.phi(6, 0.0), Err(Error::Index { index: 6, jmax: 5 })));
        assert!(b.eps(6, 0.0).is_err());
    }

    #[test]
    fn node_values_match_f64_recurrence() {
        let v = Potential::parse("k4=1,k1=0.3").unwrap();
        let b = PhiBasis::build(&v, 20, 128).unwrap();
        for i in (0..b.nodes.len()).step_by(37) {
            let f = b.phi_all(b.nodes[i], 20);
            for j in 0..=20 {
                assert!((f[j] - b.phi_nodes[j][i]).abs() < 1e-13, "j={j} i={i}");
            }
        }
    }

    #[test]
    fn eps_at_nodes_matches_pointwise() {
        let (_, b) = hermite(12);
        for i in (5..b.nodes.len()).step_by(97) {
            let (e, out) = b.eps_all(b.nodes[i], 12);
            assert!(!out);
            for j in 0..=12 {
                assert!((e[j] - b.eps_nodes[j][i]).abs() < 1e-13, "j={j}");
            }
        }
    }

    #[test]
    fn eps_tails_are_flagged() {
        let (_, b) = hermite(6);
        let (e, out) = b.eps_all(b.t + 1.0, 6);
        assert!(out);
        assert!((e[0] - 0.5 * b.total_integral(0).unwrap()).abs() < 1e-15);
        let (e2, out2) = b.eps_all(-b.t - 1.0, 6);
        assert!(out2);
        assert!((e2[0] + e[0]).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let v = Potential::parse("k4=1,k2=-1").unwrap();
        let b = PhiBasis::build(&v, 24, 128).unwrap();
        let h = 1e-6;
        for i in 0..41 {
            let x = -3.0 + 0.15 * i as f64;
            let (_, d) = b.phi_dphi_all(x, 24);
            let fp = b.phi_all(x + h, 24);
            let fm = b.phi_all(x - h, 24);
            for j in 0..=24 {
                let fd = (fp[j] - fm[j]) / (2.0 * h);
                assert!((fd - d[j]).abs() < 1e-8 * (1.0 + d[j].abs()), "j={j} x={x}");
            }
        }
    }

    #[test]
    fn json_roundtrip_preserves_digits() {
        let (t, _) = hermite(6);
        let back = RecurrenceTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back.jmax, 6);
        for j in 0..=6 {
            assert_eq!(back.b[j], t.b[j]);
            assert_eq!(back.a[j], t.a[j]);
        }
        assert_eq!(back.key(), t.key());
        assert!(!t.to_json().contains("e+"));
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let v = Potential::monomial(1, 1.0).unwrap();
        let w = Potential::monomial(2, 1.0).unwrap();
        let q = build_quadrature_with(&v, &QuadratureOptions::new(96, 16, 16)).unwrap();
        assert!(recurrence_table(&w, 4, &q).is_err());
        assert!(recurrence_table(&v, 0, &q).is_err());
    }

    #[test]
    fn integration_matrix_is_exact_for_polynomials() {
        let (t, w) = gauss_legendre(10);
        let s = integration_matrix(&t, &w);
        for i in 0..10 {
            let v: f64 = (0..10).map(|l| s[i][l] * t[l].powi(3)).sum();
            let exact = (t[i].powi(4) - 1.0) / 4.0;
            assert!((v - exact).abs() < 1e-14);
        }
    }
}
