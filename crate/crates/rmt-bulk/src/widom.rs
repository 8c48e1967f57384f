//! `D` and `eps` matrices, Widom's blocks `B`, `A`, `C`, and the kernels
//! `K_N`, `S_{N,1}`, `S_{N/2,4}` with their 2x2 matrix versions.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::asymptotics::{scale_constant, thm2_limit, IqTable};
use crate::error::{Error, Result};
use crate::linalg::{det, flip, inverse_checked, max_abs};
use crate::orthopoly::{binom, PhiBasis, PointData};

/// Condition numbers above this are treated as singular.
pub const MAX_COND: f64 = 1e12;

/// `(D phi_j, phi_k) = sgn(j - k) (V' phi_j, phi_k) / 2`.
pub fn d_entry(basis: &PhiBasis, j: usize, k: usize) -> f64 {
    if j == k {
        return 0.0;
    }
    let v = &basis.potential;
    let s = 0.5 * basis.inner(j, k, |x| v.deriv(x));
    if j > k {
        s
    } else {
        -s
    }
}

/// `phi_j'` at the quadrature nodes for `j = 0..=upto`, `[j][i]`.
pub fn dphi_nodes(basis: &PhiBasis, upto: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; basis.nodes.len()]; upto + 1];
    for (i, &x) in basis.nodes.iter().enumerate() {
        let (_, d) = basis.phi_dphi_all(x, upto);
        for j in 0..=upto {
            out[j][i] = d[j];
        }
    }
    out
}

/// `(phi_j', phi_k)` computed directly; `dphi` from [`dphi_nodes`].
pub fn d_entry_direct(basis: &PhiBasis, dphi: &[Vec<f64>], j: usize, k: usize) -> f64 {
    let pk = &basis.phi_nodes[k];
    (0..basis.nodes.len()).map(|i| basis.weights[i] * dphi[j][i] * pk[i]).sum()
}

/// `(eps phi_j, phi_k)`.
pub fn eps_entry(basis: &PhiBasis, j: usize, k: usize) -> f64 {
    let (ej, pk) = (&basis.eps_nodes[j], &basis.phi_nodes[k]);
    (0..basis.nodes.len()).map(|i| basis.weights[i] * ej[i] * pk[i]).sum()
}

pub fn d_matrix(basis: &PhiBasis, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64> {
    let (r0, c0) = (rows.start, cols.start);
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| d_entry(basis, r0 + i, c0 + j))
}

pub fn eps_matrix(basis: &PhiBasis, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64> {
    let (r0, c0) = (rows.start, cols.start);
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| eps_entry(basis, r0 + i, c0 + j))
}

/// The blocks built from indices `N-n..N+n-1`.
#[derive(Clone, Debug)]
pub struct WidomBlocks {
    pub n_size: usize,
    pub n: usize,
    pub b: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub d12: DMatrix<f64>,
    pub d21: DMatrix<f64>,
    /// `C_11 = I - B_12 D_21`.
    pub c11: DMatrix<f64>,
    /// Rows `0..n` of `(A C (I - B A C)^{-1})^T`.
    pub m1: DMatrix<f64>,
    /// `D_21 C_11^{-1} B_11 D_12`.
    pub q: DMatrix<f64>,
    pub cond_beta1: f64,
    pub cond_c11: f64,
}

impl WidomBlocks {
    pub fn b11(&self) -> DMatrix<f64> {
        self.b.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn b12(&self) -> DMatrix<f64> {
        self.b.view((0, self.n), (self.n, self.n)).into_owned()
    }

    pub fn ba(&self) -> DMatrix<f64> {
        &self.b * &self.a
    }

    /// Max entries of `(BAC)_11`, `(BAC)_12` and of `(BA)_22 + R (BA)_11 R`.
    pub fn bac_report(&self) -> BacReport {
        let n = self.n;
        let ba = self.ba();
        let bac = &ba * &self.c;
        let ba11 = ba.view((0, 0), (n, n)).into_owned();
        let ba22 = ba.view((n, n), (n, n)).into_owned();
        BacReport {
            bac11: max_abs(&bac.view((0, 0), (n, n)).into_owned()),
            bac12: max_abs(&bac.view((0, n), (n, n)).into_owned()),
            ba22_reflection: max_abs(&(ba22 + flip(&ba11))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BacReport {
    pub bac11: f64,
    pub bac12: f64,
    pub ba22_reflection: f64,
}

pub fn build_blocks(basis: &PhiBasis, n_size: usize) -> Result<WidomBlocks> {
    let n = basis.n();
    if n_size % 2 != 0 {
        return Err(Error::OddN(n_size));
    }
    if n_size <= n || n_size + n > basis.jmax {
        return Err(Error::Invalid(format!(
            "need n < N and N + n <= Jmax (N={n_size}, n={n}, Jmax={})",
            basis.jmax
        )));
    }
    let idx = n_size - n..n_size + n;
    let b = eps_matrix(basis, idx.clone(), idx.clone());
    let d = d_matrix(basis, idx.clone(), idx);
    let d12 = d.view((0, n), (n, n)).into_owned();
    let d21 = d.view((n, 0), (n, n)).into_owned();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(&d12);
    a.view_mut((n, 0), (n, n)).copy_from(&(-&d21));
    let ba = &b * &a;
    let mut c = ba.clone();
    for i in 0..n {
        c[(i, i)] += 1.0;
    }
    let c11 = c.view((0, 0), (n, n)).into_owned();
    let lhs = DMatrix::identity(2 * n, 2 * n) - &ba * &c;
    let (inv, cond_beta1) = inverse_checked(&lhs, "I - BAC", MAX_COND)?;
    let mx = &a * &c * inv;
    let m1 = mx.transpose().rows(0, n).into_owned();
    let (c11_inv, cond_c11) = inverse_checked(&c11, "C_11", MAX_COND)?;
    let b11 = b.view((0, 0), (n, n)).into_owned();
    let q = &d21 * c11_inv * b11 * &d12;
    Ok(WidomBlocks { n_size, n, b, a, c, d, d12, d21, c11, m1, q, cond_beta1, cond_c11 })
}

/// Point data with every index the kernels need.
pub fn kernel_point(basis: &PhiBasis, blocks: &WidomBlocks, x: f64) -> PointData {
    basis.point(x, blocks.n_size + blocks.n - 1)
}

/// Switch to the diagonal form when `|x - y| < 1e-6 (1 + |x|)`.
pub fn diagonal_switch(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

/// Christoffel-Darboux kernel from precomputed point data.
pub fn cd_kernel_at(basis: &PhiBasis, n_size: usize, px: &PointData, py: &PointData) -> f64 {
    let (x, y) = (px.x, py.x);
    let b = basis.b[n_size - 1];
    let (n1, n0) = (n_size, n_size - 1);
    if (x - y).abs() < diagonal_switch(x) {
        let diag = b * (px.dphi[n1] * px.phi[n0] - px.dphi[n0] * px.phi[n1]);
        let slope: f64 = (0..n_size).map(|k| px.phi[k] * px.dphi[k]).sum();
        diag + (y - x) * slope
    } else {
        b * (px.phi[n1] * py.phi[n0] - px.phi[n0] * py.phi[n1]) / (x - y)
    }
}

pub fn cd_kernel(basis: &PhiBasis, n_size: usize, x: f64, y: f64) -> Result<f64> {
    if n_size == 0 || n_size > basis.jmax {
        return Err(Error::Index { index: n_size, jmax: basis.jmax });
    }
    let px = basis.point(x, n_size);
    let py = basis.point(y, n_size);
    Ok(cd_kernel_at(basis, n_size, &px, &py))
}

fn slice_vec(v: &[f64], r: Range<usize>) -> DVector<f64> {
    DVector::from_column_slice(&v[r])
}

/// `S_{N,1} - K_N`.
pub fn correction_beta1(blocks: &WidomBlocks, px: &PointData, py: &PointData) -> f64 {
    let (nn, n) = (blocks.n_size, blocks.n);
    let p1 = slice_vec(&px.phi, nn - n..nn);
    let e = slice_vec(&py.eps, nn - n..nn + n);
    -p1.dot(&(&blocks.m1 * e))
}

/// `u(y) = D_21 eps Phi_1(y) + Q eps Phi_2(y)`, so that `S_{N/2,4} - K_N = Phi_2(x) . u(y)`.
fn u_beta4(blocks: &WidomBlocks, v: &[f64]) -> DVector<f64> {
    let (nn, n) = (blocks.n_size, blocks.n);
    &blocks.d21 * slice_vec(v, nn - n..nn) + &blocks.q * slice_vec(v, nn..nn + n)
}

/// `S_{N/2,4} - K_N`.
pub fn correction_beta4(blocks: &WidomBlocks, px: &PointData, py: &PointData) -> f64 {
    let (nn, n) = (blocks.n_size, blocks.n);
    slice_vec(&px.phi, nn..nn + n).dot(&u_beta4(blocks, &py.eps))
}

pub fn s_beta1_at(basis: &PhiBasis, blocks: &WidomBlocks, px: &PointData, py: &PointData) -> f64 {
    cd_kernel_at(basis, blocks.n_size, px, py) + correction_beta1(blocks, px, py)
}

pub fn s_beta4_at(basis: &PhiBasis, blocks: &WidomBlocks, px: &PointData, py: &PointData) -> f64 {
    cd_kernel_at(basis, blocks.n_size, px, py) + correction_beta4(blocks, px, py)
}

pub fn s_beta1(basis: &PhiBasis, blocks: &WidomBlocks, x: f64, y: f64) -> f64 {
    s_beta1_at(basis, blocks, &kernel_point(basis, blocks, x), &kernel_point(basis, blocks, y))
}

pub fn s_beta4(basis: &PhiBasis, blocks: &WidomBlocks, x: f64, y: f64) -> f64 {
    s_beta4_at(basis, blocks, &kernel_point(basis, blocks, x), &kernel_point(basis, blocks, y))
}

/// The four entries of the matrix kernel. `es` excludes the `-sgn/2` term,
/// which is kept in `sgn_term` (zero for `beta = 4`). The overall factor `1/2`
/// of the `beta = 4` kernel is applied by [`MatrixKernelValue::matrix`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MatrixKernelValue {
    pub beta: u8,
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub sd: f64,
    pub es: f64,
    pub sgn_term: f64,
    pub s_yx: f64,
}

impl MatrixKernelValue {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let f = if self.beta == 4 { 0.5 } else { 1.0 };
        [[f * self.s, f * self.sd], [f * (self.es + self.sgn_term), f * self.s_yx]]
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn matrix_kernel_at(
    basis: &PhiBasis,
    blocks: &WidomBlocks,
    beta: u8,
    px: &PointData,
    py: &PointData,
) -> Result<MatrixKernelValue> {
    let (nn, n) = (blocks.n_size, blocks.n);
    let k_xy = cd_kernel_at(basis, nn, px, py);
    let k_yx = cd_kernel_at(basis, nn, py, px);
    // -d/dy K(x, y) and -int_x^y K(t, y) dt
    let kd: f64 = -(0..nn).map(|k| px.phi[k] * py.dphi[k]).sum::<f64>();
    let ke: f64 = -(0..nn).map(|k| py.phi[k] * (py.eps[k] - px.eps[k])).sum::<f64>();
    match beta {
        1 => {
            let p1x = slice_vec(&px.phi, nn - n..nn);
            let me = &blocks.m1 * slice_vec(&py.eps, nn - n..nn + n);
            let mp = &blocks.m1 * slice_vec(&py.phi, nn - n..nn + n);
            let de1 = slice_vec(&py.eps, nn - n..nn) - slice_vec(&px.eps, nn - n..nn);
            Ok(MatrixKernelValue {
                beta,
                x: px.x,
                y: py.x,
                s: k_xy - p1x.dot(&me),
                sd: kd + p1x.dot(&mp),
                es: ke + de1.dot(&me),
                sgn_term: -0.5 * sgn(px.x - py.x),
                s_yx: k_yx + correction_beta1(blocks, py, px),
            })
        }
        4 => {
            let p2x = slice_vec(&px.phi, nn..nn + n);
            let u = u_beta4(blocks, &py.eps);
            let du = u_beta4(blocks, &py.phi);
            let de2 = slice_vec(&py.eps, nn..nn + n) - slice_vec(&px.eps, nn..nn + n);
            Ok(MatrixKernelValue {
                beta,
                x: px.x,
                y: py.x,
                s: k_xy + p2x.dot(&u),
                sd: kd - p2x.dot(&du),
                es: ke - de2.dot(&u),
                sgn_term: 0.0,
                s_yx: k_yx + correction_beta4(blocks, py, px),
            })
        }
        _ => Err(Error::Invalid(format!("matrix kernels exist for beta = 1, 4, got {beta}"))),
    }
}

pub fn matrix_kernel(basis: &PhiBasis, blocks: &WidomBlocks, beta: u8, x: f64, y: f64) -> Result<MatrixKernelValue> {
    let px = kernel_point(basis, blocks, x);
    let py = kernel_point(basis, blocks, y);
    matrix_kernel_at(basis, blocks, beta, &px, &py)
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn trace(a: &[[f64; 2]; 2]) -> f64 {
    a[0][0] + a[1][1]
}

/// All permutations of `0..l`.
pub(crate) fn permutations(l: usize) -> Vec<Vec<usize>> {
    if l == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(l - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, l - 1);
            out.push(q);
        }
    }
    out
}

/// `(1/2l) sum_sigma tr(K(y_s1, y_s2) ... K(y_sl, y_s1))` for any 2x2 kernel.
pub fn cluster_from(kernel: impl Fn(usize, usize) -> [[f64; 2]; 2], l: usize) -> f64 {
    let mut total = 0.0;
    for p in permutations(l) {
        let mut prod = [[1.0, 0.0], [0.0, 1.0]];
        for i in 0..l {
            prod = mat_mul(&prod, &kernel(p[i], p[(i + 1) % l]));
        }
        total += trace(&prod);
    }
    total / (2 * l) as f64
}

fn kernel_table(
    basis: &PhiBasis,
    blocks: &WidomBlocks,
    beta: u8,
    points: &[f64],
) -> Result<Vec<Vec<[[f64; 2]; 2]>>> {
    let pts: Vec<PointData> = points.iter().map(|&x| kernel_point(basis, blocks, x)).collect();
    pts.iter()
        .map(|px| {
            pts.iter()
                .map(|py| matrix_kernel_at(basis, blocks, beta, px, py).map(|v| v.matrix()))
                .collect()
        })
        .collect()
}

/// `R_1 = tr K(x,x) / 2`; `R_2 = tr K(x,x) tr K(y,y) / 4 - tr(K(x,y) K(y,x)) / 2`.
pub fn correlation(basis: &PhiBasis, blocks: &WidomBlocks, beta: u8, points: &[f64]) -> Result<f64> {
    let t = kernel_table(basis, blocks, beta, points)?;
    match points.len() {
        1 => Ok(0.5 * trace(&t[0][0])),
        2 => Ok(0.25 * trace(&t[0][0]) * trace(&t[1][1]) - 0.5 * trace(&mat_mul(&t[0][1], &t[1][0]))),
        l => Err(Error::Invalid(format!("correlation supports 1 or 2 points, got {l}"))),
    }
}

/// Cluster function `T_{N,l,beta}` for `l <= 3`.
pub fn cluster(basis: &PhiBasis, blocks: &WidomBlocks, beta: u8, points: &[f64]) -> Result<f64> {
    let l = points.len();
    if !(1..=3).contains(&l) {
        return Err(Error::Invalid(format!("cluster functions supported for l <= 3, got {l}")));
    }
    let t = kernel_table(basis, blocks, beta, points)?;
    Ok(cluster_from(|i, j| t[i][j], l))
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionReport {
    pub n_size: usize,
    /// `max |(D eps - I)_{jk}|` over `j, k < N - n`.
    pub d_eps_identity: f64,
    pub upper_left_identity: f64,
    pub lower_left_zero: f64,
    pub lower_right_vs_c11: f64,
    pub det_c11: f64,
    pub det_eps_det_d: f64,
}

pub fn section_identity_check(basis: &PhiBasis, n_size: usize) -> Result<SectionReport> {
    let n = basis.n();
    if n_size <= n || n_size + n > basis.jmax {
        return Err(Error::Invalid(format!("need n < N and N + n <= Jmax (N={n_size})")));
    }
    let e = eps_matrix(basis, 0..n_size + n, 0..n_size + n);
    let d = d_matrix(basis, 0..n_size + n, 0..n_size + n);
    let k0 = n_size - n;
    let mut d_eps: f64 = 0.0;
    for j in 0..k0 {
        for k in 0..k0 {
            let lo = j.saturating_sub(n);
            let s: f64 = (lo..=j + n).map(|l| d[(j, l)] * e[(l, k)]).sum();
            d_eps = d_eps.max((s - if j == k { 1.0 } else { 0.0 }).abs());
        }
    }
    let en = e.view((0, 0), (n_size, n_size)).into_owned();
    let dn = d.view((0, 0), (n_size, n_size)).into_owned();
    let prod = &en * &dn;
    let ul = prod.view((0, 0), (k0, k0)).into_owned() - DMatrix::identity(k0, k0);
    let ll = prod.view((k0, 0), (n, k0)).into_owned();
    let b12 = e.view((k0, n_size), (n, n)).into_owned();
    let d21 = d.view((n_size, k0), (n, n)).into_owned();
    let c11 = DMatrix::identity(n, n) - &b12 * &d21;
    let lr = prod.view((k0, k0), (n, n)).into_owned() - &c11;
    Ok(SectionReport {
        n_size,
        d_eps_identity: d_eps,
        upper_left_identity: max_abs(&ul),
        lower_left_zero: max_abs(&ll),
        lower_right_vs_c11: max_abs(&lr),
        det_c11: det(&c11),
        det_eps_det_d: det(&en) * det(&dn),
    })
}

/// Max of `|(phi_j', phi_k) - (D phi_j, phi_k)|` over `j != k <= upto`, and of
/// `|(D phi_j, phi_k)|` over `|j - k| > n`.
pub fn borodin_check(basis: &PhiBasis, upto: usize) -> (f64, f64) {
    let dp = dphi_nodes(basis, upto);
    let n = basis.n();
    let (mut path, mut band): (f64, f64) = (0.0, 0.0);
    for j in 0..=upto {
        for k in 0..=upto {
            if j == k {
                continue;
            }
            let lemma = d_entry(basis, j, k);
            path = path.max((d_entry_direct(basis, &dp, j, k) - lemma).abs());
            if j.abs_diff(k) > n {
                band = band.max(lemma.abs());
            }
        }
    }
    (path, band)
}

/// Binomial Toeplitz matrix with diagonals `sgn(j-k) binom(n, (n - |j-k|)/2)`.
pub fn binomial_toeplitz(m: usize, size: usize) -> DMatrix<f64> {
    let n = 2 * m - 1;
    DMatrix::from_fn(size, size, |j, k| {
        let d = j as i64 - k as i64;
        if d == 0 || d.unsigned_abs() as usize > n || d % 2 == 0 {
            0.0
        } else {
            d.signum() as f64 * binom(n, (n - d.unsigned_abs() as usize) / 2)
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ToeplitzReport {
    pub m: usize,
    pub n_size: usize,
    pub center: usize,
    /// Rows `M-n..M-1`, columns `M..M+n-1` of the inverse.
    pub inversion: Vec<Vec<f64>>,
    pub prediction: Vec<Vec<f64>>,
    /// Over entries where the prediction is nonzero.
    pub max_rel_gap: f64,
}

/// Inverts the binomial Toeplitz section and compares a central block with
/// `2 (m!)^2/(2m)! ((-1)^{M+j}/(2m) - I(j-k))`.
pub fn toeplitz_inverse_crosscheck(m: usize, n_size: usize, center: usize, iq: &IqTable) -> Result<ToeplitzReport> {
    let n = 2 * m - 1;
    if m < 2 || n_size % 2 != 0 || center % 2 != 0 || center <= n || center + n >= n_size {
        return Err(Error::Invalid(format!("need m >= 2, even N and M, n < M < N - n (m={m}, N={n_size}, M={center})")));
    }
    let t = binomial_toeplitz(m, n_size);
    let (inv, _) = inverse_checked(&t, "Toeplitz section", 1e14)?;
    let s = scale_constant(m).to_f64();
    let mut inversion = Vec::new();
    let mut prediction = Vec::new();
    let mut gap: f64 = 0.0;
    for r in 0..n {
        let mut ri = Vec::new();
        let mut rp = Vec::new();
        for c in 0..n {
            let v = inv[(center - n + r, center + c)];
            let p = s * thm2_limit(m, center as i64 % 2, r as i64 - n as i64, c as i64, iq)?;
            if p != 0.0 {
                gap = gap.max(((v - p) / p).abs());
            }
            ri.push(v);
            rp.push(p);
        }
        inversion.push(ri);
        prediction.push(rp);
    }
    Ok(ToeplitzReport { m, n_size, center, inversion, prediction, max_rel_gap: gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn toeplitz_pattern_m2() {
        let t = binomial_toeplitz(2, 8);
        let row: Vec<f64> = (0..8).map(|k| t[(4, k)]).collect();
        assert_eq!(row, vec![0.0, 1.0, 0.0, 3.0, 0.0, -3.0, 0.0, -1.0]);
    }
}
