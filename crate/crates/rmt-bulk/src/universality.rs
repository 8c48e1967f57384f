//! Bulk scaling of the finite-N kernels against the sine-kernel limits,
//! cluster functions and gap probabilities.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{h_eval, mrs_leading};
use crate::error::{Error, Result};
use crate::linalg::det;
use crate::orthopoly::PhiBasis;
use crate::quadrature::gauss_legendre;
use crate::sine::{k_inf, k_inf_deriv, k_inf_integral};
use crate::widom::{cd_kernel, cd_kernel_at, cluster_from, kernel_point, matrix_kernel_at, s_beta1, s_beta4, WidomBlocks};

pub type Mat2 = [[f64; 2]; 2];

/// Sine-kernel limits for `beta = 1, 2, 4`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct LimitKernel {
    pub beta: u8,
    /// `beta = 4` evaluates at doubled arguments; switching this off gives the `beta = 1` first row.
    pub doubling: bool,
}

impl LimitKernel {
    pub fn new(beta: u8) -> Result<Self> {
        check_beta(beta, &[1, 2, 4])?;
        Ok(Self { beta, doubling: beta == 4 })
    }

    pub fn k(&self, t: f64) -> f64 {
        k_inf(t)
    }

    pub fn k_deriv(&self, t: f64) -> f64 {
        k_inf_deriv(t)
    }

    pub fn k_integral(&self, z: f64) -> f64 {
        k_inf_integral(z)
    }

    /// Scalar kernel; for `beta = 1, 4` the 11-entry.
    pub fn scalar(&self, xi: f64, eta: f64) -> f64 {
        let c = if self.doubling { 2.0 } else { 1.0 };
        k_inf(c * (xi - eta))
    }

    pub fn matrix(&self, xi: f64, eta: f64) -> Mat2 {
        let z = xi - eta;
        if self.doubling {
            [
                [k_inf(2.0 * z), 2.0 * k_inf_deriv(2.0 * z)],
                [0.5 * k_inf_integral(2.0 * z), k_inf(-2.0 * z)],
            ]
        } else {
            let sgn = if self.beta == 1 { 0.5 * sign(z) } else { 0.0 };
            [[k_inf(z), k_inf_deriv(z)], [k_inf_integral(z) - sgn, k_inf(-z)]]
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_beta(beta: u8, allowed: &[u8]) -> Result<()> {
    if allowed.contains(&beta) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("beta must be one of {allowed:?}, got {beta}")))
    }
}

/// `K^{(1)}` or `K^{(4)}` at `(xi, eta)`.
pub fn limit_kernel_ref(beta: u8, xi: f64, eta: f64) -> Result<Mat2> {
    check_beta(beta, &[1, 4])?;
    Ok(LimitKernel::new(beta)?.matrix(xi, eta))
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ScalingSpec {
    pub r: f64,
    pub q_n: f64,
    pub lambda: f64,
}

impl ScalingSpec {
    pub fn new(r: f64, q_n: f64) -> Result<Self> {
        if !(q_n > 0.0) || !q_n.is_finite() {
            return Err(Error::Invalid(format!("density scale must be positive, got {q_n}")));
        }
        Ok(Self { r, q_n, lambda: q_n.sqrt() })
    }

    pub fn point(&self, xi: f64) -> f64 {
        self.r + xi / self.q_n
    }
}

fn check_even(blocks: &WidomBlocks) -> Result<()> {
    if blocks.n_size % 2 == 1 {
        return Err(Error::OddN(blocks.n_size));
    }
    Ok(())
}

/// `q_N = R_{N,1,beta}(r)`: `S_{N,1}(r,r)`, `S_{N/2,4}(r,r)/2` or `K_N(r,r)`.
pub fn density_scale(basis: &PhiBasis, blocks: &WidomBlocks, beta: u8, r: f64) -> Result<ScalingSpec> {
    check_beta(beta, &[1, 2, 4])?;
    let q = match beta {
        1 => s_beta1(basis, blocks, r, r),
        4 => 0.5 * s_beta4(basis, blocks, r, r),
        _ => cd_kernel(basis, blocks.n_size, r, r)?,
    };
    ScalingSpec::new(r, q)
}

/// Leading-order density `N psi((r - d_N)/c_N) / c_N` from the equilibrium measure.
pub fn asymptotic_density(basis: &PhiBasis, n_size: usize, r: f64) -> f64 {
    let v = &basis.potential;
    let (c, d) = mrs_leading(v, n_size);
    let t = (r - d) / c;
    if t.abs() >= 1.0 {
        return 0.0;
    }
    n_size as f64 * (1.0 - t * t).sqrt() * h_eval(v.m(), t) / (2.0 * std::f64::consts::PI * c)
}

/// `(1/lambda^2)` times the conjugated matrix kernel at `r + xi/q, r + eta/q`.
fn scaled_matrix(raw: Mat2, q: f64) -> Mat2 {
    [[raw[0][0] / q, raw[0][1] / (q * q)], [raw[1][0], raw[1][1] / q]]
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EntryError {
    pub entry: String,
    pub sup_error: f64,
    pub at: (f64, f64),
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KernelErrorReport {
    pub beta: u8,
    pub n_size: usize,
    pub scaling: ScalingSpec,
    /// `K_N(r, r)` and the equilibrium-measure density, for the ratio checks.
    pub cd_density: f64,
    pub asymptotic_density: f64,
    pub grid_points: usize,
    pub entries: Vec<EntryError>,
}

impl KernelErrorReport {
    pub fn entry(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.entry == name).map(|e| e.sup_error)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("beta,N,entry,sup_error,xi,eta\n");
        for e in &self.entries {
            s += &format!("{},{},{},{:e},{},{}\n", self.beta, self.n_size, e.entry, e.sup_error, e.at.0, e.at.1);
        }
        s
    }
}

/// Sup over `grid x grid` of each entry of the scaled error matrix.
pub fn scaled_kernel_error(
    basis: &PhiBasis,
    blocks: &WidomBlocks,
    beta: u8,
    r: f64,
    grid: &[f64],
) -> Result<KernelErrorReport> {
    check_beta(beta, &[1, 2, 4])?;
    check_even(blocks)?;
    if grid.is_empty() || grid.iter().any(|g| !(g.abs() <= 2.0)) {
        return Err(Error::Invalid("grid must be non-empty and inside [-2, 2]".into()));
    }
    let spec = density_scale(basis, blocks, beta, r)?;
    let q = spec.q_n;
    let limit = LimitKernel::new(beta)?;
    let pts: Vec<_> = grid.iter().map(|&g| kernel_point(basis, blocks, spec.point(g))).collect();
    let names: &[&str] = if beta == 2 { &["K"] } else { &["11", "12", "21", "22"] };
    let rows: Vec<Vec<(f64, (f64, f64))>> = (0..grid.len())
        .into_par_iter()
        .map(|i| -> Result<Vec<(f64, (f64, f64))>> {
            let mut best = vec![(0.0, (0.0, 0.0)); names.len()];
            for j in 0..grid.len() {
                let (xi, eta) = (grid[i], grid[j]);
                let errs: Vec<f64> = if beta == 2 {
                    vec![(cd_kernel_at(basis, blocks.n_size, &pts[i], &pts[j]) / q - limit.scalar(xi, eta)).abs()]
                } else {
                    let fin = scaled_matrix(matrix_kernel_at(basis, blocks, beta, &pts[i], &pts[j])?.matrix(), q);
                    let lim = limit.matrix(xi, eta);
                    vec![
                        (fin[0][0] - lim[0][0]).abs(),
                        (fin[0][1] - lim[0][1]).abs(),
                        (fin[1][0] - lim[1][0]).abs(),
                        (fin[1][1] - lim[1][1]).abs(),
                    ]
                };
                for (b, e) in best.iter_mut().zip(errs) {
                    if e > b.0 {
                        *b = (e, (xi, eta));
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let entries = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mut best = (0.0, (0.0, 0.0));
            for row in &rows {
                if row[k].0 > best.0 {
                    best = row[k];
                }
            }
            EntryError { entry: name.to_string(), sup_error: best.0, at: best.1 }
        })
        .collect();
    Ok(KernelErrorReport {
        beta,
        n_size: blocks.n_size,
        scaling: spec,
        cd_density: cd_kernel(basis, blocks.n_size, r, r)?,
        asymptotic_density: asymptotic_density(basis, blocks.n_size, r),
        grid_points: grid.len() * grid.len(),
        entries,
    })
}

/// `n` equispaced points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct GapSpec {
    pub theta: f64,
    pub nystrom_order: usize,
    pub beta: u8,
}

impl GapSpec {
    pub fn new(theta: f64, nystrom_order: usize, beta: u8) -> Result<Self> {
        check_beta(beta, &[1, 2, 4])?;
        if !(theta > 0.0) || nystrom_order < 8 {
            return Err(Error::Invalid(format!(
                "gap needs theta > 0 and nystrom_order >= 8, got {theta}, {nystrom_order}"
            )));
        }
        Ok(Self { theta, nystrom_order, beta })
    }
}

pub enum GapMode<'a> {
    Limit,
    /// Finite `N`; `blocks` are required for `beta = 1, 4`.
    Finite { basis: &'a PhiBasis, n_size: usize, blocks: Option<&'a WidomBlocks>, r: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct GapReport {
    pub spec: GapSpec,
    pub determinant: f64,
    pub probability: f64,
}

/// Nystrom discretization `I - sqrt(w) K sqrt(w)` on Gauss-Legendre nodes in `[-theta, theta]`,
/// entrywise for the 2x2 kernels. The sgn block has zero diagonal, so the
/// regularized determinant of the discretization is the plain determinant.
pub fn gap_probability(mode: &GapMode, spec: &GapSpec) -> Result<GapReport> {
    let n = spec.nystrom_order;
    let (x, w) = gauss_legendre(n);
    let xi: Vec<f64> = x.iter().map(|t| spec.theta * t).collect();
    let sw: Vec<f64> = w.iter().map(|v| (spec.theta * v).sqrt()).collect();
    let blocks_of = |k: &dyn Fn(usize, usize) -> Result<Mat2>| -> Result<DMatrix<f64>> {
        let mut a = DMatrix::identity(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let kij = k(i, j)?;
                for p in 0..2 {
                    for c in 0..2 {
                        a[(p * n + i, c * n + j)] -= sw[i] * kij[p][c] * sw[j];
                    }
                }
            }
        }
        Ok(a)
    };
    let scalar_of = |k: &dyn Fn(usize, usize) -> f64| -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - sw[i] * k(i, j) * sw[j])
    };
    let a = match (mode, spec.beta) {
        (GapMode::Limit, 2) => {
            let lk = LimitKernel::new(2)?;
            scalar_of(&|i, j| lk.scalar(xi[i], xi[j]))
        }
        (GapMode::Limit, b) => {
            let lk = LimitKernel::new(b)?;
            blocks_of(&|i, j| Ok(lk.matrix(xi[i], xi[j])))?
        }
        (GapMode::Finite { basis, n_size, blocks, r }, b) => {
            if *n_size == 0 || *n_size > basis.jmax {
                return Err(Error::Index { index: *n_size, jmax: basis.jmax });
            }
            if b == 2 {
                let q = cd_kernel(basis, *n_size, *r, *r)?;
                let spec_s = ScalingSpec::new(*r, q)?;
                let pts: Vec<_> = xi.iter().map(|&t| basis.point(spec_s.point(t), *n_size)).collect();
                scalar_of(&|i, j| cd_kernel_at(basis, *n_size, &pts[i], &pts[j]) / q)
            } else {
                let blocks = blocks.ok_or_else(|| Error::Invalid("finite beta = 1, 4 gaps need Widom blocks".into()))?;
                check_even(blocks)?;
                let spec_s = density_scale(basis, blocks, b, *r)?;
                let q = spec_s.q_n;
                let pts: Vec<_> = xi.iter().map(|&t| kernel_point(basis, blocks, spec_s.point(t))).collect();
                blocks_of(&|i, j| Ok(scaled_matrix(matrix_kernel_at(basis, blocks, b, &pts[i], &pts[j])?.matrix(), q)))?
            }
        }
    };
    let d = det(&a);
    let probability = if spec.beta == 2 {
        d
    } else if d >= 0.0 {
        d.sqrt()
    } else if d > -1e-10 {
        0.0
    } else {
        return Err(Error::NegativeDeterminant(d));
    };
    Ok(GapReport { spec: *spec, determinant: d, probability })
}

/// `|P(order) - P(2 order)|`.
pub fn nystrom_self_consistency(mode: &GapMode, spec: &GapSpec) -> Result<f64> {
    let a = gap_probability(mode, spec)?;
    let doubled = GapSpec { nystrom_order: 2 * spec.nystrom_order, ..*spec };
    let b = gap_probability(mode, &doubled)?;
    Ok((a.probability - b.probability).abs())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ClusterReport {
    pub beta: u8,
    pub l: usize,
    pub points: Vec<f64>,
    /// `q^{-l} T_{N,l,beta}(r + xi/q)`.
    pub finite: f64,
    pub limit: f64,
    pub relative_gap: f64,
    /// Difference between the conjugated and plain finite evaluations.
    pub conjugation_gap: f64,
}

/// Scaled cluster function against the permutation trace sum of `K^{(beta)}`.
pub fn cluster_limit_check(
    basis: &PhiBasis,
    blocks: &WidomBlocks,
    beta: u8,
    r: f64,
    points: &[f64],
) -> Result<ClusterReport> {
    check_beta(beta, &[1, 4])?;
    check_even(blocks)?;
    let l = points.len();
    if !(2..=3).contains(&l) {
        return Err(Error::Invalid(format!("cluster check needs l in {{2, 3}}, got {l}")));
    }
    let spec = density_scale(basis, blocks, beta, r)?;
    let q = spec.q_n;
    let pts: Vec<_> = points.iter().map(|&p| kernel_point(basis, blocks, spec.point(p))).collect();
    let mut raw = vec![vec![[[0.0; 2]; 2]; l]; l];
    for i in 0..l {
        for j in 0..l {
            raw[i][j] = matrix_kernel_at(basis, blocks, beta, &pts[i], &pts[j])?.matrix();
        }
    }
    let plain = cluster_from(|i, j| raw[i][j], l) / q.powi(l as i32);
    let finite = cluster_from(|i, j| scaled_matrix(raw[i][j], q), l);
    let lk = LimitKernel::new(beta)?;
    let limit = cluster_from(|i, j| lk.matrix(points[i], points[j]), l);
    Ok(ClusterReport {
        beta,
        l,
        points: points.to_vec(),
        finite,
        limit,
        relative_gap: (finite - limit).abs() / limit.abs().max(f64::MIN_POSITIVE),
        conjugation_gap: (finite - plain).abs() / finite.abs().max(f64::MIN_POSITIVE),
    })
}

/// Limit-side cluster function alone.
pub fn cluster_limit(beta: u8, points: &[f64]) -> Result<f64> {
    let lk = LimitKernel::new(beta)?;
    Ok(cluster_from(|i, j| lk.matrix(points[i], points[j]), points.len()))
}
