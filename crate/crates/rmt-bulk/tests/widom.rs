use std::sync::OnceLock;

use rmt_bulk::asymptotics::{mrs_leading, thm1_limit, IqTable};
use rmt_bulk::widom::*;
use rmt_bulk::{Error, PhiBasis, Potential};

fn quartic() -> &'static PhiBasis {
    static B: OnceLock<PhiBasis> = OnceLock::new();
    B.get_or_init(|| PhiBasis::build(&Potential::monomial(2, 1.0).unwrap(), 48, 256).unwrap())
}

#[test]
fn d_entries_band_and_skew() {
    let b = quartic();
    assert_eq!(d_entry(b, 7, 7), 0.0);
    for j in 0..30 {
        for k in 0..30 {
            assert!((d_entry(b, j, k) + d_entry(b, k, j)).abs() < 1e-10);
            if j.abs_diff(k) > 3 {
                assert!(d_entry(b, j, k).abs() < 1e-10);
            }
        }
    }
    let (path, band) = borodin_check(b, 30);
    println!("borodin path {path:e} band {band:e}");
    assert!(path < 1e-8 && band < 1e-8);
}

#[test]
fn toeplitz_limits_at_n40() {
    let b = quartic();
    let n = 40;
    let scale = 2.0 * b.b[n].powi(3);
    let r = d_entry(b, n - 3, n) / scale;
    assert!((r - thm1_limit(2, -3, 0)).abs() < 0.1, "{r}");
    let iq = IqTable::new(2, 9);
    let (c, _) = mrs_leading(&b.potential, n);
    let e = eps_entry(b, n, n + 1) * n as f64 / c;
    let p = 0.25 - iq.i(-1).unwrap();
    assert!(((e - p) / p).abs() < 0.15, "{e} vs {p}");
}

#[test]
fn eps_entries_skew_and_parity() {
    let b = quartic();
    for j in 0..20 {
        assert!(eps_entry(b, j, j).abs() < 1e-12);
        for k in 0..20 {
            assert!((eps_entry(b, j, k) + eps_entry(b, k, j)).abs() < 1e-10);
            if j != k && (j + k) % 2 == 0 {
                assert!(eps_entry(b, j, k).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn blocks_structure() {
    let b = quartic();
    assert!(matches!(build_blocks(b, 21), Err(Error::OddN(21))));
    assert!(build_blocks(b, 46).is_err());
    for n in [20, 40] {
        let w = build_blocks(b, n).unwrap();
        let c11 = nalgebra::DMatrix::identity(3, 3) - w.b12() * &w.d21;
        assert!(rmt_bulk::linalg::max_abs(&(c11 - &w.c11)) < 1e-12);
        let r = w.bac_report();
        println!("N={n} {r:?}");
        assert!(r.bac11 < 1e-8 && r.bac12 < 1e-8);
        assert!(r.ba22_reflection < 0.1);
    }
}

#[test]
fn section_identities() {
    let b = quartic();
    for n in [12, 20] {
        let r = section_identity_check(b, n).unwrap();
        println!("{r:?}");
        assert!(r.d_eps_identity < 1e-8);
        assert!(r.upper_left_identity < 1e-8);
        assert!(r.lower_left_zero < 1e-8);
        assert!(r.lower_right_vs_c11 < 1e-10);
        assert!(((r.det_c11 - r.det_eps_det_d) / r.det_c11).abs() < 1e-6);
    }
}

#[test]
fn cd_kernel_forms() {
    let b = quartic();
    for &(x, y) in &[(0.1, 0.7), (-1.2, 0.4), (0.5, 0.5)] {
        let k1 = cd_kernel(b, 30, x, y).unwrap();
        let k2 = cd_kernel(b, 30, y, x).unwrap();
        assert!((k1 - k2).abs() < 1e-12);
        let sum: f64 = (0..30).map(|k| b.phi(k, x).unwrap() * b.phi(k, y).unwrap()).sum();
        assert!((k1 - sum).abs() < 1e-10, "{k1} {sum}");
    }
    let near = cd_kernel(b, 30, 0.3, 0.3 + 1e-7).unwrap();
    let sum: f64 = (0..30).map(|k| b.phi(k, 0.3).unwrap() * b.phi(k, 0.3 + 1e-7).unwrap()).sum();
    assert!((near - sum).abs() < 1e-10);
}

#[test]
fn scalar_kernels_near_cd_kernel() {
    let b = quartic();
    for n in [20usize, 40] {
        let w = build_blocks(b, n).unwrap();
        let k = cd_kernel(b, n, 0.0, 0.0).unwrap();
        let band = 3.0 / (n as f64).sqrt();
        let s1 = s_beta1(b, &w, 0.0, 0.0) / k;
        let s4 = s_beta4(b, &w, 0.0, 0.0) / k;
        println!("N={n} S1/K={s1} S4/K={s4}");
        assert!((s1 - 1.0).abs() <= band && (s4 - 1.0).abs() <= band);
        if n == 40 {
            let p = kernel_point(b, &w, 0.0);
            assert!(correction_beta1(&w, &p, &p).abs() <= 10.0 / (n as f64).sqrt() * k);
        }
    }
}

#[test]
fn corrections_ignore_lower_indices() {
    let b = quartic();
    let w = build_blocks(b, 20).unwrap();
    let px = kernel_point(b, &w, 0.3);
    let py = kernel_point(b, &w, -0.2);
    let mut qx = px.clone();
    let mut qy = py.clone();
    qx.phi[16] += 1.0;
    qy.eps[16] -= 2.0;
    assert_eq!(correction_beta1(&w, &px, &py).to_bits(), correction_beta1(&w, &qx, &qy).to_bits());
    assert_eq!(correction_beta4(&w, &px, &py).to_bits(), correction_beta4(&w, &qx, &qy).to_bits());
}

#[test]
fn matrix_kernel_entries() {
    let b = quartic();
    let w = build_blocks(b, 20).unwrap();
    let v = matrix_kernel(b, &w, 1, 0.4, 0.4).unwrap();
    assert!(v.es.abs() < 1e-12 && v.sgn_term == 0.0);
    assert!((v.s - v.s_yx).abs() < 1e-12);
    for beta in [1u8, 4] {
        let (x, y) = (0.2, -0.35);
        let v = matrix_kernel(b, &w, beta, x, y).unwrap();
        let u = matrix_kernel(b, &w, beta, y, x).unwrap();
        assert!((v.s_yx - u.s).abs() < 1e-12);
        let h = 1e-5;
        let sp = matrix_kernel(b, &w, beta, x, y + h).unwrap().s;
        let sm = matrix_kernel(b, &w, beta, x, y - h).unwrap().s;
        let fd = -(sp - sm) / (2.0 * h);
        assert!(((fd - v.sd) / v.sd).abs() < 1e-6, "beta={beta}: {fd} {}", v.sd);
        // eps S is skew
        assert!((v.es + u.es).abs() < 1e-9, "beta={beta}: {} {}", v.es, u.es);
    }
    let v4 = matrix_kernel(b, &w, 4, 0.2, 0.1).unwrap();
    assert!((v4.matrix()[0][0] - 0.5 * v4.s).abs() < 1e-15);
    assert!(matrix_kernel(b, &w, 2, 0.0, 0.0).is_err());
}

#[test]
fn correlations() {
    let b = quartic();
    let w = build_blocks(b, 20).unwrap();
    let r1 = correlation(b, &w, 1, &[0.3]).unwrap();
    assert!((r1 - s_beta1(b, &w, 0.3, 0.3)).abs() < 1e-12);
    let r4 = correlation(b, &w, 4, &[0.3]).unwrap();
    assert!((r4 - 0.5 * s_beta4(b, &w, 0.3, 0.3)).abs() < 1e-12);
    for beta in [1u8, 4] {
        let at = correlation(b, &w, beta, &[0.3, 0.3]).unwrap();
        let near = correlation(b, &w, beta, &[0.3, 0.3 + 1e-9]).unwrap();
        assert!((at - near).abs() < 1e-6, "{at} {near}");
    }
    assert!(correlation(b, &w, 1, &[0.1, 0.2, 0.3]).is_err());
    assert!(cluster(b, &w, 1, &[0.1, 0.2, 0.3]).is_ok());
}

#[test]
fn toeplitz_printed_matrix() {
    let iq = IqTable::new(2, 9);
    let r = toeplitz_inverse_crosscheck(2, 20, 10, &iq).unwrap();
    let printed = [[-0.01630, 0.0, 0.00435], [0.0, 0.15078, 0.0], [0.06113, 0.0, -0.01630]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((r.inversion[i][j] - printed[i][j]).abs() <= 0.5e-5 + 1e-5);
        }
    }
    assert!(r.max_rel_gap <= 0.008);
    assert!(toeplitz_inverse_crosscheck(2, 20, 11, &iq).is_err());
}
