use std::f64::consts::PI;

use proptest::prelude::*;
use rmt_bulk::asymptotics::*;
use rmt_bulk::widom::build_blocks;
use rmt_bulk::{PhiBasis, Potential};
use rug::Rational;

#[test]
fn mrs_numbers() {
    let (c, d) = mrs_leading(&Potential::monomial(1, 1.0).unwrap(), 8);
    assert!((c - 4.0).abs() < 1e-14);
    assert_eq!(d, 0.0);
    let v = Potential::monomial(2, 1.0).unwrap();
    for n in [10usize, 40, 160] {
        let (c, d) = mrs_leading(&v, n);
        let want = (4.0f64 / 3.0).powf(0.25) * (n as f64).powf(0.25);
        assert!((c - want).abs() < 1e-13 * want);
        assert_eq!(d, 0.0);
    }
}

#[test]
fn h_closed_forms() {
    let h2 = HFunction::new(2);
    assert_eq!(h2.beta, vec![Rational::from((8, 3)), Rational::from((16, 3))]);
    for x in [0.0, 0.25, 0.7, 1.0] {
        assert!((h2.eval(x) - 8.0 / 3.0 * (1.0 + 2.0 * x * x)).abs() < 1e-14);
    }
    let h1 = HFunction::new(1);
    for x in [0.0, 0.5, 1.0] {
        assert_eq!(h1.eval(x), 4.0);
    }
    for m in 1..=10usize {
        let b = h_coeffs(m);
        let at_one: Rational = b.iter().fold(Rational::new(), |acc, c| acc + c);
        assert_eq!(at_one, Rational::from(4 * m));
        assert_eq!(b[0], Rational::from((4 * m, 2 * m - 1)));
    }
}

#[test]
fn h_positive_and_monotone() {
    for m in 1..=10usize {
        let h = HFunction::new(m);
        let mut prev = 0.0;
        for i in 0..=200 {
            let v = h.eval(i as f64 / 200.0);
            assert!(v > 0.0 && v >= prev, "{m} {i}");
            prev = v;
        }
    }
}

#[test]
fn h_structure() {
    let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    for m in 2..=8usize {
        let r = h_structure_check(m, &grid);
        assert!(r.ode_exact && r.hypergeometric_exact && r.monotone);
        assert_eq!(r.recursion_exact, Some(true));
        assert!(r.ode_residual_max < 1e-12, "{m}: {}", r.ode_residual_max);
    }
    let r = h_structure_check(3, &[0.5]);
    assert!(r.integral_residual_max < 1e-8);
}

#[test]
fn theta_values() {
    for m in 1..=8usize {
        assert!((theta_eval(m, 1.0) - PI / 2.0).abs() < 1e-12, "{m}");
    }
    let want = 3.0f64.sqrt() / 4.0 + PI / 6.0;
    assert!((theta_eval(1, 0.5) - want).abs() < 1e-13);
    let grid: Vec<f64> = (0..=90).map(|i| 0.05 + i as f64 * 0.01).collect();
    for m in 2..=6usize {
        let r = theta_ode_check(m, &grid);
        assert!(r.ode_residual_max < 1e-10, "{m}: {}", r.ode_residual_max);
    }
}

#[test]
fn density_normalization() {
    // (1/2pi) int sqrt(1-x^2) h(x) dx over [-1,1] equals 2 theta(1)/pi
    for m in 1..=8usize {
        assert!((2.0 * theta_eval(m, 1.0) / PI - 1.0).abs() < 1e-12);
    }
}

#[test]
fn i_q_values() {
    for q in [-3i64, -1, 1, 3] {
        let (i, _) = i_q(1, q).unwrap();
        assert!((i - 0.5 * q.signum() as f64).abs() < 1e-10);
    }
    assert!(i_q(3, 4).is_err());
    let (_, it) = i_q(2, 3).unwrap();
    let direct = 2.0 * i_q_direct(2, 3) - 0.5;
    assert!((it - direct).abs() < 1e-8, "{it} {direct}");
    let t = IqTable::new(5, 15);
    for q in (1..=15).step_by(2) {
        assert!((t.i(-q).unwrap() + t.i(q).unwrap()).abs() < 1e-12);
        assert!((t.itilde(q).unwrap() - (5.0 * t.i(q).unwrap() - 0.5)).abs() < 1e-15);
    }
    assert!(t.i(17).is_err());
}

#[test]
fn i_tilde_large_m_reference() {
    // reference value from an independent 50-digit quadrature of the x-form
    let (_, it) = i_q(50, 3).unwrap();
    assert!((it - (-0.8184295849)).abs() < 1e-8, "{it}");
    // Ĩ(3) keeps decreasing with m
    let seq: Vec<f64> = [2usize, 10, 50, 200].iter().map(|&m| i_q(m, 3).unwrap().1).collect();
    assert!(seq.windows(2).all(|w| w[1] < w[0]), "{seq:?}");
}

#[test]
fn i_tilde_decays_in_q() {
    let v: Vec<f64> = [11i64, 21, 41].iter().map(|&q| i_q(3, q).unwrap().1.abs()).collect();
    assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
    assert!(v[2] < 1e-10);
}

#[test]
fn toeplitz_limits() {
    assert_eq!(thm1_limit(2, 1, 0), 3.0);
    assert_eq!(thm1_limit(2, 0, 1), -3.0);
    assert_eq!(thm1_limit(2, 3, 0), 1.0);
    assert_eq!(thm1_limit(2, 0, 3), -1.0);
    let row: Vec<f64> = (-4..=4).map(|d| thm1_limit(2, d, 0)).collect();
    assert_eq!(row, vec![0.0, -1.0, 0.0, -3.0, 0.0, 3.0, 0.0, 1.0, 0.0]);
    for m in 1..=4usize {
        let n = (2 * m - 1) as i64;
        assert_eq!(thm1_limit(m, n + 2, 0), 0.0);
        assert_eq!(thm1_limit(m, 0, n + 1), 0.0);
    }
    let t1 = IqTable::new(1, 3);
    assert!((thm2_limit(1, 0, 0, 1, &t1).unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(thm2_limit(1, 0, 0, 2, &t1).unwrap(), 0.0);
}

#[test]
fn ba_limit_structure() {
    assert_eq!(scale_constant(2), Rational::from((1, 3)));
    assert_eq!(scale_constant(3), Rational::from((1, 10)));
    let iq = IqTable::new(3, 9);
    let l = ba_limits(3, &iq).unwrap();
    for r in 0..5 {
        for c in 0..5 {
            if (r + c) % 2 == 1 {
                assert_eq!(l.b12[(r, c)], 0.0);
            }
        }
    }
    assert!(ba_limits(1, &IqTable::new(1, 3)).is_err());
}

#[test]
fn b12_finite_n_matches_limit() {
    let v = Potential::monomial(2, 1.0).unwrap();
    let basis = PhiBasis::build(&v, 48, 256).unwrap();
    let n = 40;
    let blocks = build_blocks(&basis, n).unwrap();
    let (c, _) = mrs_leading(&v, n);
    let emp = blocks.b12() * (n as f64 / c);
    let lim = ba_limits(2, &IqTable::new(2, 9)).unwrap().b12;
    assert_eq!(emp.shape(), lim.shape());
    let worst = (emp - &lim).abs().max();
    assert!(worst < 0.15, "{worst}");
}

proptest! {
    #[test]
    fn i_q_odd_in_q(m in 2usize..8, k in 0i64..10) {
        let q = 2 * k + 1;
        let (a, _) = i_q(m, q).unwrap();
        let (b, _) = i_q(m, -q).unwrap();
        prop_assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn theta_monotone(m in 1usize..8, x in 0.0f64..0.99) {
        prop_assert!(theta_eval(m, x + 0.01) > theta_eval(m, x));
    }
}
