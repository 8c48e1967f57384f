use proptest::prelude::*;
use rmt_bulk::appendix::*;

#[test]
fn l_ledger_meets_targets() {
    let led = verify_l_bound();
    println!("{}", led.to_json());
    assert!(led.pass);
    let mesh = led.find("L2 mesh maximum").unwrap();
    assert!(mesh.value > 4.9 && mesh.value + mesh.radius <= 5.162);
    let rig = led.find("L2 on [2,25]").unwrap();
    assert!(rig.value + rig.radius <= 5.185);
    assert!(led.find("prefactor").unwrap().pass);
    assert!(led.value <= 6.0);
}

#[test]
fn l_direct_values_below_bound() {
    let mut max: f64 = 0.0;
    for i in 0..=400 {
        let s = i as f64 * 0.1;
        let l = appendix_l(s);
        assert!(l >= 0.0);
        max = max.max(l);
        if s >= 2.0 && s <= 25.0 {
            assert!(appendix_l2(s) <= 5.185);
        }
    }
    assert!(max < 6.0, "{max}");
    assert!(l_tail_bound(25.0) <= 6.0);
    for s in [30.0, 60.0, 200.0] {
        assert!(l_tail_bound(s) <= l_tail_bound(25.0));
        assert!(appendix_l(s) <= l_tail_bound(s));
    }
}

#[test]
fn l2_lipschitz_budget_on_samples() {
    let h = 1e-4;
    for i in 0..=230 {
        let s = 2.0 + i as f64 * 0.1;
        let d = (appendix_l2(s + h) - appendix_l2(s - h)) / (2.0 * h);
        assert!(d.abs() <= L2_LIPSCHITZ, "{s}: {d}");
    }
}

#[test]
fn h_ledger_meets_targets() {
    let led = verify_h_integral();
    println!("{}", led.to_json());
    assert!(led.pass);
    let a = led.find("int_0^3").unwrap();
    assert!(a.value + a.radius <= 2.247 && a.value > 2.2);
    let b = led.find("int_3^6").unwrap();
    assert!(b.value + b.radius <= 0.309);
    let c = led.find("int_6^inf").unwrap();
    assert!(c.value + c.radius <= 0.233);
    assert!(led.value < 2.8);
}

#[test]
fn h_values_and_sign() {
    assert!((appendix_h(0.0) + 2.0).abs() < 1e-14);
    for i in 0..=3700 {
        let s = 3.0 + i as f64 * 0.01;
        assert!(appendix_h(s) > 0.0, "{s}");
    }
    // direct quadrature of |H| lands inside the ledger
    let q03 = gl(|s| appendix_h(s).abs(), 0.0, 3.0, 600);
    assert!(q03 <= 2.247 && q03 > 2.19, "{q03}");
    let q36 = gl(appendix_h, 3.0, 6.0, 600);
    assert!(q36 <= 0.309, "{q36}");
    let q6 = gl(appendix_h, 6.0, 60.0, 4000);
    assert!(q6 <= h_tail_bound(6.0), "{q6}");
    assert!(h_positivity_certificate(9.0) > 0.0);
}

fn gl(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    // composite midpoint-Simpson is enough for these smooth integrands
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let x0 = a + i as f64 * h;
            h / 6.0 * (f(x0) + 4.0 * f(x0 + h / 2.0) + f(x0 + h))
        })
        .sum()
}

#[test]
fn h_derivative_budgets() {
    let e = 1e-4;
    for i in 1..=600 {
        let s = i as f64 * 0.01;
        let d1 = (appendix_h(s + e) - appendix_h(s - e)) / (2.0 * e);
        let d2 = (appendix_h(s + e) - 2.0 * appendix_h(s) + appendix_h(s - e)) / (e * e);
        assert!(d1.abs() <= h_derivative_budget(s) + 1e-6, "{s}");
        assert!(d2.abs() <= h_second_derivative_budget(s) + 1e-3, "{s}");
    }
}

#[test]
fn int_x_enclosures() {
    for x in [4.0, 9.0, 25.0] {
        let (lo, hi) = int_x_bounds(x, 0.8).unwrap();
        let v = int_x(x);
        assert!(lo <= v && v <= hi, "{x}: {lo} {v} {hi}");
    }
    let (l1, _) = int_x_bounds(1.0, 0.8).unwrap();
    assert!(l1 >= 1.0 - (-1.0f64).exp() - 1e-15);
    let w = |x: f64| {
        let (l, h) = int_x_bounds(x, 0.8).unwrap();
        h - l
    };
    assert!(w(50.0) / w(25.0) < 0.1);
    assert!(int_x_bounds(-1.0, 0.5).is_err());
    assert!(int_x_bounds(1.0, 1.0).is_err());
}

#[test]
fn meshes_refine_only() {
    assert!(verify_l_bound_with(&Mesh { ne: 100, ni: 100 }).is_err());
    let mut h = H_MESH.clone();
    h.ne36 = 1000;
    assert!(verify_h_integral_with(&h).is_err());
}

#[test]
fn ledger_is_deterministic() {
    let a = verify_h_integral();
    let b = verify_h_integral();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn int_x_enclosed(x in 2.0f64..80.0, a in 0.5f64..0.9) {
        let (lo, hi) = int_x_bounds(x, a).unwrap();
        let v = int_x(x);
        prop_assert!(lo <= v * (1.0 + 1e-13) && v <= hi * (1.0 + 1e-13));
    }

    #[test]
    fn l_nonnegative(s in 0.0f64..60.0) {
        prop_assert!(appendix_l(s) >= 0.0);
        prop_assert!(appendix_l(s) < 6.0);
    }
}
