use std::sync::OnceLock;

use proptest::prelude::*;
use rmt_bulk::universality::*;
use rmt_bulk::widom::{build_blocks, s_beta1, s_beta4, WidomBlocks};
use rmt_bulk::{Error, PhiBasis, Potential};

fn quartic() -> &'static (PhiBasis, WidomBlocks) {
    static B: OnceLock<(PhiBasis, WidomBlocks)> = OnceLock::new();
    B.get_or_init(|| {
        let b = PhiBasis::build(&Potential::monomial(2, 1.0).unwrap(), 48, 256).unwrap();
        let bl = build_blocks(&b, 40).unwrap();
        (b, bl)
    })
}

#[test]
fn two_particle_densities_exact() {
    // one symplectic particle has density e^{-V}/Z; two orthogonal ones are integrated directly
    let b = PhiBasis::build(&Potential::monomial(1, 1.0).unwrap(), 12, 256).unwrap();
    let bl = build_blocks(&b, 2).unwrap();
    let inner = |x: f64| {
        // |x - y| e^{-y^2/2} integrated in closed form
        let g = (-x * x / 2.0).exp();
        let phi = |t: f64| 0.5 * (1.0 + libm_erf(t / std::f64::consts::SQRT_2));
        let s2p = (2.0 * std::f64::consts::PI).sqrt();
        g * (2.0 * (-x * x / 2.0).exp() + x * s2p * (2.0 * phi(x) - 1.0))
    };
    // Z = int int |x - y| e^{-(x^2+y^2)/2} = 4 sqrt(pi)
    let z = 4.0 * std::f64::consts::PI.sqrt();
    for x in [0.0f64, 0.3, 0.7, 1.2, 2.0] {
        let exact4 = (-x * x).exp() / std::f64::consts::PI.sqrt();
        assert!((0.5 * s_beta4(&b, &bl, x, x) - exact4).abs() < 1e-12, "{x}");
        let exact1 = 2.0 * inner(x) / z;
        assert!((s_beta1(&b, &bl, x, x) - exact1).abs() < 1e-10, "{x}");
    }
}

/// `erf` by Maclaurin series below 3 and the `erfc` continued fraction above.
fn libm_erf(x: f64) -> f64 {
    if x < 0.0 {
        return -libm_erf(-x);
    }
    if x < 3.0 {
        let mut term = x;
        let mut sum = x;
        for k in 1..200 {
            term *= -x * x / k as f64;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        // erfc continued fraction
        let mut f = 0.0;
        for k in (1..80).rev() {
            f = (k as f64 / 2.0) / (x + f);
        }
        1.0 - (-x * x).exp() / std::f64::consts::PI.sqrt() / (x + f)
    }
}

#[test]
fn scaled_errors_beta1_beta2() {
    let (b, bl) = quartic();
    let grid = uniform_grid(-1.0, 1.0, 11);
    let r1 = scaled_kernel_error(b, bl, 1, 0.0, &grid).unwrap();
    print!("{}", r1.to_csv());
    for e in &r1.entries {
        assert!(e.sup_error < 0.02, "{e:?}");
    }
    let r2 = scaled_kernel_error(b, bl, 2, 0.0, &grid).unwrap();
    assert!(r2.entry("K").unwrap() < 0.05);
    // asymptotic density within a few percent of K_N(0,0)
    assert!((r2.asymptotic_density / r2.cd_density - 1.0).abs() < 0.05);
}

#[test]
fn diagonal_normalization() {
    let (b, bl) = quartic();
    for beta in [1u8, 4] {
        let r = scaled_kernel_error(b, bl, beta, 0.0, &[0.0]).unwrap();
        assert!(r.entry("11").unwrap() < 1e-12);
        assert!(r.entry("12").unwrap() < 1e-10);
        assert!(r.entry("21").unwrap() < 1e-12);
    }
}

#[test]
fn rejects_bad_inputs() {
    let (b, bl) = quartic();
    assert!(scaled_kernel_error(b, bl, 3, 0.0, &[0.0]).is_err());
    assert!(scaled_kernel_error(b, bl, 1, 0.0, &[3.0]).is_err());
    assert!(matches!(build_blocks(b, 21), Err(Error::OddN(21))));
    assert!(cluster_limit_check(b, bl, 1, 0.0, &[0.0]).is_err());
    let s = GapSpec::new(0.5, 16, 1).unwrap();
    let m = GapMode::Finite { basis: b, n_size: 40, blocks: None, r: 0.0 };
    assert!(gap_probability(&m, &s).is_err());
}

#[test]
fn gap_limits() {
    let p = gap_probability(&GapMode::Limit, &GapSpec::new(1e-3, 40, 1).unwrap()).unwrap();
    assert!(p.probability >= 0.995);
    let p = gap_probability(&GapMode::Limit, &GapSpec::new(0.1, 40, 2).unwrap()).unwrap();
    assert!((p.probability - 0.8).abs() < 2e-3, "{}", p.probability);
    for beta in [1u8, 2, 4] {
        let sc = nystrom_self_consistency(&GapMode::Limit, &GapSpec::new(0.5, 40, beta).unwrap()).unwrap();
        assert!(sc < 1e-4, "{beta}: {sc}");
    }
}

#[test]
fn gap_finite_vs_limit() {
    let (b, bl) = quartic();
    let s = GapSpec::new(0.5, 40, 2).unwrap();
    let fin = gap_probability(&GapMode::Finite { basis: b, n_size: 40, blocks: Some(bl), r: 0.0 }, &s).unwrap();
    let lim = gap_probability(&GapMode::Limit, &s).unwrap();
    assert!((fin.probability - lim.probability).abs() < 5e-2);
    let s1 = GapSpec::new(0.5, 40, 1).unwrap();
    let fin1 = gap_probability(&GapMode::Finite { basis: b, n_size: 40, blocks: Some(bl), r: 0.0 }, &s1).unwrap();
    let lim1 = gap_probability(&GapMode::Limit, &s1).unwrap();
    assert!((fin1.probability - lim1.probability).abs() < 5e-3);
}

#[test]
fn gap_monotone_in_theta() {
    for beta in [1u8, 2, 4] {
        let mut prev = 1.0;
        for i in 1..=20 {
            let p = gap_probability(&GapMode::Limit, &GapSpec::new(0.05 * i as f64, 32, beta).unwrap())
                .unwrap()
                .probability;
            assert!(p <= prev + 1e-12, "{beta} {i}");
            prev = p;
        }
    }
}

#[test]
fn cluster_functions() {
    let (b, bl) = quartic();
    let coincident = cluster_limit_check(b, bl, 1, 0.0, &[0.0, 0.0]).unwrap();
    assert!(coincident.relative_gap < 0.1);
    for x in [0.2, -0.5] {
        assert!(cluster_limit_check(b, bl, 1, 0.0, &[x, x]).unwrap().relative_gap < 0.1);
    }
    assert!(cluster_limit_check(b, bl, 4, 0.0, &[0.0, 0.0]).unwrap().relative_gap < 0.1);
    for beta in [1u8, 4] {
        let far = cluster_limit(beta, &[0.0, 10.0]).unwrap().abs();
        let near = cluster_limit(beta, &[0.0, 0.0]).unwrap();
        assert!(far < 0.05 * near, "{beta}: {far} {near}");
        for pts in [vec![0.0, 0.3], vec![-0.2, 0.1, 0.5]] {
            let r = cluster_limit_check(b, bl, beta, 0.0, &pts).unwrap();
            assert!(r.conjugation_gap < 1e-12, "{r:?}");
        }
    }
    let r3 = cluster_limit_check(b, bl, 1, 0.0, &[-0.2, 0.1, 0.5]).unwrap();
    assert!(r3.relative_gap < 0.1, "{r3:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn limit_kernel_symmetries(a in -3.0f64..3.0, c in -3.0f64..3.0) {
        for beta in [1u8, 4] {
            let k = limit_kernel_ref(beta, a, c).unwrap();
            let kt = limit_kernel_ref(beta, c, a).unwrap();
            prop_assert!((k[0][0] - kt[1][1]).abs() < 1e-15);
            prop_assert!((k[0][1] + kt[0][1]).abs() < 1e-12);
            prop_assert!((k[1][0] + kt[1][0]).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_integral_odd(z in -20.0f64..20.0) {
        let lk = LimitKernel::new(1).unwrap();
        prop_assert!((lk.k_integral(z) + lk.k_integral(-z)).abs() < 1e-14);
    }
}
