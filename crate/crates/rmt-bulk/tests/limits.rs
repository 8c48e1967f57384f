use rmt_bulk::asymptotics::IqTable;
use rmt_bulk::limits::*;
use rug::Integer;

#[test]
fn determinant_identity_and_magnitude() {
    for m in 2..=14 {
        let iq = IqTable::new(m, 4 * m as i64 - 3);
        let t = build_t(m, &iq).unwrap();
        let r = det_report(&t, &iq).unwrap();
        println!("m={m} det'={:.12} det={:.12} gap={:.2e}", r.det_tm_prime, r.det_tm_minus1, r.relative_gap);
        assert!(r.relative_gap < 1e-9);
        assert!(r.abs_det > 0.1);
        assert!(r.reconstruction < 1e-12);
        if m == 14 {
            assert!(r.distance_to_inv_sqrt2 < 0.15);
        }
    }
}

#[test]
fn t_factor_shapes() {
    let iq = IqTable::new(3, 9);
    let t = build_t(3, &iq).unwrap();
    assert_eq!(t.y.as_slice(), &[1.0, 0.0, 5.0, 1.0]);
    let t5 = build_t(5, &IqTable::new(5, 17)).unwrap();
    for j in 1..4 {
        for k in 1..4 {
            assert_eq!(t5.x[(j, k)], t5.x[(j - 1, k - 1)]);
        }
    }
}

#[test]
fn crude_chain() {
    for m in 2..=51 {
        assert!(crude_bound(m).unwrap().passes, "m={m}");
    }
    assert!(!crude_bound(200).unwrap().passes);
    for m in 2..=12u32 {
        assert_eq!(half_binomial_sum(m as usize), Integer::from(1) << (2 * m - 2));
    }
}

#[test]
fn refined_chain() {
    for m in 2..=99 {
        let r = refined_bound(m).unwrap();
        assert!(r.passes, "m={m}: {}", r.bound_value);
    }
    assert!(refined_bound(60).unwrap().bound_value <= crude_row_sum(60));
}

#[test]
fn quadrature_itilde_obeys_estimate() {
    for m in [3usize, 5, 10] {
        let iq = IqTable::new(m, 4 * m as i64 - 5);
        let mut q = 3;
        while q <= 4 * m - 5 {
            let v = iq.itilde(q as i64).unwrap().abs();
            assert!(v <= q_estimate(m, q), "m={m} q={q}: {v}");
            assert!(v <= l_bound(m));
            q += 2;
        }
    }
}

#[test]
fn large_m_chain() {
    assert!(c2(58) < 1.997, "{}", c2(58));
    for m in 38..=57 {
        let v = c2(m) * norm_factor(m);
        assert!(v < 0.996, "m={m}: {v}");
        assert!(large_m_bound(m).unwrap().passes);
    }
    let (a, b, c) = (c2_summands(58), c2_summands(100), c2_summands(200));
    for i in 0..4 {
        assert!(a[i] > b[i] && b[i] > c[i], "summand {i}");
    }
    for m in 38..400 {
        assert!(c1(m) < 2.0);
    }
    for m in 58..400 {
        assert!(c1(m).max(c2(m)) < 2.0);
    }
}

#[test]
fn c2_dominates_computed_values() {
    for m in [40usize, 60] {
        let iq = IqTable::new(m, 2 * small_q_limit(m) as i64 + 1);
        let mut q = 3;
        while q <= small_q_limit(m) {
            let v = (1.0 + iq.itilde(q as i64).unwrap()).abs();
            assert!(v <= c2(m), "m={m} q={q}: {v}");
            q += 2;
        }
    }
}

#[test]
fn routes_overlap() {
    for m in 38..=99 {
        let ok = routes_for(m).into_iter().filter(|r| bound(m, *r).unwrap().passes).count();
        assert!(ok >= 2, "m={m}");
    }
}
