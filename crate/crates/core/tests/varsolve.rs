use approx::assert_relative_eq;
use c4tail::graph::expected_induced_c4;
use c4tail::rates::{m_k, phase_boundary, regime_midpoint};
use c4tail::varsolve::*;
use c4tail::Error;
use proptest::prelude::*;

// f written out as the double sum over class pairs.
fn f_direct(x: &MassVector, eps: f64, m2: f64) -> f64 {
    let r = x.r();
    let mut s = 0.0;
    for i in 2..=r {
        let fi = i as f64;
        let mut inner = x.get(i) / (4.0 * fi) + eps * m2;
        for j in i + 1..=r {
            inner += x.get(j) / (2.0 * j as f64);
        }
        s += (fi - 1.0) * x.get(i) * inner;
    }
    s + x.get(r + 1).powi(2) / 4.0
}

fn mass(r: usize, lo: usize, hi: usize, vals: &[f64]) -> MassVector {
    let mut x = MassVector::zeros(r);
    for (c, v) in (lo..=hi).zip(vals) {
        x.set(c, *v);
    }
    x
}

fn arb_mass(r: usize) -> impl Strategy<Value = MassVector> {
    proptest::collection::vec(0.0f64..100.0, r + 1).prop_map(move |mut v| {
        v[0] = 0.0;
        MassVector::from_entries(v).unwrap()
    })
}

#[test]
fn mass_vector_basics() {
    let x = MassVector::unit(5, 3, 2.5);
    assert_eq!(x.r(), 5);
    assert_eq!(x.entries().len(), 6);
    assert_eq!(x.get(3), 2.5);
    assert_eq!(x.argmax(), 3);
    assert_eq!(x.total(), 2.5);
    assert!(MassVector::from_entries(vec![0.0, -1.0]).is_err());
}

#[test]
fn u_vector_layout() {
    let (n, p) = (10_000usize, 1e-3);
    let u = UVector::new(n, p, 6);
    assert_eq!(u.get(1), 0.0);
    assert_relative_eq!(u.get(3), p.ln() - (n as f64 * p * p).ln() / 3.0);
    assert_eq!(u.get(7), p.ln());
    for i in 2..=7 {
        assert!(u.get(i) < 0.0);
    }
}

#[test]
fn f_examples() {
    assert_eq!(f_value(&MassVector::zeros(4), 0.1, 7.0), 0.0);
    assert_relative_eq!(f_value(&MassVector::unit(4, 2, 3.0), 0.0, 7.0), 9.0 / 8.0);
    assert_relative_eq!(f_value(&MassVector::unit(4, 5, 3.0), 0.2, 7.0), 9.0 / 4.0);
    for k in 2..=6 {
        let (a, eps, m2) = (2.0, 0.05, 11.0);
        let want = a * a * (k as f64 - 1.0) / (4.0 * k as f64) + eps * a * (k as f64 - 1.0) * m2;
        assert_relative_eq!(
            f_value(&MassVector::unit(8, k, a), eps, m2),
            want,
            max_relative = 1e-14
        );
    }
}

#[test]
fn push_examples() {
    let u = UVector::from_entries(vec![0.0, -3.0, -2.0, -1.0, -0.5]);
    let x = mass(4, 3, 5, &[1.0, 2.0, 3.0]);
    assert_eq!(push_left(&x, 2, &u).unwrap(), x);
    let y = push_left(&MassVector::unit(4, 2, 1.0), 2, &u).unwrap();
    assert_eq!(y, MassVector::unit(4, 3, 1.5));
    let z = push_right(&MassVector::unit(4, 4, 1.0), 4, &u).unwrap();
    assert_eq!(z, MassVector::unit(4, 3, 0.5));
    let x = mass(4, 2, 3, &[1.0, 2.0]);
    assert_eq!(push_right(&x, 5, &u).unwrap(), x);

    let singular = UVector::from_entries(vec![0.0, -1.0, 0.0, -1.0, -1.0]);
    assert!(matches!(
        push_left(&MassVector::unit(4, 2, 1.0), 2, &singular),
        Err(Error::Domain(_))
    ));
    assert!(push_left(&x, 1, &u).is_err());
    assert!(push_left(&x, 5, &u).is_err());
    assert!(push_right(&x, 2, &u).is_err());
    assert!(push_right(&x, 6, &u).is_err());
}

#[test]
fn technical_examples() {
    for i in 2..=8 {
        for n in [1_000usize, 100_000, 10_000_000] {
            let c = phase_boundary(i).unwrap();
            let nn = n as f64;
            let (l, r) = technical_sides(i, n, nn.powf(-1.0 + c));
            assert_relative_eq!(l, r, max_relative = 1e-9);
            assert!(technical_inequality(i, n, nn.powf(-1.0 + c + 0.01)));
            assert!(!technical_inequality(i, n, nn.powf(-1.0 + c - 0.01)));
        }
    }
}

#[test]
fn closed_form_examples() {
    for k in 2..=8 {
        let t = 1234.5;
        let kf = k as f64;
        let (alpha, value) = closed_form_alpha(k, t, 0.0, 50.0, -2.0);
        assert_relative_eq!(
            alpha,
            2.0 * (kf * t / (kf - 1.0)).sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(value, -2.0 * alpha);
        let ex = 10f64.powf(2.0 + k as f64 * 0.7);
        let (alpha, _) = closed_form_alpha(k, 1.5 * ex, 0.0, 0.0, -1.0);
        assert_relative_eq!(alpha, m_k(k, 1.5, 0.0, ex), max_relative = 1e-12);
    }
    assert_eq!(closed_form_alpha(3, 0.0, 0.1, 5.0, -1.0), (0.0, 0.0));
    assert_eq!(closed_form_alpha(3, -1.0, 0.1, 5.0, -1.0), (0.0, 0.0));
}

#[test]
fn default_r_rule() {
    assert_eq!(default_r(0.1, 3), 10);
    assert_eq!(default_r(0.5, 4), 5);
    assert_eq!(default_r(0.001, 3), MAX_R);
    assert_eq!(default_r(0.0, 3), MAX_R);
}

#[test]
fn solve_examples() {
    let n = 1_000_000usize;
    for k in 2..=5 {
        let p = regime_midpoint(n, k);
        let s = solve_discrete(n, p, 1.0, 0.05, None).unwrap();
        assert_eq!(s.k, k);
        assert_eq!(s.r, 20);
        assert!(s.value < 0.0);
        assert_eq!(s.x_star.argmax(), k);
        assert_eq!(s.push_check.left_violations, 0);
        let ex = expected_induced_c4(n, p).unwrap();
        assert_relative_eq!(s.t, 0.95 * ex, max_relative = 1e-12);
        assert_relative_eq!(f_value(&s.x_star, 0.05, s.m2), s.t, max_relative = 1e-10);
    }
    let p = regime_midpoint(n, 3);
    let zero = solve_discrete(n, p, 0.2, 0.2, None).unwrap();
    assert_eq!(zero.value, 0.0);
    assert!(matches!(
        solve_discrete(n, (n as f64).powf(-0.3), 1.0, 0.1, None),
        Err(Error::Domain(_))
    ));
    assert!(solve_discrete(n, p, 1.0, 0.1, Some(3)).is_err());
}

#[test]
fn closed_form_is_grid_optimal_at_zero_eps() {
    for n in [10_000usize, 1_000_000, 100_000_000] {
        for k in 2..=6 {
            let s = solve_discrete(n, regime_midpoint(n, k), 1.0, 0.0, None).unwrap();
            assert!(
                s.grid_best <= s.value + 0.005 * s.value.abs(),
                "n={n} k={k}: {}",
                s.gap
            );
            assert_eq!(s.grid_argmax, k);
        }
    }
}

// With ε > 0 the term ε m_2 (i-1) x_i makes high classes a cheap way to
// reach f >= t, so the single-class candidate is no longer the maximiser.
#[test]
fn grid_beats_closed_form_for_positive_eps() {
    let n = 1_000_000usize;
    for k in 2..=5 {
        let s = solve_discrete(n, regime_midpoint(n, k), 1.0, 0.05, None).unwrap();
        assert!(s.gap > 0.5, "k={k}: {}", s.gap);
        assert_eq!(s.grid_argmax, s.r);
    }
}

#[test]
fn grid_points_are_feasible() {
    let (n, p, r) = (1_000_000usize, regime_midpoint(1_000_000, 3), 8);
    let u = UVector::new(n, p, r);
    let (t, eps, m2) = (5000.0, 0.03, 150.0);
    for i in 2..=r + 1 {
        for j in i + 1..=r + 1 {
            let (v, a, b) = grid_pair(i, j, &u, t, eps, m2, 50, 400.0);
            let mut x = MassVector::zeros(r);
            x.set(i, a);
            x.set(j, b);
            assert!(f_value(&x, eps, m2) >= t * (1.0 - 1e-10));
            assert_relative_eq!(x.dot(&u), v, max_relative = 1e-12);
        }
    }
}

#[test]
fn pushes_at_zero_eps_have_no_violations() {
    let n = 10_000_000usize;
    for k in 2..=6 {
        let s = solve_discrete(n, regime_midpoint(n, k), 1.0, 0.0, Some(12)).unwrap();
        assert_eq!(s.push_check.left_violations, 0);
        assert_eq!(s.push_check.right_violations, 0);
        assert!(s.push_check.right_tested > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn f_matches_double_sum(x in arb_mass(8), eps in 0.0f64..0.5, m2 in 0.0f64..100.0) {
        let a = f_value(&x, eps, m2);
        let b = f_direct(&x, eps, m2);
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn pushes_preserve_inner_product(x in arb_mass(10), logn in 3.0f64..7.0, e in -0.95f64..-0.7, c in 2usize..=11) {
        let n = 10f64.powf(logn) as usize;
        let u = UVector::new(n, (n as f64).powf(e), 10);
        let before = x.dot(&u);
        if c <= 10 {
            let y = push_left(&x, c, &u).unwrap();
            prop_assert!((y.dot(&u) - before).abs() <= 1e-12 * before.abs());
        }
        if c >= 3 {
            let y = push_right(&x, c, &u).unwrap();
            prop_assert!((y.dot(&u) - before).abs() <= 1e-12 * before.abs());
        }
    }

    #[test]
    fn technical_matches_threshold(i in 2usize..=10, logn in 3.0f64..7.0, e in -1.0f64..-0.5) {
        let n = 10f64.powf(logn) as usize;
        let nn = n as f64;
        let p = nn.powf(e);
        let boundary = nn.powf(-1.0 + phase_boundary(i).unwrap());
        prop_assume!((p / boundary - 1.0).abs() > 1e-9);
        prop_assert_eq!(technical_inequality(i, n, p), p >= boundary);
    }

    #[test]
    fn left_push_monotone_in_regime(x in arb_mass(10), logn in 3.0f64..7.0, frac in 0.0f64..1.0, eps in 0.0f64..0.2, m2 in 0.0f64..50.0, i in 2usize..=9) {
        let n = 10f64.powf(logn) as usize;
        let nn = n as f64;
        let lo = -1.0 + phase_boundary(i).unwrap();
        let p = nn.powf(lo + frac * (-2.0 / 3.0 - lo));
        let mut x = x;
        for c in 1..i {
            x.set(c, 0.0);
        }
        let u = UVector::new(n, p, 10);
        let y = push_left(&x, i, &u).unwrap();
        let (a, b) = (f_value(&x, eps, m2), f_value(&y, eps, m2));
        prop_assert!(b >= a - 1e-9 * a.max(1.0), "{} < {}", b, a);
    }

    #[test]
    fn right_push_monotone_in_regime(x in arb_mass(10), logn in 3.0f64..7.0, frac in 0.0f64..1.0, m2 in 0.0f64..50.0, j in 3usize..=10) {
        let n = 10f64.powf(logn) as usize;
        let nn = n as f64;
        let hi = -1.0 + phase_boundary(j - 1).unwrap();
        let p = nn.powf(-0.99 + frac * (hi + 0.99));
        prop_assume!(p * p * nn < 1.0);
        let mut x = x;
        for c in j + 1..=11 {
            x.set(c, 0.0);
        }
        let u = UVector::new(n, p, 10);
        let y = push_right(&x, j, &u).unwrap();
        let (a, b) = (f_value(&x, 0.0, m2), f_value(&y, 0.0, m2));
        prop_assert!(b >= a - 1e-9 * a.max(1.0), "{} < {}", b, a);
    }

    #[test]
    fn last_coordinate_push(x in arb_mass(8), logn in 3.0f64..7.0, frac in 0.0f64..1.0) {
        let n = 10f64.powf(logn) as usize;
        let nn = n as f64;
        let p = nn.powf(-0.99 + frac * (0.99 - 2.0 / 3.0 - 0.05));
        let u = UVector::new(n, p, 8);
        let y = push_right(&x, 9, &u).unwrap();
        let (a, b) = (f_value(&x, 0.0, 0.0), f_value(&y, 0.0, 0.0));
        prop_assert!(b >= a - 1e-9 * a.max(1.0), "{} < {}", b, a);
    }

    #[test]
    fn closed_form_hits_target(k in 2usize..=10, t in 0.01f64..1e8, eps in 0.0f64..0.3, m2 in 0.0f64..1e4) {
        let (alpha, _) = closed_form_alpha(k, t, eps, m2, -1.0);
        let f = f_value(&MassVector::unit(12, k, alpha), eps, m2);
        prop_assert!((f - t).abs() <= 1e-10 * t);
    }
}
