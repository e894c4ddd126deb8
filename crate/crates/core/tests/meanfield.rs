use approx::assert_relative_eq;
use c4tail::graph::{
    choose2, conditioned_expectation_c4, edge_from_index, edge_index, expected_induced_c4,
    C4MaskTable,
};
use c4tail::meanfield::*;
use c4tail::rates::rho_k;
use c4tail::{Error, SimpleGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_q(n: usize, seed: u64) -> EdgeWeightVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = (0..choose2(n)).map(|_| rng.gen::<f64>()).collect();
    EdgeWeightVector::from_vec(n, q).unwrap()
}

// Σ_G P_q(G) X(G) over every graph on n vertices.
fn enumerate_expectation(q: &EdgeWeightVector) -> f64 {
    let n = q.n;
    let pairs = choose2(n);
    let table = C4MaskTable::new(n).unwrap();
    let mut acc = 0.0;
    for g in 0u64..1 << pairs {
        let mut w = 1.0;
        for idx in 0..pairs {
            w *= if g >> idx & 1 == 1 {
                q.q[idx]
            } else {
                1.0 - q.q[idx]
            };
        }
        acc += w * table.count(g) as f64;
    }
    acc
}

// Gradient of the n = 4 polynomial, expanded pairing by pairing.
fn gradient_n4(q: &EdgeWeightVector) -> Vec<f64> {
    let pairings: [([(usize, usize); 4], [(usize, usize); 2]); 3] = [
        ([(0, 1), (1, 2), (2, 3), (0, 3)], [(0, 2), (1, 3)]),
        ([(0, 1), (1, 3), (2, 3), (0, 2)], [(0, 3), (1, 2)]),
        ([(0, 2), (1, 2), (1, 3), (0, 3)], [(0, 1), (2, 3)]),
    ];
    let mut g = vec![0.0; 6];
    for (cyc, dia) in pairings {
        for e in 0..6 {
            let (a, b) = edge_from_index(e);
            let mut term = 1.0;
            let mut hit = 0.0;
            for &(x, y) in &cyc {
                if (x, y) == (a, b) {
                    hit = 1.0;
                } else {
                    term *= q.get(x, y);
                }
            }
            for &(x, y) in &dia {
                if (x, y) == (a, b) {
                    hit = -1.0;
                } else {
                    term *= 1.0 - q.get(x, y);
                }
            }
            g[e] += hit * term;
        }
    }
    g
}

#[test]
fn expectation_examples() {
    for n in 4..=30 {
        for p in [0.05, 0.4] {
            let q = EdgeWeightVector::constant(n, p);
            assert_relative_eq!(
                inhomogeneous_c4_expectation(&q),
                expected_induced_c4(n, p).unwrap(),
                max_relative = 1e-12
            );
        }
        assert_eq!(
            inhomogeneous_c4_expectation(&EdgeWeightVector::constant(n, 1.0)),
            0.0
        );
    }
    let mut q = EdgeWeightVector::constant(4, 0.3);
    for (a, b) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
        q.set(a, b, 1.0);
    }
    let plant = SimpleGraph::cycle(4, 4);
    assert_relative_eq!(
        inhomogeneous_c4_expectation(&q),
        conditioned_expectation_c4(&plant, 4, 0.3).unwrap(),
        max_relative = 1e-14
    );
    assert!(EdgeWeightVector::from_vec(4, vec![0.5; 5]).is_err());
    assert!(EdgeWeightVector::from_vec(4, vec![1.5; 6]).is_err());
}

#[test]
fn expectation_matches_graph_enumeration() {
    for (n, seed) in [(4, 1u64), (5, 2), (5, 3), (6, 4)] {
        let q = random_q(n, seed);
        assert_relative_eq!(
            inhomogeneous_c4_expectation(&q),
            enumerate_expectation(&q),
            max_relative = 1e-12
        );
    }
}

#[test]
fn gradient_matches_hand_expansion_at_four() {
    for seed in 0..10 {
        let q = random_q(4, seed);
        let (e, g) = c4_expectation_with_gradient(&q);
        assert_relative_eq!(e, inhomogeneous_c4_expectation(&q), max_relative = 1e-14);
        for (a, b) in g.iter().zip(gradient_n4(&q)) {
            assert!((a - b).abs() <= 1e-14);
        }
    }
    assert_eq!(c4_expectation_gradient(&random_q(4, 0)).len(), 6);
}

#[test]
fn gradient_matches_finite_differences() {
    for n in [6usize, 8, 10] {
        for seed in 0..20 {
            let q = random_q(n, 100 + seed);
            let g = c4_expectation_gradient(&q);
            let h = 1e-6;
            for idx in (0..choose2(n)).step_by(3) {
                let mut up = q.clone();
                let mut down = q.clone();
                up.q[idx] += h;
                down.q[idx] -= h;
                let fd = (inhomogeneous_c4_expectation(&up) - inhomogeneous_c4_expectation(&down))
                    / (2.0 * h);
                let scale = g[idx].abs().max(1e-3);
                assert!(
                    (fd - g[idx]).abs() <= 1e-5 * scale,
                    "n={n} idx={idx}: {fd} vs {}",
                    g[idx]
                );
            }
        }
    }
}

#[test]
fn gradient_at_all_ones() {
    let n = 6;
    let q = EdgeWeightVector::constant(n, 1.0);
    let g = c4_expectation_gradient(&q);
    // Every monomial keeps two diagonal factors (1 - 1) or one after
    // differentiation, so all partials vanish.
    assert!(g.iter().all(|&v| v == 0.0));
    let mut q = q;
    q.set(0, 2, 0.0);
    q.set(1, 3, 0.0);
    let g = c4_expectation_gradient(&q);
    assert_eq!(g[edge_index(0, 1)], 1.0);
    assert_eq!(g[edge_index(0, 2)], -1.0);
}

#[test]
fn block_expectation_matches_vector() {
    for (n, a, b, w) in [
        (8usize, 2usize, 3usize, 0.7),
        (10, 3, 3, 0.9),
        (12, 1, 6, 0.5),
        (9, 4, 5, 1.0),
    ] {
        let p = 0.2;
        let mut q = EdgeWeightVector::constant(n, p);
        for x in 0..a {
            for y in a..a + b {
                q.set(x, y, w);
            }
        }
        assert_relative_eq!(
            block_expectation(n, a, b, p, w),
            inhomogeneous_c4_expectation(&q),
            max_relative = 1e-12
        );
    }
}

#[test]
fn ansatz_examples() {
    let zero = solve_ansatz(30, 0.1, 0.0).unwrap();
    assert_eq!(zero.cost, 0.0);
    assert!(zero.q_star.q.iter().all(|&v| v == 0.1));

    let (n, p, delta) = (40usize, (40f64).powf(-0.6), 1.0);
    let s = solve_ansatz(n, p, delta).unwrap();
    assert!(s.constraint_value >= s.target * (1.0 - 1e-9));
    let bp = s.block.unwrap();
    assert_relative_eq!(
        s.cost,
        (bp.a * bp.b) as f64 * c4tail::rates::relative_entropy(bp.w, p).unwrap(),
        max_relative = 1e-12
    );
    assert_relative_eq!(s.cost, s.q_star.cost(p), max_relative = 1e-9);

    let ex = expected_induced_c4(n, p).unwrap();
    let side = (2.0 * (delta * ex).sqrt()).sqrt().ceil() as usize;
    if block_expectation(n, side, side, p, 1.0) >= s.target {
        assert!(s.cost <= (side * side) as f64 * -p.ln());
    }
    assert!(matches!(solve_ansatz(3, 0.5, 1.0), Err(Error::Domain(_))));
    assert!(matches!(
        solve_ansatz(8, 0.5, 1000.0),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn general_sandwich_small() {
    let (n, p, delta) = (20usize, 20f64.powf(-0.6), 1.0);
    let a = solve_ansatz(n, p, delta).unwrap();
    let g = solve_general(n, p, delta, 7).unwrap();
    assert!(g.constraint_value >= g.target * (1.0 - 1e-6));
    assert!(g.cost >= 0.0);
    assert!(g.cost <= a.cost * 1.01);
    assert!(g.q_star.q.iter().all(|&v| v >= p && v <= 1.0));
    assert_relative_eq!(
        g.constraint_value,
        inhomogeneous_c4_expectation(&g.q_star),
        max_relative = 1e-12
    );

    let again = solve_general(n, p, delta, 7).unwrap();
    assert_eq!(again.cost, g.cost);

    assert_eq!(solve_general(n, p, 0.0, 1).unwrap().cost, 0.0);
    assert!(matches!(
        solve_general(121, 0.1, 1.0, 1),
        Err(Error::Budget(_))
    ));
}

#[test]
fn gap_examples() {
    let n = 1_000_000usize;
    let p = (n as f64).powf(-0.9);
    let r = gap_report(n, p, 1.0).unwrap();
    assert_eq!(r.k, Some(2));
    assert_relative_eq!(r.ratio, rho_k(2, n, p));
    assert!(r.ratio < 1.0);
    assert_relative_eq!(r.family_norm, r.ratio * r.meanfield_norm);

    let huge = 1_000_000_000_000_000_000usize;
    let sd = gap_report(huge, (huge as f64).powf(-0.6), 1.0).unwrap();
    assert_eq!(sd.regime, "SPARSE_DENSE");
    assert_eq!(sd.ratio, 1.0);

    assert!(matches!(
        gap_report(n, (n as f64).powf(-0.3), 1.0),
        Err(Error::Domain(_))
    ));
}

#[test]
fn gap_ratio_climbs_towards_one() {
    let n = 1_000_000usize;
    let mut last = 0.0;
    for i in 0..200 {
        let e = -0.95 + i as f64 * (0.95 - 2.0 / 3.0 - 1e-3) / 199.0;
        let r = gap_report(n, (n as f64).powf(e), 1.0).unwrap();
        assert!(r.ratio < 1.0);
        assert!(r.ratio >= last - 1e-12, "e={e}");
        last = r.ratio;
    }
    assert!(last > 0.97);
}

#[test]
fn entropy_examples() {
    let d = entropy_asymptotics_check(1e-4).unwrap();
    assert!((d.small_x_ratio - 1.0).abs() < 0.05);
    assert_eq!(d.minorant_violations, 0);
    assert!(d.minorant_points > 1000);
    // At x = 100p the (1+o(1)) correction is still about 20%.
    assert!(d.large_x_ratio > 0.75 && d.large_x_ratio < 0.85);
    assert!(entropy_asymptotics_check(0.05).is_err());
    assert!(entropy_asymptotics_check(0.0).is_err());
}

// I_p(p + cp) / (cp log c) tends to (c+1)ln(c+1) - c over c ln c as p -> 0, so
// the large-x form needs x/p -> infinity rather than small p.
#[test]
fn large_x_ratio_depends_on_x_over_p() {
    let limit = (101.0 * 101f64.ln() - 100.0) / (100.0 * 100f64.ln());
    for p in [1e-4, 1e-6, 1e-9] {
        let d = entropy_asymptotics_check(p).unwrap();
        assert!(
            (d.large_x_ratio - limit).abs() < 2e-3,
            "p={p}: {}",
            d.large_x_ratio
        );
    }
    let p = 1e-12;
    let mut last = 0.0;
    for c in [1e2, 1e4, 1e6, 1e8, 1e10] {
        let x = c * p;
        let r = c4tail::rates::relative_entropy(p + x, p).unwrap() / (x * c.ln());
        assert!(r > last);
        last = r;
    }
    assert!(last > 0.95);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plant_valued_q_matches_kernel(n in 4usize..=8, mask in any::<u64>(), p in 0.05f64..0.9) {
        let pairs = choose2(n);
        let mut q = EdgeWeightVector::constant(n, p);
        let mut plant = SimpleGraph::new(n);
        for idx in 0..pairs {
            if mask >> idx & 1 == 1 {
                let (a, b) = edge_from_index(idx);
                q.set(a, b, 1.0);
                plant.add_edge(a, b).unwrap();
            }
        }
        let want = conditioned_expectation_c4(&plant, n, p).unwrap();
        prop_assert!((inhomogeneous_c4_expectation(&q) - want).abs() <= 1e-12 * want.max(1.0));
        prop_assert_eq!(q.get(0, 1), q.q[edge_index(0, 1)]);
    }
}
