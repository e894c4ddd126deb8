use approx::assert_relative_eq;
use c4tail::graph::*;
use c4tail::{Error, Pattern, SimpleGraph};
use proptest::prelude::*;

// Pattern templates on vertices 0..k, matched by trying every relabelling.
fn template(p: Pattern) -> (usize, Vec<(usize, usize)>) {
    match p {
        Pattern::C4 => (4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]),
        Pattern::P4 => (4, vec![(0, 1), (1, 2), (2, 3)]),
        Pattern::M2 => (4, vec![(0, 1), (2, 3)]),
        Pattern::K12K1 => (4, vec![(0, 1), (0, 2)]),
        Pattern::K2TwoK1 => (4, vec![(0, 1)]),
        Pattern::K12 => (3, vec![(0, 1), (0, 2)]),
        Pattern::K2 => (2, vec![(0, 1)]),
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for perm in permutations(k - 1) {
        for pos in 0..=perm.len() {
            let mut q = perm.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

fn induces(g: &SimpleGraph, s: &[usize], pat: Pattern) -> bool {
    let (k, edges) = template(pat);
    permutations(k).iter().any(|perm| {
        (0..k).all(|a| {
            (a + 1..k).all(|b| {
                let want =
                    edges.contains(&(a.min(b), a.max(b))) || edges.contains(&(b.min(a), b.max(a)));
                let (x, y) = (s[perm[a]], s[perm[b]]);
                g.has_edge(x, y) == want
            })
        })
    })
}

fn brute_count(g: &SimpleGraph, pat: Pattern) -> u64 {
    let (k, _) = template(pat);
    subsets(g.n(), k)
        .iter()
        .filter(|s| induces(g, s, pat))
        .count() as u64
}

fn brute_count_at(g: &SimpleGraph, e: (usize, usize), pat: Pattern) -> u64 {
    let (k, _) = template(pat);
    subsets(g.n(), k)
        .iter()
        .filter(|s| s.contains(&e.0) && s.contains(&e.1) && induces(g, s, pat))
        .count() as u64
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = SimpleGraph> {
    (4..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), choose2(n)).prop_map(move |bits| {
            let mut g = SimpleGraph::new(n);
            for (idx, b) in bits.into_iter().enumerate() {
                if b {
                    let (i, j) = edge_from_index(idx);
                    g.add_edge(i, j).unwrap();
                }
            }
            g
        })
    })
}

fn star_plus_isolated() -> SimpleGraph {
    SimpleGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3)]).unwrap()
}

#[test]
fn count_examples() {
    assert_eq!(
        count_induced(&SimpleGraph::cycle(4, 4), Pattern::C4).unwrap(),
        1
    );
    assert_eq!(
        count_induced(&SimpleGraph::complete_bipartite(2, 3), Pattern::C4).unwrap(),
        3
    );
    assert_eq!(
        count_induced(&SimpleGraph::complete(4), Pattern::C4).unwrap(),
        0
    );
    assert_eq!(
        count_induced(&star_plus_isolated(), Pattern::K12K1).unwrap(),
        3
    );
}

#[test]
fn pattern_larger_than_graph_is_domain_error() {
    let g = SimpleGraph::complete(3);
    assert!(matches!(
        count_induced(&g, Pattern::C4),
        Err(Error::Domain(_))
    ));
    assert_eq!(count_induced(&g, Pattern::K12).unwrap(), 0);
}

#[test]
fn count_at_edge_examples() {
    let c4 = SimpleGraph::cycle(4, 4);
    assert_eq!(count_induced_at_edge(&c4, (0, 1), Pattern::C4).unwrap(), 1);
    let k23 = SimpleGraph::complete_bipartite(2, 3);
    for e in k23.edges() {
        assert_eq!(count_induced_at_edge(&k23, e, Pattern::C4).unwrap(), 2);
    }
    let k4 = SimpleGraph::complete(4);
    assert_eq!(count_induced_at_edge(&k4, (0, 2), Pattern::C4).unwrap(), 0);
    assert!(matches!(
        count_induced_at_edge(&c4, (0, 2), Pattern::C4),
        Err(Error::Domain(_))
    ));
}

#[test]
fn complete_bipartite_counts() {
    for s in 2..=6u64 {
        for t in 2..=6u64 {
            let g = SimpleGraph::complete_bipartite(s as usize, t as usize);
            let want = s * (s - 1) / 2 * (t * (t - 1) / 2);
            assert_eq!(count_induced(&g, Pattern::C4).unwrap(), want);
            if s + t <= 8 {
                assert_eq!(brute_count(&g, Pattern::C4), want);
            }
        }
    }
}

#[test]
fn expectation_matches_brute_force_at_n4() {
    let mut total = 0.0;
    for mask in 0u64..64 {
        let g = SimpleGraph::from_mask(4, mask);
        let x = count_induced(&g, Pattern::C4).unwrap() as f64;
        total += x * 0.5f64.powi(6);
    }
    assert_relative_eq!(total, 0.046875, max_relative = 1e-15);
    assert_relative_eq!(
        expected_induced_c4(4, 0.5).unwrap(),
        3.0 / 64.0,
        max_relative = 1e-15
    );
    assert_eq!(expected_induced_c4(3, 0.5).unwrap(), 0.0);
    assert_eq!(expected_induced_c4(10, 0.0).unwrap(), 0.0);
    assert_eq!(expected_induced_c4(10, 1.0).unwrap(), 0.0);
    assert!(matches!(expected_induced_c4(5, 1.5), Err(Error::Domain(_))));
}

#[test]
fn conditioned_expectation_examples() {
    let (n, p) = (9, 0.3);
    let empty = SimpleGraph::new(0);
    assert_relative_eq!(
        conditioned_expectation_c4(&empty, n, p).unwrap(),
        expected_induced_c4(n, p).unwrap(),
        max_relative = 1e-12
    );
    assert_eq!(
        conditioned_expectation_c4(&SimpleGraph::complete(n), n, p).unwrap(),
        0.0
    );
    let c4 = SimpleGraph::cycle(4, 4);
    assert_relative_eq!(
        conditioned_expectation_c4(&c4, 4, 0.5).unwrap(),
        0.25,
        max_relative = 1e-15
    );
}

// E[X | plant ⊆ G] by summing over every supergraph of the plant.
fn conditional_enumeration(plant: &SimpleGraph, n: usize, p: f64) -> f64 {
    let base = plant.padded(n).to_mask();
    let free: Vec<usize> = (0..choose2(n)).filter(|i| base >> i & 1 == 0).collect();
    let table = C4MaskTable::new(n).unwrap();
    let mut acc = 0.0;
    for sub in 0u64..1 << free.len() {
        let mut g = base;
        let mut ones = 0;
        for (k, &idx) in free.iter().enumerate() {
            if sub >> k & 1 == 1 {
                g |= 1 << idx;
                ones += 1;
            }
        }
        let w = p.powi(ones) * (1.0 - p).powi(free.len() as i32 - ones);
        acc += w * table.count(g) as f64;
    }
    acc
}

#[test]
fn conditioned_expectation_matches_conditional_enumeration() {
    for n in 4..=5 {
        for mask in 0u64..1 << choose2(n) {
            let plant = SimpleGraph::from_mask(n, mask);
            for &p in &[0.3, 0.71] {
                let got = conditioned_expectation_c4(&plant, n, p).unwrap();
                let want = conditional_enumeration(&plant, n, p);
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "{plant:?} p={p}: {got} vs {want}"
                );
            }
        }
    }
    // Plants on fewer vertices than the host.
    let plant = SimpleGraph::cycle(4, 4);
    let got = conditioned_expectation_c4(&plant, 6, 0.4).unwrap();
    assert_relative_eq!(
        got,
        conditional_enumeration(&plant, 6, 0.4),
        max_relative = 1e-12
    );
}

#[test]
fn exact_tail_examples() {
    let r = exact_tail_probability(4, 0.5, 1.0).unwrap();
    assert_relative_eq!(r.probability, 3.0 / 64.0, max_relative = 1e-14);
    assert_eq!(r.graphs_enumerated, 64);
    assert_eq!(
        exact_tail_probability(4, 0.5, 2.0).unwrap().probability,
        0.0
    );
    for n in 4..=6 {
        assert_relative_eq!(
            exact_tail_probability(n, 0.3, 0.0).unwrap().probability,
            1.0,
            max_relative = 1e-12
        );
    }
    assert!(matches!(
        exact_tail_probability(8, 0.5, 1.0),
        Err(Error::Budget(_))
    ));
}

#[test]
fn exact_tail_is_monotone_in_threshold() {
    let h = CountHistogram::build(6).unwrap();
    assert_eq!(h.graphs(), 1 << 15);
    let mut last = 1.0 + 1e-12;
    for t in 0..=(h.max_count() + 1) {
        let v = h.tail(0.37, t as f64);
        assert!(v <= last);
        last = v;
    }
    assert_eq!(last, 0.0);
}

#[test]
fn degree_profile_examples() {
    let (x, flag) = degree_class_profile(&SimpleGraph::cycle(4, 4), 3).unwrap();
    assert_eq!(x.get(2), 4.0);
    assert_eq!(x.total(), 4.0);
    assert!(!flag);

    let (x, flag) = degree_class_profile(&SimpleGraph::complete_bipartite(2, 5), 3).unwrap();
    assert_eq!(x.get(2), 10.0);
    assert_eq!(x.get(3), 0.0);
    assert_eq!(x.get(4), 0.0);
    assert!(flag);

    let (x, flag) = degree_class_profile(&SimpleGraph::new(6), 4).unwrap();
    assert_eq!(x.total(), 0.0);
    assert!(flag);
    assert!(matches!(
        degree_class_profile(&SimpleGraph::new(3), 1),
        Err(Error::Domain(_))
    ));
}

#[test]
fn edge_list_round_trip() {
    let g = SimpleGraph::complete_bipartite(2, 3);
    let text = g.to_edge_list();
    assert!(text.starts_with("5 6\n0 2\n"));
    assert_eq!(SimpleGraph::parse_edge_list(&text).unwrap(), g);
    assert!(SimpleGraph::parse_edge_list("3 2\n0 1\n").is_err());
    assert!(SimpleGraph::parse_edge_list("3 1\n0 0\n").is_err());
    assert!(SimpleGraph::parse_edge_list("3 1\n0 7\n").is_err());
}

#[test]
fn colex_indexing_round_trips() {
    for idx in 0..2000 {
        let (i, j) = edge_from_index(idx);
        assert!(i < j);
        assert_eq!(edge_index(i, j), idx);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_match_template_oracle(g in arb_graph(7)) {
        for pat in Pattern::ALL {
            prop_assert_eq!(count_induced(&g, pat).unwrap(), brute_count(&g, pat));
        }
    }

    #[test]
    fn edge_counts_match_template_oracle(g in arb_graph(6)) {
        for e in g.edges() {
            for pat in [Pattern::C4, Pattern::P4, Pattern::K12K1, Pattern::K12] {
                prop_assert_eq!(count_induced_at_edge(&g, e, pat).unwrap(), brute_count_at(&g, e, pat));
            }
        }
    }

    #[test]
    fn edge_counts_sum_to_four_per_cycle(g in arb_graph(9)) {
        let total: u64 = g.edges().into_iter()
            .map(|e| count_induced_at_edge(&g, e, Pattern::C4).unwrap())
            .sum();
        prop_assert_eq!(total, 4 * count_induced(&g, Pattern::C4).unwrap());
    }

    #[test]
    fn mask_counter_agrees(g in arb_graph(11)) {
        let table = C4MaskTable::new(g.n()).unwrap();
        prop_assert_eq!(table.count(g.to_mask()) as u64, count_induced(&g, Pattern::C4).unwrap());
    }

    #[test]
    fn profile_masses_sum_to_edges_when_independent(g in arb_graph(9), r in 2usize..6) {
        let (x, flag) = degree_class_profile(&g, r).unwrap();
        if flag {
            prop_assert_eq!(x.total() as usize, g.edge_count());
        }
    }
}
