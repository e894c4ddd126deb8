//! Simple graphs, induced 4-vertex pattern counts and the exhaustive tail oracle.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::varsolve::MassVector;

/// Colex index of the pair `{i, j}`: `j(j-1)/2 + i` for `i < j`.
#[inline]
pub fn edge_index(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    b * (b - 1) / 2 + a
}

/// Inverse of [`edge_index`].
pub fn edge_from_index(idx: usize) -> (usize, usize) {
    let mut b = ((((8 * idx + 1) as f64).sqrt() + 1.0) / 2.0) as usize;
    while b * (b - 1) / 2 > idx {
        b -= 1;
    }
    while (b + 1) * b / 2 <= idx {
        b += 1;
    }
    (idx - b * (b - 1) / 2, b)
}

#[inline]
pub fn choose2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Binomial coefficient as a float; exact for the small arguments used in counting.
pub fn binom_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Undirected simple graph on vertices `0..n` with bitset adjacency rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SimpleGraph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
    m: usize,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        SimpleGraph {
            n,
            words,
            adj: vec![0; n * words],
            m: 0,
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = SimpleGraph::new(n);
        for &(u, v) in edges {
            if !g.add_edge(u, v)? {
                return domain(format!("duplicate edge ({u}, {v})"));
            }
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = SimpleGraph::new(n);
        for j in 1..n {
            for i in 0..j {
                g.insert(i, j);
            }
        }
        g
    }

    /// `K_{s,t}` with sides `0..s` and `s..s+t`.
    pub fn complete_bipartite(s: usize, t: usize) -> Self {
        let mut g = SimpleGraph::new(s + t);
        for a in 0..s {
            for b in s..s + t {
                g.insert(a, b);
            }
        }
        g
    }

    /// The cycle `0-1-...-(len-1)-0` padded with isolated vertices up to `n`.
    pub fn cycle(len: usize, n: usize) -> Self {
        assert!(len >= 3 && len <= n);
        let mut g = SimpleGraph::new(n);
        for i in 0..len {
            g.insert(i, (i + 1) % len);
        }
        g
    }

    /// Graph on `n <= 11` vertices from a colex edge bitmask.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut g = SimpleGraph::new(n);
        let mut bits = mask;
        while bits != 0 {
            let idx = bits.trailing_zeros() as usize;
            let (i, j) = edge_from_index(idx);
            g.insert(i, j);
            bits &= bits - 1;
        }
        g
    }

    /// Colex edge bitmask; requires `C(n,2) <= 64`.
    pub fn to_mask(&self) -> u64 {
        assert!(choose2(self.n) <= 64, "graph too large for a 64-bit mask");
        self.edges()
            .into_iter()
            .fold(0u64, |acc, (i, j)| acc | 1u64 << edge_index(i, j))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    fn insert(&mut self, u: usize, v: usize) {
        if !self.has_edge(u, v) {
            self.adj[u * self.words + v / 64] |= 1 << (v % 64);
            self.adj[v * self.words + u / 64] |= 1 << (u % 64);
            self.m += 1;
        }
    }

    /// Adds `{u, v}`; returns `false` if it was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        if u == v {
            return domain(format!("loop at vertex {u}"));
        }
        if u >= self.n || v >= self.n {
            return domain(format!("edge ({u}, {v}) out of range for n = {}", self.n));
        }
        let fresh = !self.has_edge(u, v);
        self.insert(u, v);
        Ok(fresh)
    }

    /// Removes `{u, v}`; returns `false` if it was absent.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if !self.has_edge(u, v) {
            return false;
        }
        self.adj[u * self.words + v / 64] &= !(1 << (v % 64));
        self.adj[v * self.words + u / 64] &= !(1 << (u % 64));
        self.m -= 1;
        true
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    #[inline]
    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.has_edge(v, u)).collect()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Vertices of nonzero degree.
    pub fn non_isolated(&self) -> usize {
        (0..self.n).filter(|&v| self.degree(v) > 0).count()
    }

    /// Copy with isolated vertices appended up to `n`.
    pub fn padded(&self, n: usize) -> Self {
        assert!(n >= self.n);
        let mut g = SimpleGraph::new(n);
        for (u, v) in self.edges() {
            g.insert(u, v);
        }
        g
    }

    /// Edge-list text: `n m` followed by one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.m);
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let (n, m) = parse_pair(header)?;
        let mut g = SimpleGraph::new(n);
        let mut read = 0;
        for line in lines {
            let (u, v) = parse_pair(line)?;
            if !g.add_edge(u, v).map_err(|e| Error::Parse(e.to_string()))? {
                return Err(Error::Parse(format!("duplicate edge ({u}, {v})")));
            }
            read += 1;
        }
        if read != m {
            return Err(Error::Parse(format!(
                "header announces {m} edges, found {read}"
            )));
        }
        Ok(g)
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(usize::from_str);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::Parse(format!("expected two integers, got {line:?}"))),
    }
}

impl FromStr for SimpleGraph {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SimpleGraph::parse_edge_list(s)
    }
}

impl fmt::Debug for SimpleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimpleGraph(n={}, edges={:?})", self.n, self.edges())
    }
}

impl fmt::Display for SimpleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}

impl Serialize for SimpleGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            n: usize,
            edges: Vec<(usize, usize)>,
        }
        Repr {
            n: self.n,
            edges: self.edges(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimpleGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            n: usize,
            edges: Vec<(usize, usize)>,
        }
        let r = Repr::deserialize(d)?;
        SimpleGraph::from_edges(r.n, &r.edges).map_err(serde::de::Error::custom)
    }
}

/// The induced patterns the library counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    C4,
    P4,
    M2,
    K12K1,
    K2TwoK1,
    K12,
    K2,
}

impl Pattern {
    pub const ALL: [Pattern; 7] = [
        Pattern::C4,
        Pattern::P4,
        Pattern::M2,
        Pattern::K12K1,
        Pattern::K2TwoK1,
        Pattern::K12,
        Pattern::K2,
    ];

    pub fn vertex_count(self) -> usize {
        match self {
            Pattern::K12 => 3,
            Pattern::K2 => 2,
            _ => 4,
        }
    }

    pub fn edge_count(self) -> usize {
        match self {
            Pattern::C4 => 4,
            Pattern::P4 => 3,
            Pattern::M2 | Pattern::K12K1 | Pattern::K12 => 2,
            Pattern::K2TwoK1 | Pattern::K2 => 1,
        }
    }

    /// Whether the graph induced on `verts` is isomorphic to this pattern.
    pub fn matches(self, g: &SimpleGraph, verts: &[usize]) -> bool {
        debug_assert_eq!(verts.len(), self.vertex_count());
        let k = verts.len();
        let mut deg = [0u8; 4];
        let mut e = 0;
        for a in 0..k {
            for b in a + 1..k {
                if g.has_edge(verts[a], verts[b]) {
                    deg[a] += 1;
                    deg[b] += 1;
                    e += 1;
                }
            }
        }
        if e != self.edge_count() {
            return false;
        }
        let mut d = deg;
        d[..k].sort_unstable();
        match self {
            Pattern::C4 => d == [2, 2, 2, 2],
            Pattern::P4 => d == [1, 1, 2, 2],
            Pattern::M2 => d == [1, 1, 1, 1],
            Pattern::K12K1 => d == [0, 1, 1, 2],
            Pattern::K2TwoK1 | Pattern::K12 | Pattern::K2 => true,
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "c4" => Pattern::C4,
            "p4" => Pattern::P4,
            "m2" => Pattern::M2,
            "k12k1" | "k12_k1" => Pattern::K12K1,
            "k22k1" | "k2_2k1" => Pattern::K2TwoK1,
            "k12" => Pattern::K12,
            "k2" => Pattern::K2,
            other => return Err(Error::Parse(format!("unknown pattern {other:?}"))),
        })
    }
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Number of vertex subsets inducing `pat` (subset convention).
pub fn count_induced(g: &SimpleGraph, pat: Pattern) -> Result<u64> {
    if pat.vertex_count() > g.n() {
        return domain(format!(
            "pattern {pat:?} has {} vertices but the graph has {}",
            pat.vertex_count(),
            g.n()
        ));
    }
    Ok(match pat {
        Pattern::K2 => g.edge_count() as u64,
        Pattern::C4 => count_c4(g),
        _ => {
            let mut c = 0u64;
            for_each_subset(g.n(), pat.vertex_count(), |s| {
                if pat.matches(g, s) {
                    c += 1;
                }
            });
            c
        }
    })
}

// Each induced C4 has two diagonals; counting via common neighbourhoods of
// non-adjacent pairs sees every copy exactly twice.
fn count_c4(g: &SimpleGraph) -> u64 {
    let n = g.n();
    let mut twice = 0u64;
    let mut common = Vec::with_capacity(n);
    for a in 0..n {
        for c in a + 1..n {
            if g.has_edge(a, c) {
                continue;
            }
            common.clear();
            let (ra, rc) = (g.row(a), g.row(c));
            for w in 0..g.words {
                let mut bits = ra[w] & rc[w];
                while bits != 0 {
                    common.push(w * 64 + bits.trailing_zeros() as usize);
                    bits &= bits - 1;
                }
            }
            for x in 0..common.len() {
                for y in x + 1..common.len() {
                    if !g.has_edge(common[x], common[y]) {
                        twice += 1;
                    }
                }
            }
        }
    }
    twice / 2
}

/// Induced copies of `pat` that use the edge `e` as a pattern edge.
pub fn count_induced_at_edge(g: &SimpleGraph, e: (usize, usize), pat: Pattern) -> Result<u64> {
    let (u, v) = e;
    if !g.has_edge(u, v) {
        return domain(format!("({u}, {v}) is not an edge of the graph"));
    }
    if pat.vertex_count() > g.n() {
        return domain(format!("pattern {pat:?} larger than the graph"));
    }
    let others: Vec<usize> = (0..g.n()).filter(|&w| w != u && w != v).collect();
    let extra = pat.vertex_count() - 2;
    let mut c = 0u64;
    let mut verts = vec![u, v, 0, 0];
    verts.truncate(pat.vertex_count());
    for_each_subset(others.len(), extra, |s| {
        for (slot, &i) in s.iter().enumerate() {
            verts[2 + slot] = others[i];
        }
        if pat.matches(g, &verts) {
            c += 1;
        }
    });
    Ok(c)
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return domain(format!("probability {p} outside [0, 1]"));
    }
    Ok(())
}

/// `E[X] = 3 C(n,4) p^4 (1-p)^2`.
pub fn expected_induced_c4(n: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(3.0 * binom_f64(n as u64, 4) * p.powi(4) * (1.0 - p).powi(2))
}

/// The three cycle pairings of a sorted 4-set `[a, b, c, d]`, as
/// (cycle edges, diagonals) over positions.
pub const PAIRINGS: [([(usize, usize); 4], [(usize, usize); 2]); 3] = [
    ([(0, 1), (1, 2), (2, 3), (0, 3)], [(0, 2), (1, 3)]),
    ([(0, 1), (1, 3), (2, 3), (0, 2)], [(0, 3), (1, 2)]),
    ([(0, 2), (1, 2), (1, 3), (0, 3)], [(0, 1), (2, 3)]),
];

/// `sum over pairings of prod(cycle w) * prod(1 - diagonal w)` for one 4-set,
/// given its six pair weights indexed by position pair.
#[inline]
pub fn quad_c4_weight(w: &dyn Fn(usize, usize) -> f64) -> f64 {
    PAIRINGS
        .iter()
        .map(|(cyc, dia)| {
            cyc.iter().map(|&(a, b)| w(a, b)).product::<f64>()
                * dia.iter().map(|&(a, b)| 1.0 - w(a, b)).product::<f64>()
        })
        .sum()
}

/// Expected induced-C4 count in `K_n` when pairs inside `touched` carry
/// weight `w(u, v)` and every other pair carries `p`.
///
/// Vertices outside `touched` are interchangeable, so each 4-set is grouped
/// by its intersection with `touched`; the cost is polynomial in `|touched|`
/// only.
pub fn expectation_with_plant(
    n: usize,
    p: f64,
    touched: &[usize],
    w: &dyn Fn(usize, usize) -> f64,
) -> f64 {
    let v = touched.len();
    assert!(v <= n);
    let outside = (n - v) as u64;
    let mut total = 0.0;
    for j in 0..=4.min(v) {
        let mult = binom_f64(outside, 4 - j as u64);
        if mult == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for_each_subset(v, j, |s| {
            let verts: Vec<Option<usize>> =
                (0..4).map(|pos| s.get(pos).map(|&i| touched[i])).collect();
            let weight = |a: usize, b: usize| match (verts[a], verts[b]) {
                (Some(x), Some(y)) => w(x, y),
                _ => p,
            };
            acc += quad_c4_weight(&weight);
        });
        total += mult * acc;
    }
    total
}

/// `E[X | plant ⊆ G(n,p)]` with the plant labelled on vertices `0..plant.n()`.
pub fn conditioned_expectation_c4(plant: &SimpleGraph, n: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    if plant.n() > n {
        return domain(format!(
            "plant has {} vertices but the host has {n}",
            plant.n()
        ));
    }
    let touched: Vec<usize> = (0..plant.n()).collect();
    Ok(expectation_with_plant(n, p, &touched, &|a, b| {
        if plant.has_edge(a, b) {
            1.0
        } else {
            p
        }
    }))
}

/// Per-4-set cycle masks for graphs stored as colex bitmasks (`n <= 11`).
#[derive(Clone, Debug)]
pub struct C4MaskTable {
    n: usize,
    quads: Vec<(u64, [u64; 3])>,
}

impl C4MaskTable {
    pub fn new(n: usize) -> Result<Self> {
        if choose2(n) > 64 {
            return Err(Error::Budget(format!(
                "mask counting needs n <= 11, got {n}"
            )));
        }
        let mut quads = Vec::new();
        for_each_subset(n, 4, |s| {
            let bit = |a: usize, b: usize| 1u64 << edge_index(s[a], s[b]);
            let all = PAIRINGS[0].0.iter().chain(PAIRINGS[0].1.iter());
            let mask = all.fold(0, |acc, &(a, b)| acc | bit(a, b));
            let mut pats = [0u64; 3];
            for (k, (cyc, _)) in PAIRINGS.iter().enumerate() {
                pats[k] = cyc.iter().fold(0, |acc, &(a, b)| acc | bit(a, b));
            }
            quads.push((mask, pats));
        });
        Ok(C4MaskTable { n, quads })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn count(&self, g: u64) -> u32 {
        let mut c = 0;
        for (mask, pats) in &self.quads {
            let s = g & mask;
            c += (s == pats[0] || s == pats[1] || s == pats[2]) as u32;
        }
        c
    }
}

/// Number of labelled graphs on `n` vertices by (edge count, induced-C4 count).
#[derive(Clone, Debug)]
pub struct CountHistogram {
    pub n: usize,
    /// `cells[e][x]`
    pub cells: Vec<Vec<u64>>,
}

impl CountHistogram {
    pub const MAX_N: usize = 7;

    pub fn build(n: usize) -> Result<Self> {
        if n > Self::MAX_N {
            return Err(Error::Budget(format!(
                "exhaustive enumeration supports n <= {}, got {n}",
                Self::MAX_N
            )));
        }
        let table = C4MaskTable::new(n)?;
        let big_n = choose2(n);
        let xmax = binom_f64(n as u64, 4) as usize * 3;
        let total: u64 = 1 << big_n;
        let chunk: u64 = 1 << 14;
        let chunks = total.div_ceil(chunk);
        let empty = || vec![vec![0u64; xmax + 1]; big_n + 1];
        let cells = (0..chunks)
            .into_par_iter()
            .fold(empty, |mut acc, c| {
                let hi = ((c + 1) * chunk).min(total);
                for g in c * chunk..hi {
                    acc[g.count_ones() as usize][table.count(g) as usize] += 1;
                }
                acc
            })
            .reduce(empty, |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            });
        Ok(CountHistogram { n, cells })
    }

    pub fn graphs(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    /// Largest induced-C4 count over all graphs on `n` vertices.
    pub fn max_count(&self) -> u64 {
        let mut best = 0;
        for row in &self.cells {
            for (x, &c) in row.iter().enumerate() {
                if c > 0 {
                    best = best.max(x as u64);
                }
            }
        }
        best
    }

    /// `P(X >= threshold)` in `G(n, p)`.
    pub fn tail(&self, p: f64, threshold: f64) -> f64 {
        let big_n = self.cells.len() - 1;
        let mut prob = 0.0;
        for (e, row) in self.cells.iter().enumerate() {
            let qualifying: u64 = row
                .iter()
                .enumerate()
                .filter(|(x, _)| *x as f64 >= threshold)
                .map(|(_, &c)| c)
                .sum();
            if qualifying > 0 {
                prob += qualifying as f64 * pow0(p, e) * pow0(1.0 - p, big_n - e);
            }
        }
        prob.clamp(0.0, 1.0)
    }
}

// 0^0 = 1 so that p in {0, 1} behaves.
#[inline]
fn pow0(x: f64, e: usize) -> f64 {
    if e == 0 {
        1.0
    } else {
        x.powi(e as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailOracleResult {
    pub threshold: f64,
    pub probability: f64,
    pub graphs_enumerated: u64,
}

/// Exact `P(X >= threshold)` by enumerating all `2^C(n,2)` labelled graphs.
pub fn exact_tail_probability(n: usize, p: f64, threshold: f64) -> Result<TailOracleResult> {
    check_p(p)?;
    let h = CountHistogram::build(n)?;
    Ok(TailOracleResult {
        threshold,
        probability: h.tail(p, threshold),
        graphs_enumerated: h.graphs(),
    })
}

/// Edge masses by degree class of the lower-degree endpoint, plus whether
/// the vertices of degree at most `r` form an independent set.
pub fn degree_class_profile(g: &SimpleGraph, r: usize) -> Result<(MassVector, bool)> {
    if r < 2 {
        return domain(format!("R must be at least 2, got {r}"));
    }
    let deg = g.degrees();
    let mut x = MassVector::zeros(r);
    let mut independent = true;
    for (u, v) in g.edges() {
        let d = deg[u].min(deg[v]);
        let class = if d <= r { d } else { r + 1 };
        x.add(class, 1.0);
        if deg[u] <= r && deg[v] <= r {
            independent = false;
        }
    }
    Ok((x, independent))
}
