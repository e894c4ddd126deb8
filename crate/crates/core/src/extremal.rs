//! Isomorphism-class enumeration and extremal bounds for induced C4 counts.

use std::collections::{HashMap, HashSet};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{
    choose2, count_induced, degree_class_profile, edge_index, Pattern, SimpleGraph,
};

/// Largest vertex count the enumerator accepts.
pub const MAX_ENUM_N: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalRecord {
    pub n: usize,
    pub m: usize,
    pub max_count: u64,
    pub witness: SimpleGraph,
}

fn adjacency_rows(n: usize, code: u64) -> Vec<u16> {
    let mut rows = vec![0u16; n];
    for j in 1..n {
        for i in 0..j {
            if code >> edge_index(i, j) & 1 == 1 {
                rows[i] |= 1 << j;
                rows[j] |= 1 << i;
            }
        }
    }
    rows
}

// Split every cell by neighbour counts into the other cells until stable.
fn refine(rows: &[u16], cells: &mut Vec<Vec<usize>>) {
    loop {
        let masks: Vec<u16> = cells
            .iter()
            .map(|c| c.iter().fold(0u16, |m, &v| m | 1 << v))
            .collect();
        let mut next = Vec::with_capacity(cells.len());
        for cell in cells.iter() {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut keyed: Vec<(Vec<u32>, usize)> = cell
                .iter()
                .map(|&v| {
                    let sig = masks.iter().map(|m| (rows[v] & m).count_ones()).collect();
                    (sig, v)
                })
                .collect();
            keyed.sort();
            let mut start = 0;
            for i in 1..=keyed.len() {
                if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                    next.push(keyed[start..i].iter().map(|(_, v)| *v).collect());
                    start = i;
                }
            }
        }
        let stable = next.len() == cells.len();
        *cells = next;
        if stable {
            return;
        }
    }
}

fn leaf_code(rows: &[u16], order: &[usize]) -> u64 {
    let mut code = 0u64;
    for j in 1..order.len() {
        for i in 0..j {
            if rows[order[i]] >> order[j] & 1 == 1 {
                code |= 1 << edge_index(i, j);
            }
        }
    }
    code
}

fn search(rows: &[u16], mut cells: Vec<Vec<usize>>, best: &mut u64) {
    refine(rows, &mut cells);
    let Some(pos) = cells.iter().position(|c| c.len() > 1) else {
        let order: Vec<usize> = cells.iter().map(|c| c[0]).collect();
        *best = (*best).min(leaf_code(rows, &order));
        return;
    };
    for &v in &cells[pos] {
        let mut branch = Vec::with_capacity(cells.len() + 1);
        branch.extend_from_slice(&cells[..pos]);
        branch.push(vec![v]);
        branch.push(cells[pos].iter().copied().filter(|&u| u != v).collect());
        branch.extend_from_slice(&cells[pos + 1..]);
        search(rows, branch, best);
    }
}

/// Canonical colex edge mask of the graph with edge mask `code` on `n <= 11`
/// vertices: the minimum over all leaves of an individualisation-refinement
/// search tree, so isomorphic inputs map to the same value.
pub fn canonical_code(n: usize, code: u64) -> u64 {
    assert!(n <= 11);
    if n <= 1 {
        return 0;
    }
    let rows = adjacency_rows(n, code);
    let mut best = u64::MAX;
    search(&rows, vec![(0..n).collect()], &mut best);
    best
}

pub fn canonical_form(g: &SimpleGraph) -> SimpleGraph {
    SimpleGraph::from_mask(g.n(), canonical_code(g.n(), g.to_mask()))
}

pub fn is_isomorphic(a: &SimpleGraph, b: &SimpleGraph) -> bool {
    a.n() == b.n()
        && a.edge_count() == b.edge_count()
        && canonical_code(a.n(), a.to_mask()) == canonical_code(b.n(), b.to_mask())
}

/// Canonical codes of all graphs on `n` vertices, level by level in the
/// edge count; levels are built by single-edge augmentation.
#[derive(Clone, Debug)]
pub struct GraphEnumerator {
    n: usize,
    levels: Vec<Vec<u64>>,
}

impl GraphEnumerator {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_ENUM_N {
            return Err(Error::Budget(format!(
                "graph enumeration supports n <= {MAX_ENUM_N}, got {n}"
            )));
        }
        Ok(GraphEnumerator {
            n,
            levels: vec![vec![0]],
        })
    }

    /// Sorted canonical codes of the `m`-edge classes.
    pub fn level(&mut self, m: usize) -> &[u64] {
        let slots = choose2(self.n);
        if m > slots {
            return &[];
        }
        while self.levels.len() <= m {
            let prev = self.levels.last().expect("level 0 exists");
            let mut seen = HashSet::new();
            for &code in prev {
                for idx in 0..slots {
                    if code >> idx & 1 == 0 {
                        seen.insert(canonical_code(self.n, code | 1 << idx));
                    }
                }
            }
            let mut next: Vec<u64> = seen.into_iter().collect();
            next.sort_unstable();
            self.levels.push(next);
        }
        &self.levels[m]
    }

    pub fn graphs(&mut self, m: usize, min_degree: usize) -> Vec<SimpleGraph> {
        let n = self.n;
        self.level(m)
            .iter()
            .map(|&c| SimpleGraph::from_mask(n, c))
            .filter(|g| n == 0 || g.min_degree() >= min_degree)
            .collect()
    }
}

fn cache() -> &'static Mutex<HashMap<usize, GraphEnumerator>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, GraphEnumerator>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// One representative per isomorphism class of `n`-vertex, `m`-edge graphs
/// with minimum degree at least `min_degree`, in canonical-code order.
pub fn enumerate_graphs(n: usize, m: usize, min_degree: usize) -> Result<Vec<SimpleGraph>> {
    if n > MAX_ENUM_N {
        return Err(Error::Budget(format!(
            "graph enumeration supports n <= {MAX_ENUM_N}, got {n}"
        )));
    }
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    let en = match guard.entry(n) {
        std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
        std::collections::hash_map::Entry::Vacant(v) => v.insert(GraphEnumerator::new(n)?),
    };
    Ok(en.graphs(m, min_degree))
}

pub fn max_induced_c4(n: usize, m: usize, min_degree: usize) -> Result<ExtremalRecord> {
    let mut best: Option<(u64, SimpleGraph)> = None;
    for g in enumerate_graphs(n, m, min_degree)? {
        let c = count_induced(&g, Pattern::C4).unwrap_or(0);
        if best.as_ref().is_none_or(|(b, _)| c > *b) {
            best = Some((c, g));
        }
    }
    let (max_count, witness) = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no graph with n = {n}, m = {m} and minimum degree >= {min_degree}"
        ))
    })?;
    Ok(ExtremalRecord {
        n,
        m,
        max_count,
        witness,
    })
}

/// `m(m-n+1)/4`, the induced-C4 bound for graphs of minimum degree 2.
pub fn bound_inducibility(n: usize, m: usize) -> Result<f64> {
    if m <= 3 {
        return domain(format!("the bound needs m > 3, got {m}"));
    }
    Ok(m as f64 * (m as f64 - n as f64 + 1.0) / 4.0)
}

/// `m n^2 / 8`, the induced `K_{1,2} ⊔ K_1` bound.
pub fn bound_k12k1(n: usize, m: usize) -> Result<f64> {
    if m > choose2(n) {
        return domain(format!("m = {m} exceeds C({n},2)"));
    }
    Ok(m as f64 * (n * n) as f64 / 8.0)
}

/// Degree-class upper bound on the induced C4 count of `g`, valid when the
/// vertices of degree at most `r` are independent.
pub fn degree_class_c4_bound(g: &SimpleGraph, r: usize) -> Result<f64> {
    let (x, independent) = degree_class_profile(g, r)?;
    if !independent {
        let deg = g.degrees();
        let (u, v) = g
            .edges()
            .into_iter()
            .find(|&(u, v)| deg[u] <= r && deg[v] <= r)
            .expect("flag false implies such an edge");
        return Err(Error::Precondition(format!(
            "vertices {u} and {v} both have degree <= {r} and are adjacent"
        )));
    }
    let e = g.edge_count() as f64;
    let rf = r as f64;
    let mut total = 0.0;
    for i in 2..=r {
        let xi = x.get(i);
        let fi = i as f64;
        let tail: f64 = (i + 1..=r).map(|j| x.get(j) / j as f64).sum();
        total += xi / fi * (fi * (fi - 1.0) / 2.0) * (tail + xi / (2.0 * fi));
        total += xi * e * (fi - 1.0) / rf;
    }
    let top = x.get(r + 1);
    Ok(total + top * top / 4.0)
}
