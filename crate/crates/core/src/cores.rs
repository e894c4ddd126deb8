//! Seeds, structured seeds, cores and the core-extraction procedure.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::extremal::enumerate_graphs;
use crate::graph::{
    conditioned_expectation_c4, count_induced, count_induced_at_edge, expected_induced_c4, Pattern,
    SimpleGraph,
};
use crate::rates::phi_bounds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreParams {
    pub eps: f64,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub n: usize,
    pub p: f64,
    pub phi_hat: f64,
}

impl CoreParams {
    /// Uses the upper end of the `Φ_X(δ+ε)` bracket as `phi_hat`.
    pub fn with_default_phi(eps: f64, delta: f64, k: f64, n: usize, p: f64) -> Result<Self> {
        let (_, upper, _) = phi_bounds(n, p, delta + eps, eps)?;
        let params = CoreParams {
            eps,
            delta,
            k,
            n,
            p,
            phi_hat: upper,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < self.delta) {
            return domain(format!(
                "need 0 < eps < delta, got eps = {}, delta = {}",
                self.eps, self.delta
            ));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return domain(format!("p must lie in (0, 1), got {}", self.p));
        }
        if !(self.phi_hat > 0.0 && self.k > 0.0) {
            return domain("phi_hat and K must be positive");
        }
        Ok(())
    }

    pub fn expected(&self) -> f64 {
        expected_induced_c4(self.n, self.p).unwrap_or(0.0)
    }

    fn size_ok(&self, g: &SimpleGraph) -> bool {
        g.edge_count() as f64 <= self.k * self.phi_hat
    }

    /// Per-edge threshold `ε E[X] / (2 K phi_hat)`.
    pub fn edge_threshold(&self) -> f64 {
        self.eps * self.expected() / (2.0 * self.k * self.phi_hat)
    }
}

/// `N(G) = N_ind(C4, G) + N_ind(K_{1,2} ⊔ K_1, G) p^2`.
pub fn n_score(g: &SimpleGraph, p: f64) -> f64 {
    let c4 = count_induced(g, Pattern::C4).unwrap_or(0) as f64;
    let k = count_induced(g, Pattern::K12K1).unwrap_or(0) as f64;
    c4 + k * p * p
}

/// Share of `N(G)` carried by the edge `e`.
pub fn edge_score(g: &SimpleGraph, e: (usize, usize), p: f64) -> Result<f64> {
    if !g.has_edge(e.0, e.1) {
        return domain(format!("({}, {}) is not an edge of the graph", e.0, e.1));
    }
    let c4 = if g.n() >= 4 {
        count_induced_at_edge(g, e, Pattern::C4)?
    } else {
        0
    };
    let k = if g.n() >= 4 {
        count_induced_at_edge(g, e, Pattern::K12K1)?
    } else {
        0
    };
    Ok(c4 as f64 + k as f64 * p * p)
}

pub fn is_seed(g: &SimpleGraph, params: &CoreParams) -> Result<bool> {
    if g.n() > params.n {
        return domain(format!(
            "graph has {} vertices, host has {}",
            g.n(),
            params.n
        ));
    }
    let ex = params.expected();
    Ok(params.size_ok(g)
        && conditioned_expectation_c4(g, params.n, params.p)?
            >= (1.0 + params.delta - params.eps) * ex)
}

pub fn is_structured_seed(g: &SimpleGraph, params: &CoreParams) -> bool {
    params.size_ok(g) && n_score(g, params.p) >= (params.delta - params.eps) * params.expected()
}

pub fn is_core(g: &SimpleGraph, params: &CoreParams) -> bool {
    if !is_structured_seed(g, params) {
        return false;
    }
    let t = params.edge_threshold();
    g.edges()
        .into_iter()
        .all(|e| edge_score(g, e, params.p).is_ok_and(|s| s >= t))
}

/// Deletes, one at a time, the lexicographically smallest edge whose removal
/// lowers `N` by less than `s / e(G)` (with `e(G)` the original edge count).
pub fn extract_core(g: &SimpleGraph, s: f64, p: f64) -> Result<SimpleGraph> {
    if !(s >= 0.0) {
        return domain(format!("s must be nonnegative, got {s}"));
    }
    let e0 = g.edge_count();
    if e0 == 0 {
        return Ok(g.clone());
    }
    let cut = s / e0 as f64;
    let mut cur = g.clone();
    let mut score = n_score(&cur, p);
    'outer: loop {
        for (u, v) in cur.edges() {
            let mut next = cur.clone();
            next.remove_edge(u, v);
            let next_score = n_score(&next, p);
            if score - next_score < cut {
                cur = next;
                score = next_score;
                continue 'outer;
            }
        }
        return Ok(cur);
    }
}

/// Smallest deletion drop over the edges of `g` (`+∞` for edgeless graphs).
pub fn min_deletion_drop(g: &SimpleGraph, p: f64) -> f64 {
    let base = n_score(g, p);
    g.edges()
        .into_iter()
        .map(|(u, v)| {
            let mut h = g.clone();
            h.remove_edge(u, v);
            base - n_score(&h, p)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreReport {
    pub n: usize,
    pub m: usize,
    pub count: usize,
    pub v_max: usize,
    /// `m/2 + m^{3/4}`.
    pub v_bound: f64,
    pub v_bound_holds: bool,
    pub examples: Vec<SimpleGraph>,
}

/// Isomorphism classes of `n`-vertex, `m`-edge cores.
pub fn enumerate_cores(n: usize, m: usize, params: &CoreParams) -> Result<CoreReport> {
    params.validate()?;
    if n > 8 || m > 12 {
        return Err(Error::Budget(format!(
            "core census supports n <= 8 and m <= 12, got n = {n}, m = {m}"
        )));
    }
    let cores: Vec<SimpleGraph> = enumerate_graphs(n, m, 0)?
        .into_iter()
        .filter(|g| is_core(g, params))
        .collect();
    let v_max = cores
        .iter()
        .map(SimpleGraph::non_isolated)
        .max()
        .unwrap_or(0);
    let v_bound = m as f64 / 2.0 + (m as f64).powf(0.75);
    Ok(CoreReport {
        n,
        m,
        count: cores.len(),
        v_max,
        v_bound,
        v_bound_holds: v_max as f64 <= v_bound,
        examples: cores.into_iter().take(16).collect(),
    })
}
