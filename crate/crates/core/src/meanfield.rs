//! Naive mean-field problem: minimise total relative entropy over
//! independent edge probabilities subject to the induced-C4 expectation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::graph::{choose2, edge_index, expected_induced_c4};
use crate::rates::{kl, regime_classify, rho_k, RegimeLabel};

/// Largest `n` the dense solver accepts.
pub const MAX_GENERAL_N: usize = 120;

/// Upper clip keeping `log(q/(1-q))` finite.
const Q_MAX: f64 = 1.0 - 1e-12;

/// Per-pair probabilities indexed in colex order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeWeightVector {
    pub n: usize,
    pub q: Vec<f64>,
}

impl EdgeWeightVector {
    pub fn constant(n: usize, value: f64) -> Self {
        EdgeWeightVector {
            n,
            q: vec![value; choose2(n)],
        }
    }

    pub fn from_vec(n: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != choose2(n) {
            return domain(format!("expected {} weights, got {}", choose2(n), q.len()));
        }
        if let Some(v) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return domain(format!("weight {v} outside [0, 1]"));
        }
        Ok(EdgeWeightVector { n, q })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[edge_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.q[edge_index(i, j)] = v;
    }

    pub fn cost(&self, p: f64) -> f64 {
        self.q.iter().map(|&x| kl(x, p)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Ansatz,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockParams {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanfieldSolution {
    pub n: usize,
    pub p: f64,
    pub delta: f64,
    pub q_star: EdgeWeightVector,
    pub cost: f64,
    pub constraint_value: f64,
    pub target: f64,
    pub method: Method,
    pub block: Option<BlockParams>,
}

impl MeanfieldSolution {
    /// Cost in units of `n^2 p^2 log(1/p)`.
    pub fn normalized_cost(&self) -> f64 {
        let nn = self.n as f64;
        self.cost / (nn * nn * self.p * self.p * -self.p.ln())
    }
}

// The three pairings of a 4-set a<b<c<d in terms of the pair weights
// (ab, ac, ad, bc, bd, cd); each is (cycle, diagonals).
const QUAD: [([usize; 4], [usize; 2]); 3] = [
    ([0, 3, 5, 2], [1, 4]),
    ([0, 4, 5, 1], [2, 3]),
    ([1, 3, 4, 2], [0, 5]),
];

#[inline]
fn quad_pairs(a: usize, b: usize, c: usize, d: usize) -> [usize; 6] {
    let cb = c * (c - 1) / 2;
    let db = d * (d - 1) / 2;
    [b * (b - 1) / 2 + a, cb + a, db + a, cb + b, db + b, db + c]
}

/// `Σ q q q q (1-q)(1-q)` over every 4-set and each of its three pairings.
pub fn inhomogeneous_c4_expectation(q: &EdgeWeightVector) -> f64 {
    let n = q.n;
    (3..n)
        .into_par_iter()
        .map(|d| {
            let mut s = 0.0;
            for c in 2..d {
                for b in 1..c {
                    for a in 0..b {
                        let idx = quad_pairs(a, b, c, d);
                        let w = idx.map(|i| q.q[i]);
                        for (cyc, dia) in QUAD {
                            s += w[cyc[0]]
                                * w[cyc[1]]
                                * w[cyc[2]]
                                * w[cyc[3]]
                                * (1.0 - w[dia[0]])
                                * (1.0 - w[dia[1]]);
                        }
                    }
                }
            }
            s
        })
        .sum()
}

/// The expectation together with its exact gradient.
pub fn c4_expectation_with_gradient(q: &EdgeWeightVector) -> (f64, Vec<f64>) {
    let n = q.n;
    let len = q.q.len();
    let (value, grad) = (3..n)
        .into_par_iter()
        .fold(
            || (0.0, vec![0.0; len]),
            |(mut s, mut g), d| {
                for c in 2..d {
                    for b in 1..c {
                        for a in 0..b {
                            let idx = quad_pairs(a, b, c, d);
                            let w = idx.map(|i| q.q[i]);
                            for (cyc, dia) in QUAD {
                                let (c0, c1, c2, c3) = (w[cyc[0]], w[cyc[1]], w[cyc[2]], w[cyc[3]]);
                                let (e0, e1) = (1.0 - w[dia[0]], 1.0 - w[dia[1]]);
                                let dd = e0 * e1;
                                let c01 = c0 * c1;
                                let c23 = c2 * c3;
                                let prod = c01 * c23;
                                s += prod * dd;
                                g[idx[cyc[0]]] += c1 * c23 * dd;
                                g[idx[cyc[1]]] += c0 * c23 * dd;
                                g[idx[cyc[2]]] += c01 * c3 * dd;
                                g[idx[cyc[3]]] += c01 * c2 * dd;
                                g[idx[dia[0]]] -= prod * e1;
                                g[idx[dia[1]]] -= prod * e0;
                            }
                        }
                    }
                }
                (s, g)
            },
        )
        .reduce(
            || (0.0, vec![0.0; len]),
            |(s1, mut g1), (s2, g2)| {
                for (x, y) in g1.iter_mut().zip(g2) {
                    *x += y;
                }
                (s1 + s2, g1)
            },
        );
    (value, grad)
}

pub fn c4_expectation_gradient(q: &EdgeWeightVector) -> Vec<f64> {
    c4_expectation_with_gradient(q).1
}

/// Expectation for the three-class block family: classes of sizes
/// `(a, b, n-a-b)` with weight `w` between the first two and `p` elsewhere.
pub fn block_expectation(n: usize, a: usize, b: usize, p: f64, w: f64) -> f64 {
    let sizes = [a as f64, b as f64, (n - a - b) as f64];
    let weight = |x: usize, y: usize| {
        if (x == 0 && y == 1) || (x == 1 && y == 0) {
            w
        } else {
            p
        }
    };
    let mut total = 0.0;
    for c0 in 0..3 {
        for c1 in 0..3 {
            for c2 in 0..3 {
                for c3 in 0..3 {
                    let cls = [c0, c1, c2, c3];
                    let mut used = [0.0f64; 3];
                    let mut count = 1.0;
                    for &c in &cls {
                        count *= sizes[c] - used[c];
                        used[c] += 1.0;
                    }
                    if count <= 0.0 {
                        continue;
                    }
                    let cyc = weight(c0, c1) * weight(c1, c2) * weight(c2, c3) * weight(c3, c0);
                    let dia = (1.0 - weight(c0, c2)) * (1.0 - weight(c1, c3));
                    total += count * cyc * dia;
                }
            }
        }
    }
    total / 8.0
}

fn check_inputs(n: usize, p: f64, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    if n < 4 {
        return domain(format!("n must be at least 4, got {n}"));
    }
    if !(delta >= 0.0) {
        return domain(format!("delta must be nonnegative, got {delta}"));
    }
    Ok((1.0 + delta) * expected_induced_c4(n, p)?)
}

fn block_vector(n: usize, p: f64, a: usize, b: usize, w: f64) -> EdgeWeightVector {
    let mut q = EdgeWeightVector::constant(n, p);
    for x in 0..a {
        for y in a..a + b {
            q.set(x, y, w);
        }
    }
    q
}

// Smallest w in [p, 1] with block_expectation >= target, if any.
fn min_block_weight(n: usize, a: usize, b: usize, p: f64, target: f64) -> Option<f64> {
    let e = |w: f64| block_expectation(n, a, b, p, w);
    let (mut lo, mut hi) = (p, 1.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (e(x1), e(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = e(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = e(x1);
        }
    }
    let mut peak = (lo + hi) / 2.0;
    for cand in [1.0, p] {
        if e(cand) > e(peak) {
            peak = cand;
        }
    }
    if e(peak) < target {
        return None;
    }
    let (mut lo, mut hi) = (p, peak);
    if e(lo) >= target {
        return Some(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if e(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Best complete-bipartite-block tilt `K_{a,b}` at weight `w`.
pub fn solve_ansatz(n: usize, p: f64, delta: f64) -> Result<MeanfieldSolution> {
    let target = check_inputs(n, p, delta)?;
    let ex = expected_induced_c4(n, p)?;
    if delta == 0.0 {
        return Ok(MeanfieldSolution {
            n,
            p,
            delta,
            q_star: EdgeWeightVector::constant(n, p),
            cost: 0.0,
            constraint_value: ex,
            target,
            method: Method::Ansatz,
            block: None,
        });
    }
    let pairs: Vec<(usize, usize)> = (1..=n / 2)
        .flat_map(|a| (a..=n - a).map(move |b| (a, b)))
        .collect();
    let best = pairs
        .par_iter()
        .filter_map(|&(a, b)| {
            let w = min_block_weight(n, a, b, p, target)?;
            Some(((a * b) as f64 * kl(w, p), a, b, w))
        })
        .min_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let Some((cost, a, b, w)) = best else {
        return Err(Error::Infeasible(format!(
            "no block K_{{a,b}} reaches (1+δ)E[X] = {target:.6e}"
        )));
    };
    let q_star = block_vector(n, p, a, b, w);
    let constraint_value = inhomogeneous_c4_expectation(&q_star);
    Ok(MeanfieldSolution {
        n,
        p,
        delta,
        q_star,
        cost,
        constraint_value,
        target,
        method: Method::Ansatz,
        block: Some(BlockParams { a, b, w }),
    })
}

#[derive(Clone, Debug)]
pub struct GeneralOptions {
    pub random_starts: usize,
    pub max_stages: usize,
    pub iters_per_stage: usize,
    pub feas_tol: f64,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        GeneralOptions {
            random_starts: 1,
            max_stages: 10,
            iters_per_stage: 40,
            feas_tol: 1e-6,
        }
    }
}

struct Problem {
    p: f64,
    target: f64,
    scale: f64,
    lo: f64,
}

impl Problem {
    fn project(&self, x: f64) -> f64 {
        x.clamp(self.lo, Q_MAX)
    }

    // Penalised objective with its gradient.
    fn eval(&self, q: &EdgeWeightVector, mu: f64, with_grad: bool) -> (f64, f64, Option<Vec<f64>>) {
        let cost = q.cost(self.p);
        if with_grad {
            let (e, ge) = c4_expectation_with_gradient(q);
            let viol = (1.0 - e / self.target).max(0.0);
            let obj = cost + mu * self.scale * viol * viol;
            let coef = -2.0 * mu * self.scale * viol / self.target;
            let grad =
                q.q.iter()
                    .zip(&ge)
                    .map(|(&x, &g)| {
                        let x = x.clamp(1e-300, Q_MAX);
                        (x * (1.0 - self.p) / (self.p * (1.0 - x))).ln() + coef * g
                    })
                    .collect();
            (obj, e, Some(grad))
        } else {
            let e = inhomogeneous_c4_expectation(q);
            let viol = (1.0 - e / self.target).max(0.0);
            (cost + mu * self.scale * viol * viol, e, None)
        }
    }
}

fn descend(prob: &Problem, start: EdgeWeightVector, opts: &GeneralOptions) -> EdgeWeightVector {
    let mut q = start;
    for v in q.q.iter_mut() {
        *v = prob.project(*v);
    }
    let mut mu = 1.0;
    let mut step = 1e-2;
    for _stage in 0..opts.max_stages {
        let (mut obj, _, grad) = prob.eval(&q, mu, true);
        let mut grad = grad.expect("gradient requested");
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        for _ in 0..opts.iters_per_stage {
            if let Some((px, pg)) = &prev {
                // Curvature estimate from successive gradients.
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..grad.len() {
                    let dx = q.q[i] - px[i];
                    let dg = grad[i] - pg[i];
                    num += dg * dg;
                    den += dx * dx;
                }
                if num > 0.0 && den > 0.0 {
                    step = (den / num).sqrt();
                }
            }
            let mut accepted = None;
            for _ in 0..40 {
                let cand = EdgeWeightVector {
                    n: q.n,
                    q: q.q
                        .iter()
                        .zip(&grad)
                        .map(|(&x, &g)| prob.project(x - step * g))
                        .collect(),
                };
                let decrease: f64 = cand
                    .q
                    .iter()
                    .zip(&q.q)
                    .zip(&grad)
                    .map(|((&c, &x), &g)| g * (x - c))
                    .sum();
                let (cobj, _, _) = prob.eval(&cand, mu, false);
                if cobj <= obj - 1e-4 * decrease {
                    accepted = Some((cand, cobj));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, cobj)) = accepted else { break };
            let rel = (obj - cobj) / obj.abs().max(1e-300);
            let (_, _, g2) = prob.eval(&cand, mu, true);
            prev = Some((
                std::mem::replace(&mut q, cand).q,
                std::mem::replace(&mut grad, g2.expect("gradient requested")),
            ));
            obj = cobj;
            if rel < 1e-10 {
                break;
            }
        }
        let e = inhomogeneous_c4_expectation(&q);
        if e >= prob.target * (1.0 - opts.feas_tol) {
            break;
        }
        mu *= 10.0;
    }
    q
}

// Walks along the projected expectation gradient until the constraint holds.
fn restore(prob: &Problem, q: EdgeWeightVector) -> EdgeWeightVector {
    let (e0, g) = c4_expectation_with_gradient(&q);
    if e0 >= prob.target {
        return q;
    }
    let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if gnorm == 0.0 {
        return q;
    }
    let shift = |s: f64| EdgeWeightVector {
        n: q.n,
        q: q.q
            .iter()
            .zip(&g)
            .map(|(&x, &d)| prob.project(x + s * d / gnorm))
            .collect(),
    };
    let mut s = (prob.target - e0) / gnorm;
    for _ in 0..60 {
        let cand = shift(s);
        if inhomogeneous_c4_expectation(&cand) >= prob.target {
            let (mut lo, mut hi) = (0.0, s);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if inhomogeneous_c4_expectation(&shift(mid)) >= prob.target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return shift(hi);
        }
        s *= 2.0;
    }
    q
}

/// First-order penalty-continuation solver with multi-start.
pub fn solve_general(n: usize, p: f64, delta: f64, seed: u64) -> Result<MeanfieldSolution> {
    solve_general_with(n, p, delta, seed, &GeneralOptions::default())
}

pub fn solve_general_with(
    n: usize,
    p: f64,
    delta: f64,
    seed: u64,
    opts: &GeneralOptions,
) -> Result<MeanfieldSolution> {
    let target = check_inputs(n, p, delta)?;
    if n > MAX_GENERAL_N {
        return Err(Error::Budget(format!(
            "the dense solver supports n <= {MAX_GENERAL_N}, got {n}"
        )));
    }
    if delta == 0.0 {
        let mut s = solve_ansatz(n, p, delta)?;
        s.method = Method::General;
        return Ok(s);
    }
    let nn = n as f64;
    let prob = Problem {
        p,
        target,
        scale: nn * nn * p * p * -p.ln(),
        lo: p,
    };
    let mut starts = Vec::new();
    let ansatz = solve_ansatz(n, p, delta).ok();
    if let Some(a) = &ansatz {
        starts.push(a.q_star.clone());
    }
    for s in 0..opts.random_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64 + 1);
        let q = (0..choose2(n))
            .map(|_| (p * (1.0 + 4.0 * rng.gen::<f64>())).min(Q_MAX))
            .collect();
        starts.push(EdgeWeightVector { n, q });
    }
    let mut candidates: Vec<(f64, f64, EdgeWeightVector)> = starts
        .into_par_iter()
        .map(|start| {
            let q = restore(&prob, descend(&prob, start, opts));
            let e = inhomogeneous_c4_expectation(&q);
            (q.cost(p), e, q)
        })
        .collect();
    if let Some(a) = ansatz {
        candidates.push((a.cost, a.constraint_value, a.q_star));
    }
    let floor = target * (1.0 - opts.feas_tol);
    let best = candidates
        .iter()
        .filter(|c| c.1 >= floor)
        .min_by(|x, y| x.0.total_cmp(&y.0));
    match best {
        Some((cost, e, q)) => Ok(MeanfieldSolution {
            n,
            p,
            delta,
            q_star: q.clone(),
            cost: *cost,
            constraint_value: *e,
            target,
            method: Method::General,
            block: None,
        }),
        None => {
            let (cost, e, q) = candidates
                .into_iter()
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("at least one start");
            Err(Error::NoFeasiblePoint {
                q: q.q,
                cost,
                constraint: e,
                target,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub regime: String,
    pub k: Option<usize>,
    pub meanfield_norm: f64,
    pub family_norm: f64,
    pub ratio: f64,
}

/// Planting-family rate against the mean-field rate.
pub fn gap_report(n: usize, p: f64, delta: f64) -> Result<GapReport> {
    let regime = regime_classify(n, p);
    let mf = (delta / 2.0).sqrt();
    match regime.label {
        RegimeLabel::SparseK(k) => {
            let rho = rho_k(k, n, p);
            Ok(GapReport {
                regime: regime.label.to_string(),
                k: Some(k),
                meanfield_norm: mf,
                family_norm: rho * mf,
                ratio: rho,
            })
        }
        RegimeLabel::SparseDense => Ok(GapReport {
            regime: regime.label.to_string(),
            k: None,
            meanfield_norm: mf,
            family_norm: mf,
            ratio: 1.0,
        }),
        RegimeLabel::Dense => domain(format!(
            "gap report needs a sparse regime, p = {p} is dense for n = {n}"
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyDiagnostics {
    pub p: f64,
    pub small_x: f64,
    pub small_x_ratio: f64,
    pub large_x: f64,
    pub large_x_ratio: f64,
    pub minorant_points: usize,
    pub minorant_violations: usize,
    /// Smallest `I_p(p+x) - x^2 I_p(p+b)/b^2` seen on the grid.
    pub minorant_min_slack: f64,
}

/// Numeric checks of the small- and large-deviation forms of `I_p(p+x)` and of
/// the quadratic minorant `I_p(p+x) >= x^2 I_p(p+b)/b^2`.
pub fn entropy_asymptotics_check(p: f64) -> Result<EntropyDiagnostics> {
    if !(p > 0.0 && p <= 0.01) {
        return domain(format!("entropy checks need 0 < p <= 0.01, got {p}"));
    }
    let small_x = p / 100.0;
    let small_x_ratio = kl(p + small_x, p) * 2.0 * p / (small_x * small_x);
    let large_x = 100.0 * p;
    if large_x > 1.0 - p {
        return domain(format!("100p must not exceed 1-p, got p = {p}"));
    }
    let large_x_ratio = kl(p + large_x, p) / (large_x * (large_x / p).ln());
    let b_max = 1.0 - p - 1.0 / (1.0 / p).ln();
    let mut points = 0;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    let steps = 60;
    for bi in 1..=steps {
        // b log-spaced from p/100 to b_max.
        let b = (p / 100.0) * (b_max / (p / 100.0)).powf(bi as f64 / steps as f64);
        let ib = kl(p + b, p);
        for xi in 0..=steps {
            let x = b * xi as f64 / steps as f64;
            let lhs = kl(p + x, p);
            let rhs = x * x * ib / (b * b);
            let slack = lhs - rhs;
            points += 1;
            min_slack = min_slack.min(slack);
            if slack < -1e-12 * rhs.abs().max(1e-300) {
                violations += 1;
            }
        }
    }
    Ok(EntropyDiagnostics {
        p,
        small_x,
        small_x_ratio,
        large_x,
        large_x_ratio,
        minorant_points: points,
        minorant_violations: violations,
        minorant_min_slack: min_slack,
    })
}
