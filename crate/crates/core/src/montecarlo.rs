//! Seeded samplers for `G(n,p)`, conditioned sampling and tail estimation.
//!
//! Trial `t` under seed `s` draws from a ChaCha8 stream keyed by `(s, t)`,
//! consuming one uniform per pair in colex order, so any partition of the
//! trials over threads reproduces the same graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::graph::{
    choose2, count_induced, expected_induced_c4, C4MaskTable, Pattern, SimpleGraph,
};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub hits: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub threshold: f64,
}

fn stream(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("p must lie in [0, 1], got {p}"));
    }
    Ok(())
}

fn gnp_from(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SimpleGraph {
    let mut g = SimpleGraph::new(n);
    for j in 1..n {
        for i in 0..j {
            if rng.gen::<f64>() < p {
                g.add_edge(i, j).expect("pair in range");
            }
        }
    }
    g
}

fn gnp_mask(rng: &mut ChaCha8Rng, pairs: usize, p: f64) -> u64 {
    let mut m = 0u64;
    for idx in 0..pairs {
        if rng.gen::<f64>() < p {
            m |= 1 << idx;
        }
    }
    m
}

/// `G(n, p)` for trial `trial` of `seed`.
pub fn sample_gnp_trial(n: usize, p: f64, seed: u64, trial: u64) -> Result<SimpleGraph> {
    check_p(p)?;
    Ok(gnp_from(&mut stream(seed, trial), n, p))
}

pub fn sample_gnp(n: usize, p: f64, seed: u64) -> Result<SimpleGraph> {
    sample_gnp_trial(n, p, seed, 0)
}

/// Samples `G(n,p)` conditioned on the event that `[k] = {0..k-1}` is
/// independent and the common neighbourhood of `[k]` is exactly `a`.
pub fn sample_conditioned_fak(
    n: usize,
    p: f64,
    k: usize,
    a: &[usize],
    seed: u64,
) -> Result<SimpleGraph> {
    sample_conditioned_fak_trial(n, p, k, a, seed, 0)
}

pub fn sample_conditioned_fak_trial(
    n: usize,
    p: f64,
    k: usize,
    a: &[usize],
    seed: u64,
    trial: u64,
) -> Result<SimpleGraph> {
    check_p(p)?;
    if k > n {
        return domain(format!("k = {k} exceeds n = {n}"));
    }
    let mut in_a = vec![false; n];
    for &v in a {
        if v < k || v >= n {
            return Err(Error::Infeasible(format!(
                "vertex {v} is not in [n] minus [k]"
            )));
        }
        in_a[v] = true;
    }
    if k == 0 && !a.is_empty() {
        return Err(Error::Infeasible(
            "with k = 0 the common neighbourhood is everything".into(),
        ));
    }
    let outsiders = (k..n).filter(|&v| !in_a[v]).count();
    if k > 0 && p == 0.0 && !a.is_empty() {
        return Err(Error::Infeasible("p = 0 cannot connect A to [k]".into()));
    }
    if k > 0 && p == 1.0 && outsiders > 0 {
        return Err(Error::Infeasible(
            "p = 1 forces every vertex into the common neighbourhood".into(),
        ));
    }
    let mut rng = stream(seed, trial);
    let mut g = SimpleGraph::new(n);
    // Pattern of each outsider towards [k], drawn from the law conditioned on
    // not being all ones: while the prefix is all ones the next bit is one
    // with probability p(1-p^{r-1})/(1-p^r), r the bits left; afterwards free.
    let mut bits = vec![false; n * k.max(1)];
    for v in k..n {
        if in_a[v] {
            continue;
        }
        let mut prefix_full = true;
        for i in 0..k {
            let prob = if prefix_full {
                let r = (k - i) as i32;
                p * (1.0 - p.powi(r - 1)) / (1.0 - p.powi(r))
            } else {
                p
            };
            let b = rng.gen::<f64>() < prob;
            bits[v * k + i] = b;
            prefix_full &= b;
        }
    }
    for j in 1..n {
        for i in 0..j {
            let present = if j < k {
                false
            } else if i < k {
                in_a[j] || bits[j * k + i]
            } else {
                rng.gen::<f64>() < p
            };
            if present {
                g.add_edge(i, j).expect("pair in range");
            }
        }
    }
    Ok(g)
}

/// Whether `g` lies in the event sampled by [`sample_conditioned_fak`].
pub fn satisfies_fak(g: &SimpleGraph, k: usize, a: &[usize]) -> bool {
    for j in 1..k {
        for i in 0..j {
            if g.has_edge(i, j) {
                return false;
            }
        }
    }
    if k == 0 {
        return a.is_empty();
    }
    (k..g.n()).all(|v| {
        let full = (0..k).all(|i| g.has_edge(i, v));
        full == a.contains(&v)
    })
}

/// Wilson score interval.
pub fn wilson(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    let nt = trials as f64;
    let ph = hits as f64 / nt;
    let z2 = z * z;
    let denom = 1.0 + z2 / nt;
    let centre = (ph + z2 / (2.0 * nt)) / denom;
    let half = z * (ph * (1.0 - ph) / nt + z2 / (4.0 * nt * nt)).sqrt() / denom;
    (
        (centre - half).max(0.0).min(ph),
        (centre + half).min(1.0).max(ph),
    )
}

/// Fraction of trials with `X >= (1+δ)E[X]`, with a 95% Wilson interval.
pub fn estimate_tail(n: usize, p: f64, delta: f64, trials: u64, seed: u64) -> Result<TailEstimate> {
    if trials == 0 {
        return domain("trials must be at least 1");
    }
    let threshold = (1.0 + delta) * expected_induced_c4(n, p)?;
    let hits = count_hits(n, p, threshold, trials, seed)?;
    let (ci_low, ci_high) = wilson(hits, trials, Z95);
    Ok(TailEstimate {
        p_hat: hits as f64 / trials as f64,
        hits,
        trials,
        ci_low,
        ci_high,
        seed,
        threshold,
    })
}

fn count_hits(n: usize, p: f64, threshold: f64, trials: u64, seed: u64) -> Result<u64> {
    if threshold <= 0.0 {
        return Ok(trials);
    }
    let chunk = 4096u64;
    let chunks = trials.div_ceil(chunk);
    if choose2(n) <= 64 {
        let table = C4MaskTable::new(n)?;
        let pairs = choose2(n);
        Ok((0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut hits = 0u64;
                for t in c * chunk..((c + 1) * chunk).min(trials) {
                    let g = gnp_mask(&mut stream(seed, t), pairs, p);
                    hits += (table.count(g) as f64 >= threshold) as u64;
                }
                hits
            })
            .sum())
    } else {
        Ok((0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut hits = 0u64;
                for t in c * chunk..((c + 1) * chunk).min(trials) {
                    let g = gnp_from(&mut stream(seed, t), n, p);
                    let x = count_induced(&g, Pattern::C4).unwrap_or(0);
                    hits += (x as f64 >= threshold) as u64;
                }
                hits
            })
            .sum())
    }
}

/// Mean and sample variance of the induced C4 count over `trials` samples
/// of `G(n,p)` with the plant's edges forced present.
pub fn planted_mean(
    plant: &SimpleGraph,
    n: usize,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    check_p(p)?;
    if plant.n() > n {
        return domain(format!(
            "plant has {} vertices but the host has {n}",
            plant.n()
        ));
    }
    let edges = plant.edges();
    // Integer sums keep the result independent of how trials are split.
    let (s, s2) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut g = gnp_from(&mut stream(seed, t), n, p);
            for &(i, j) in &edges {
                g.add_edge(i, j).expect("plant fits");
            }
            let x = count_induced(&g, Pattern::C4).unwrap_or(0) as u128;
            (x, x * x)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (s, s2) = (s as f64, s2 as f64);
    let nt = trials as f64;
    let mean = s / nt;
    Ok((
        mean,
        (s2 / nt - mean * mean).max(0.0) * nt / (nt - 1.0).max(1.0),
    ))
}
