//! Closed-form constants, regimes, planting bounds and the rate evaluator.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::graph::expected_induced_c4;

fn check_open_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    Ok(())
}

/// `I_p(q)`, the Bernoulli relative entropy in nats.
pub fn relative_entropy(q: f64, p: f64) -> Result<f64> {
    check_open_p(p)?;
    if !(0.0..=1.0).contains(&q) {
        return domain(format!("q must lie in [0, 1], got {q}"));
    }
    Ok(kl(q, p))
}

// Unchecked version for inner loops.
#[inline]
pub(crate) fn kl(q: f64, p: f64) -> f64 {
    let a = if q > 0.0 { q * (q / p).ln() } else { 0.0 };
    let b = if q < 1.0 {
        (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln()
    } else {
        0.0
    };
    a + b
}

/// `c_1 = 0`, `c_k = 1/(2 + sqrt((k+1)/(k-1)))`.
pub fn phase_boundary(k: usize) -> Result<f64> {
    match k {
        0 => domain("phase boundaries start at k = 1"),
        1 => Ok(0.0),
        _ => Ok(c(k)),
    }
}

#[inline]
fn c(k: usize) -> f64 {
    if k == 1 {
        return 0.0;
    }
    let k = k as f64;
    1.0 / (2.0 + ((k + 1.0) / (k - 1.0)).sqrt())
}

/// `r_0 = 2`, `r_k = 2 sqrt(k/(k-1))`.
pub fn r_k(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => f64::INFINITY,
        _ => 2.0 * (k as f64 / (k as f64 - 1.0)).sqrt(),
    }
}

/// `m_k = r_k sqrt((δ+ε) E[X])`.
pub fn m_k(k: usize, delta: f64, eps: f64, ex: f64) -> f64 {
    r_k(k) * ((delta + eps) * ex).max(0.0).sqrt()
}

/// `m_* = (sqrt(16(δ+3ε/2) + d^2) - d) sqrt(E[X]) / 2` with `d = sqrt(2)/(1+ε)`.
pub fn m_star(delta: f64, eps: f64, ex: f64) -> f64 {
    let d = 2f64.sqrt() / (1.0 + eps);
    ((16.0 * (delta + 1.5 * eps) + d * d).sqrt() - d) * ex.sqrt() / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSize {
    pub k: usize,
    pub r: f64,
    pub m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSizes {
    pub expected: f64,
    /// Entries for `k = 0, 2, 3, ..., k_max`.
    pub table: Vec<PlantSize>,
    pub m_star: f64,
}

impl PlantSizes {
    pub fn get(&self, k: usize) -> Option<&PlantSize> {
        self.table.iter().find(|s| s.k == k)
    }
}

pub fn plant_sizes(n: usize, p: f64, delta: f64, eps: f64, k_max: usize) -> Result<PlantSizes> {
    if n < 4 {
        return domain(format!("plant sizes need n >= 4, got {n}"));
    }
    check_open_p(p)?;
    let ex = expected_induced_c4(n, p)?;
    let table = std::iter::once(0)
        .chain(2..=k_max.max(2))
        .map(|k| PlantSize {
            k,
            r: r_k(k),
            m: m_k(k, delta, eps, ex),
        })
        .collect();
    Ok(PlantSizes {
        expected: ex,
        table,
        m_star: m_star(delta, eps, ex),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sparse,
    Dense,
}

/// `Φ_X(δ)` bracket values (already multiplied by `log(1/p)`).
pub fn phi_bounds(n: usize, p: f64, delta: f64, eps: f64) -> Result<(f64, f64, Regime)> {
    check_open_p(p)?;
    let ex = expected_induced_c4(n, p)?;
    let l = -p.ln();
    let nn = n as f64;
    if p <= nn.powf(-0.5) {
        let core = 2.0 * (delta * ex).max(0.0).sqrt() * l;
        Ok(((1.0 - eps) * core, (1.0 + eps) * core, Regime::Sparse))
    } else {
        let n2p2 = nn * nn * p * p;
        let core = ((n2p2 * n2p2 / 16.0 + 4.0 * delta * ex).sqrt() - n2p2 / 4.0) * l;
        Ok(((1.0 - eps) * core, (1.0 + eps) * core, Regime::Dense))
    }
}

/// `ln C(n, l)` without overflow.
pub fn ln_binom(n: f64, l: f64) -> f64 {
    let l = l.min(n - l);
    let mut s = 0.0;
    let mut i = 0.0;
    while i < l {
        s += ((n - i) / (i + 1.0)).ln();
        i += 1.0;
    }
    s
}

/// Which planted family a lower bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlantFamily {
    /// `K_{k, m_k/k}` placed on a free set of `m_k/k` vertices.
    Bipartite(usize),
    /// The hub `K_{2m_*/n, n/2}`.
    Hub,
}

/// Log-probability lower bound obtained by planting.
///
/// For `Bipartite(k)`: `(1+ε)(m_k log p + log C(n, round(m_k/k)))`.
/// For `Hub`: `(1+ε) m_* log p`.
pub fn planting_log_prob_lower(
    n: usize,
    p: f64,
    delta: f64,
    eps: f64,
    family: PlantFamily,
) -> Result<f64> {
    check_open_p(p)?;
    let ex = expected_induced_c4(n, p)?;
    match family {
        PlantFamily::Hub => Ok((1.0 + eps) * m_star(delta, eps, ex) * p.ln()),
        PlantFamily::Bipartite(k) => {
            if k < 2 {
                return domain(format!("the planted family needs k >= 2, got {k}"));
            }
            let m = m_k(k, delta, eps, ex);
            if m == 0.0 {
                return Ok(0.0);
            }
            let side = m / k as f64;
            if side < 1.0 {
                return Err(Error::Infeasible(format!(
                    "the smaller side m_k/k = {side:.4} is below one"
                )));
            }
            let l = side.round();
            Ok((1.0 + eps) * (m * p.ln() + ln_binom(n as f64, l)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegimeLabel {
    SparseK(usize),
    SparseDense,
    Dense,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeLabel::SparseK(k) => write!(f, "SPARSE_K({k})"),
            RegimeLabel::SparseDense => f.write_str("SPARSE_DENSE"),
            RegimeLabel::Dense => f.write_str("DENSE"),
        }
    }
}

impl Serialize for RegimeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeDescriptor {
    pub label: RegimeLabel,
    pub k: Option<usize>,
    /// Set inside the band `(n^{-1/2}/log n, n^{-1/2}]` that is reported as dense.
    pub boundary_warning: bool,
}

/// Smallest `k >= 2` with `p <= n^{-1+c_k}`; `None` when `p > n^{-2/3}`.
pub fn sparse_k(n: usize, p: f64) -> Option<usize> {
    let t = 1.0 + p.ln() / (n as f64).ln();
    if t >= 1.0 / 3.0 {
        return None;
    }
    let mut k = if t <= c(2) {
        2
    } else {
        let s = 1.0 / t - 2.0;
        let est = ((s * s + 1.0) / (s * s - 1.0)).ceil();
        if est.is_finite() && est < 1e15 {
            (est as usize).max(2)
        } else {
            return None;
        }
    };
    while k > 2 && c(k - 1) >= t {
        k -= 1;
    }
    while c(k) < t {
        k += 1;
    }
    Some(k)
}

pub fn regime_classify(n: usize, p: f64) -> RegimeDescriptor {
    let nn = n as f64;
    if p <= nn.powf(-2.0 / 3.0) {
        if let Some(k) = sparse_k(n, p) {
            return RegimeDescriptor {
                label: RegimeLabel::SparseK(k),
                k: Some(k),
                boundary_warning: false,
            };
        }
    }
    let half = nn.powf(-0.5);
    if p <= half / nn.ln() {
        RegimeDescriptor {
            label: RegimeLabel::SparseDense,
            k: None,
            boundary_warning: false,
        }
    } else {
        RegimeDescriptor {
            label: RegimeLabel::Dense,
            k: None,
            boundary_warning: p <= half,
        }
    }
}

/// `ρ_k = sqrt(k/(k-1)) (1 - 2/k + log n / (k log(1/p)))`.
pub fn rho_k(k: usize, n: usize, p: f64) -> f64 {
    let kf = k as f64;
    (kf / (kf - 1.0)).sqrt() * (1.0 - 2.0 / kf + (n as f64).ln() / (kf * -p.ln()))
}

/// Normalised dense rate implied by `m_*` at `ε → 0`.
pub fn dense_rate(delta: f64) -> f64 {
    (delta / 2.0 + 1.0 / 16.0).sqrt() - 0.25
}

/// The dense rate with the constants as printed, without the `m_*` correction.
pub fn dense_rate_printed(delta: f64) -> f64 {
    (delta / 2.0 + 1.0 / 128.0).sqrt() - 1.0 / 128f64.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlantDescription {
    pub family: String,
    pub left: u64,
    pub right: u64,
    pub edges: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub regime: RegimeDescriptor,
    /// In units of `n^2 p^2 log(1/p)`.
    pub normalized_rate: f64,
    pub raw_log_prob: f64,
    pub plant: PlantDescription,
    pub rho: Option<f64>,
    pub dense_rate_printed: Option<f64>,
}

fn round_side(x: f64) -> u64 {
    x.round().max(1.0) as u64
}

/// Evaluates the rate formula at `(n, p, δ)`; `eps` only enters the plant sizes.
pub fn rate_theorem(n: usize, p: f64, delta: f64, eps: f64) -> Result<RateReport> {
    let nn = n as f64;
    if n < 4 {
        return domain(format!("n must be at least 4, got {n}"));
    }
    if !(p > 1.0 / nn && p < 1.0) {
        return domain(format!("p = {p} outside (1/n, 1)"));
    }
    if delta < 0.0 {
        return domain(format!("delta must be nonnegative, got {delta}"));
    }
    let regime = regime_classify(n, p);
    let ex = expected_induced_c4(n, p)?;
    let base = (delta / 2.0).sqrt();
    let (normalized_rate, plant, rho, printed) = match regime.label {
        RegimeLabel::SparseK(k) => {
            let rho = rho_k(k, n, p);
            let l = round_side(m_k(k, delta, eps, ex) / k as f64);
            let plant = PlantDescription {
                family: format!("K_{{{k},{l}}}"),
                left: k as u64,
                right: l,
                edges: k as u64 * l,
            };
            (rho * base, plant, Some(rho), None)
        }
        RegimeLabel::SparseDense => {
            let s = round_side(m_k(0, delta, eps, ex).sqrt());
            let plant = PlantDescription {
                family: format!("K_{{{s},{s}}}"),
                left: s,
                right: s,
                edges: s * s,
            };
            (base, plant, None, None)
        }
        RegimeLabel::Dense => {
            let a = round_side(2.0 * m_star(delta, eps, ex) / nn);
            let b = round_side(nn / 2.0);
            let plant = PlantDescription {
                family: format!("hub K_{{{a},{b}}}"),
                left: a,
                right: b,
                edges: a * b,
            };
            (
                dense_rate(delta),
                plant,
                None,
                Some(dense_rate_printed(delta)),
            )
        }
    };
    Ok(RateReport {
        regime,
        normalized_rate,
        raw_log_prob: -normalized_rate * nn * nn * p * p * -p.ln(),
        plant,
        rho,
        dense_rate_printed: printed,
    })
}

/// Exponent interval `[-1 + c_{k-1}, -1 + c_k]` of regime `k`, as powers of `n`.
pub fn regime_exponents(k: usize) -> (f64, f64) {
    (-1.0 + c(k - 1), -1.0 + c(k))
}

/// Geometric midpoint of the `p`-interval of regime `k`.
pub fn regime_midpoint(n: usize, k: usize) -> f64 {
    let (lo, hi) = regime_exponents(k);
    (n as f64).powf((lo + hi) / 2.0)
}
