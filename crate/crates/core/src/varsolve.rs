//! Discrete variational problem over degree-class mass vectors.
//!
//! Coordinates are indexed by class: `1..=R` are the degree classes and
//! `R+1` stands for the class `> R`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::expected_induced_c4;
use crate::rates::{m_k, regime_classify, RegimeLabel};

/// Default and maximal number of explicit degree classes.
pub const MAX_R: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassVector {
    x: Vec<f64>,
}

impl MassVector {
    pub fn zeros(r: usize) -> Self {
        MassVector {
            x: vec![0.0; r + 1],
        }
    }

    /// Builds from `[x_1, ..., x_R, x_{>R}]`.
    pub fn from_entries(x: Vec<f64>) -> Result<Self> {
        if x.len() < 3 {
            return domain("a mass vector needs R >= 2");
        }
        if let Some(v) = x.iter().find(|v| !(**v >= 0.0)) {
            return domain(format!("mass entries must be nonnegative, got {v}"));
        }
        Ok(MassVector { x })
    }

    pub fn unit(r: usize, class: usize, alpha: f64) -> Self {
        let mut v = MassVector::zeros(r);
        v.set(class, alpha);
        v
    }

    pub fn r(&self) -> usize {
        self.x.len() - 1
    }

    #[inline]
    pub fn get(&self, class: usize) -> f64 {
        self.x[class - 1]
    }

    #[inline]
    pub fn set(&mut self, class: usize, v: f64) {
        self.x[class - 1] = v;
    }

    #[inline]
    pub fn add(&mut self, class: usize, v: f64) {
        self.x[class - 1] += v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.x
    }

    pub fn total(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn dot(&self, u: &UVector) -> f64 {
        self.x.iter().zip(&u.u).map(|(a, b)| a * b).sum()
    }

    /// Class holding the largest mass (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.x.len() {
            if self.x[i] > self.x[best] {
                best = i;
            }
        }
        best + 1
    }
}

/// `u_1 = 0`, `u_i = log p - log(np^2)/i`, `u_{R+1} = log p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UVector {
    u: Vec<f64>,
}

/// The `i`-th coordinate formula, without the special last entry.
pub fn u_coord(i: usize, n: usize, p: f64) -> f64 {
    p.ln() - ((n as f64) * p * p).ln() / i as f64
}

impl UVector {
    pub fn new(n: usize, p: f64, r: usize) -> Self {
        let mut u = vec![0.0; r + 1];
        for i in 2..=r {
            u[i - 1] = u_coord(i, n, p);
        }
        u[r] = p.ln();
        UVector { u }
    }

    pub fn from_entries(u: Vec<f64>) -> Self {
        UVector { u }
    }

    #[inline]
    pub fn get(&self, class: usize) -> f64 {
        self.u[class - 1]
    }

    pub fn r(&self) -> usize {
        self.u.len() - 1
    }
}

/// `f(x) = Σ_{i=2}^R (i-1) x_i (Σ_{i<j<=R} x_j/(2j) + x_i/(4i) + ε m_2) + x_{>R}^2/4`.
pub fn f_value(x: &MassVector, eps: f64, m2: f64) -> f64 {
    let r = x.r();
    let mut tail = 0.0;
    let mut total = 0.0;
    for i in (2..=r).rev() {
        let xi = x.get(i);
        let fi = i as f64;
        total += (fi - 1.0) * xi * (tail + xi / (4.0 * fi) + eps * m2);
        tail += xi / (2.0 * fi);
    }
    let top = x.get(r + 1);
    total + top * top / 4.0
}

fn check_same_r(x: &MassVector, u: &UVector) -> Result<()> {
    if x.r() != u.r() {
        return domain(format!(
            "mass vector has R = {}, u has R = {}",
            x.r(),
            u.r()
        ));
    }
    Ok(())
}

/// Moves the mass of class `i` to class `i+1`, rescaled by `u_i/u_{i+1}`.
pub fn push_left(x: &MassVector, i: usize, u: &UVector) -> Result<MassVector> {
    check_same_r(x, u)?;
    if i < 2 || i > x.r() {
        return domain(format!("push_left needs 2 <= i <= R, got {i}"));
    }
    let target = u.get(i + 1);
    if target == 0.0 {
        return Err(Error::Domain(format!(
            "u_{} = 0: singular direction",
            i + 1
        )));
    }
    let mut out = x.clone();
    let xi = x.get(i);
    out.set(i, 0.0);
    out.add(i + 1, u.get(i) * xi / target);
    Ok(out)
}

/// Moves the mass of class `j` to class `j-1`, rescaled by `u_j/u_{j-1}`.
pub fn push_right(x: &MassVector, j: usize, u: &UVector) -> Result<MassVector> {
    check_same_r(x, u)?;
    if j < 3 || j > x.r() + 1 {
        return domain(format!("push_right needs 3 <= j <= R+1, got {j}"));
    }
    let target = u.get(j - 1);
    if target == 0.0 {
        return Err(Error::Domain(format!(
            "u_{} = 0: singular direction",
            j - 1
        )));
    }
    let mut out = x.clone();
    let xj = x.get(j);
    out.set(j, 0.0);
    out.add(j - 1, u.get(j) * xj / target);
    Ok(out)
}

/// Both sides of `i^2 u_i^2 >= (i+1)(i-1) u_{i+1}^2`.
pub fn technical_sides(i: usize, n: usize, p: f64) -> (f64, f64) {
    let fi = i as f64;
    let ui = u_coord(i, n, p);
    let uj = u_coord(i + 1, n, p);
    (fi * fi * ui * ui, (fi + 1.0) * (fi - 1.0) * uj * uj)
}

pub fn technical_inequality(i: usize, n: usize, p: f64) -> bool {
    let (l, r) = technical_sides(i, n, p);
    l >= r
}

/// Positive root of `(k-1)/(4k) α^2 + ε(k-1) m_2 α = t`, and `α u_k`.
pub fn closed_form_alpha(k: usize, t: f64, eps: f64, m2: f64, u_k: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    let kf = k as f64;
    let a = (kf - 1.0) / (4.0 * kf);
    let b = eps * (kf - 1.0) * m2;
    // Cancellation-free form of (-b + sqrt(b^2 + 4at)) / 2a.
    let alpha = 2.0 * t / (b + (b * b + 4.0 * a * t).sqrt());
    (alpha, alpha * u_k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PushCheck {
    pub vectors: usize,
    pub left_tested: usize,
    pub left_violations: usize,
    pub right_tested: usize,
    pub right_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteSolution {
    pub k: usize,
    pub r: usize,
    pub t: f64,
    pub m2: f64,
    pub alpha: f64,
    pub value: f64,
    pub x_star: MassVector,
    pub grid_best: f64,
    pub grid_argmax: usize,
    /// `(grid_best - value)/|value|`; positive means the grid beat the closed form.
    pub gap: f64,
    pub push_check: PushCheck,
}

/// Coefficients of `f` restricted to the span of one class:
/// `(quadratic, linear)`.
fn diag_coeffs(class: usize, r: usize, eps: f64, m2: f64) -> (f64, f64) {
    if class == r + 1 {
        (0.25, 0.0)
    } else {
        let c = class as f64;
        ((c - 1.0) / (4.0 * c), eps * m2 * (c - 1.0))
    }
}

/// Best `⟨x, u⟩` over `x = a e_i + b e_j` with `f(x) >= t`, scanning `a` on a
/// grid and solving exactly for the smallest feasible `b`. Returns
/// `(value, a, b)`.
pub fn grid_pair(
    i: usize,
    j: usize,
    u: &UVector,
    t: f64,
    eps: f64,
    m2: f64,
    points: usize,
    a_max: f64,
) -> (f64, f64, f64) {
    let r = u.r();
    let (qi, li) = diag_coeffs(i, r, eps, m2);
    let (qj, lj) = diag_coeffs(j, r, eps, m2);
    let cross = if j <= r {
        (i as f64 - 1.0) / (2.0 * j as f64)
    } else {
        0.0
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for s in 0..points {
        let a = a_max * s as f64 / (points - 1) as f64;
        let c0 = qi * a * a + li * a - t;
        let b = if c0 >= 0.0 {
            0.0
        } else {
            let c1 = cross * a + lj;
            2.0 * -c0 / (c1 + (c1 * c1 - 4.0 * qj * c0).sqrt())
        };
        let v = u.get(i) * a + u.get(j) * b;
        if v > best.0 {
            best = (v, a, b);
        }
    }
    best
}

/// Default class count `max(ceil(1/ε), k+1)`, capped at [`MAX_R`].
pub fn default_r(eps: f64, k: usize) -> usize {
    let base = if eps > 0.0 {
        (1.0 / eps).ceil() as usize
    } else {
        MAX_R
    };
    base.max(k + 1).min(MAX_R)
}

pub fn solve_discrete(
    n: usize,
    p: f64,
    delta: f64,
    eps: f64,
    r: Option<usize>,
) -> Result<DiscreteSolution> {
    let regime = regime_classify(n, p);
    let k = match regime.label {
        RegimeLabel::SparseK(k) => k,
        other => return domain(format!("solve_discrete needs a sparse regime, got {other}")),
    };
    let r = r.unwrap_or_else(|| default_r(eps, k));
    if r <= k || r > MAX_R {
        return domain(format!(
            "R must satisfy k < R <= {MAX_R}, got {r} with k = {k}"
        ));
    }
    let ex = expected_induced_c4(n, p)?;
    let m2 = m_k(2, delta, eps, ex);
    let t = (delta - eps) * ex;
    let u = UVector::new(n, p, r);
    let (alpha, value) = closed_form_alpha(k, t, eps, m2, u.get(k));
    let x_star = MassVector::unit(r, k, alpha);

    let push_check = check_pushes(k, &u, eps, m2);

    let mut grid = (f64::NEG_INFINITY, 0usize);
    for i in 2..=r + 1 {
        for j in i + 1..=r + 1 {
            let (v, a, b) = grid_pair(i, j, &u, t.max(0.0), eps, m2, 200, 2.0 * m2);
            if v > grid.0 {
                let arg = if a >= b { i } else { j };
                grid = (v, arg);
            }
        }
    }
    let gap = if value != 0.0 {
        (grid.0 - value) / value.abs()
    } else {
        0.0
    };
    Ok(DiscreteSolution {
        k,
        r,
        t,
        m2,
        alpha,
        value,
        x_star,
        grid_best: grid.0,
        grid_argmax: grid.1,
        gap,
        push_check,
    })
}

// Pushing any vector toward class k should not decrease f; counts failures.
fn check_pushes(k: usize, u: &UVector, eps: f64, m2: f64) -> PushCheck {
    let r = u.r();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let vectors = 64;
    let mut check = PushCheck {
        vectors,
        left_tested: 0,
        left_violations: 0,
        right_tested: 0,
        right_violations: 0,
    };
    let scale = m2.max(1.0);
    for _ in 0..vectors {
        for i in 2..k {
            let mut x = MassVector::zeros(r);
            for c in i..=r + 1 {
                x.set(c, rng.gen::<f64>() * scale);
            }
            if let Ok(y) = push_left(&x, i, u) {
                check.left_tested += 1;
                let (before, after) = (f_value(&x, eps, m2), f_value(&y, eps, m2));
                if after < before - 1e-9 * before.abs().max(1.0) {
                    check.left_violations += 1;
                }
            }
        }
        for j in k + 1..=r + 1 {
            let mut x = MassVector::zeros(r);
            for c in 2..=j {
                x.set(c, rng.gen::<f64>() * scale);
            }
            if let Ok(y) = push_right(&x, j, u) {
                check.right_tested += 1;
                let (before, after) = (f_value(&x, eps, m2), f_value(&y, eps, m2));
                if after < before - 1e-9 * before.abs().max(1.0) {
                    check.right_violations += 1;
                }
            }
        }
    }
    check
}
