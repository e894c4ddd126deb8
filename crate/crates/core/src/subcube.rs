//! Subcubes of the edge hypercube `{0,1}^C(n,2)` and the brute-force `Φ_X`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{self, choose2, edge_from_index, expected_induced_c4, PAIRINGS};

/// A subcube: coordinates in `fixed` are pinned to the given bit, the rest are free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subcube {
    dim: usize,
    fixed: BTreeMap<usize, bool>,
}

impl Subcube {
    /// The whole cube.
    pub fn full(dim: usize) -> Self {
        Subcube {
            dim,
            fixed: BTreeMap::new(),
        }
    }

    pub fn from_fixings(
        dim: usize,
        fixings: impl IntoIterator<Item = (usize, bool)>,
    ) -> Result<Self> {
        let mut f = Subcube::full(dim);
        for (i, b) in fixings {
            f.fix(i, b)?;
        }
        Ok(f)
    }

    /// Pins coordinate `i`; refixing to the same bit is a no-op.
    pub fn fix(&mut self, i: usize, bit: bool) -> Result<()> {
        if i >= self.dim {
            return domain(format!("index {i} outside dimension {}", self.dim));
        }
        match self.fixed.insert(i, bit) {
            Some(old) if old != bit => {
                self.fixed.insert(i, old);
                domain(format!("index {i} already fixed to {}", old as u8))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fixed(&self) -> &BTreeMap<usize, bool> {
        &self.fixed
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.fixed.get(&i).copied()
    }

    /// `(codim, codim0, codim1)`.
    pub fn codims(&self) -> (usize, usize, usize) {
        let ones = self.fixed.values().filter(|&&b| b).count();
        (self.fixed.len(), self.fixed.len() - ones, ones)
    }

    /// `None` when the two subcubes fix some coordinate to different bits.
    pub fn intersect(&self, other: &Subcube) -> Result<Option<Subcube>> {
        if self.dim != other.dim {
            return domain(format!(
                "ambient dimensions differ: {} vs {}",
                self.dim, other.dim
            ));
        }
        let mut out = self.clone();
        for (&i, &b) in &other.fixed {
            match out.fixed.insert(i, b) {
                Some(old) if old != b => return Ok(None),
                _ => {}
            }
        }
        Ok(Some(out))
    }

    /// `(F1, F0)`: the one-supcube and the zero-supcube.
    pub fn supcubes(&self) -> (Subcube, Subcube) {
        let part = |want: bool| Subcube {
            dim: self.dim,
            fixed: self
                .fixed
                .iter()
                .filter(|(_, &b)| b == want)
                .map(|(&i, &b)| (i, b))
                .collect(),
        };
        (part(true), part(false))
    }

    /// `-log P(Y ∈ F)` under independent Bernoulli(p) coordinates.
    pub fn neg_log_prob(&self, p: f64) -> f64 {
        let (_, c0, c1) = self.codims();
        let mut s = 0.0;
        if c1 > 0 {
            s += c1 as f64 * -p.ln();
        }
        if c0 > 0 {
            s += c0 as f64 * -(1.0 - p).ln();
        }
        s
    }

    /// Text form: `N k` followed by `index bit` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.dim, self.fixed.len());
        for (i, b) in &self.fixed {
            s.push_str(&format!("{i} {}\n", *b as u8));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                let v: Vec<&str> = l.split_whitespace().collect();
                match v.as_slice() {
                    [a, b] => Ok((
                        a.parse::<usize>()
                            .map_err(|e| Error::Parse(e.to_string()))?,
                        b.parse::<usize>()
                            .map_err(|e| Error::Parse(e.to_string()))?,
                    )),
                    _ => Err(Error::Parse(format!("expected two integers, got {l:?}"))),
                }
            });
        let (dim, k) = rows
            .next()
            .ok_or_else(|| Error::Parse("empty subcube text".into()))??;
        let mut f = Subcube::full(dim);
        let mut read = 0;
        for row in rows {
            let (i, b) = row?;
            if b > 1 {
                return Err(Error::Parse(format!("bit must be 0 or 1, got {b}")));
            }
            f.fix(i, b == 1).map_err(|e| Error::Parse(e.to_string()))?;
            read += 1;
        }
        if read != k {
            return Err(Error::Parse(format!(
                "header announces {k} fixings, found {read}"
            )));
        }
        Ok(f)
    }
}

impl fmt::Display for Subcube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Subcube {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Subcube::parse(s)
    }
}

/// `E[X | Y ∈ F]` for the induced-C4 count of `G(n, p)`.
pub fn subcube_expectation_c4(f: &Subcube, n: usize, p: f64) -> Result<f64> {
    if f.dim != choose2(n) {
        return domain(format!(
            "subcube dimension {} does not match C({n},2) = {}",
            f.dim,
            choose2(n)
        ));
    }
    expected_induced_c4(n, p)?;
    let mut touched: Vec<usize> = f
        .fixed
        .keys()
        .flat_map(|&i| {
            let (a, b) = edge_from_index(i);
            [a, b]
        })
        .collect();
    touched.sort_unstable();
    touched.dedup();
    Ok(graph::expectation_with_plant(
        n,
        p,
        &touched,
        &|a, b| match f.get(graph::edge_index(a, b)) {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => p,
        },
    ))
}

/// Mask-based evaluator of `E_F[X]` for `n <= 11`, with `F` given by its
/// ones and zeros bitmasks.
#[derive(Clone, Debug)]
pub struct MaskExpectation {
    terms: Vec<(u64, u64)>,
    pw: [f64; 5],
    qw: [f64; 3],
}

impl MaskExpectation {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if choose2(n) > 64 {
            return Err(Error::Budget(format!(
                "mask evaluation needs n <= 11, got {n}"
            )));
        }
        let mut terms = Vec::new();
        for d in 3..n {
            for c in 2..d {
                for b in 1..c {
                    for a in 0..b {
                        let s = [a, b, c, d];
                        let bit = |x: usize, y: usize| 1u64 << graph::edge_index(s[x], s[y]);
                        for (cyc, dia) in PAIRINGS.iter() {
                            let cm = cyc.iter().fold(0, |m, &(x, y)| m | bit(x, y));
                            let dm = dia.iter().fold(0, |m, &(x, y)| m | bit(x, y));
                            terms.push((cm, dm));
                        }
                    }
                }
            }
        }
        let mut pw = [1.0; 5];
        let mut qw = [1.0; 3];
        for k in 1..5 {
            pw[k] = pw[k - 1] * p;
        }
        for k in 1..3 {
            qw[k] = qw[k - 1] * (1.0 - p);
        }
        Ok(MaskExpectation { terms, pw, qw })
    }

    #[inline]
    pub fn eval(&self, ones: u64, zeros: u64) -> f64 {
        let mut s = 0.0;
        for &(cm, dm) in &self.terms {
            if cm & zeros != 0 || dm & ones != 0 {
                continue;
            }
            let free_c = 4 - (cm & ones).count_ones() as usize;
            let free_d = 2 - (dm & zeros).count_ones() as usize;
            s += self.pw[free_c] * self.qw[free_d];
        }
        s
    }
}

/// Brute-force `Φ_X(δ)`: the cheapest subcube (in `-log P`) whose conditional
/// expectation reaches `(1+δ)E[X]`. Returns `+∞` when none qualifies.
pub fn phi_bruteforce(n: usize, p: f64, delta: f64, one_supcubes_only: bool) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    let limit = if one_supcubes_only { 7 } else { 6 };
    if n > limit {
        return Err(Error::Budget(format!(
            "phi brute force supports n <= {limit} in this mode, got {n}"
        )));
    }
    let big_n = choose2(n);
    let target = (1.0 + delta) * expected_induced_c4(n, p)?;
    let slack = target.abs() * 1e-12;
    let ev = MaskExpectation::new(n, p)?;
    let c1 = -p.ln();
    let c0 = -(1.0 - p).ln();
    let all = if big_n == 64 {
        u64::MAX
    } else {
        (1u64 << big_n) - 1
    };
    let best = (0..=all)
        .into_par_iter()
        .map(|ones| {
            let base = ones.count_ones() as f64 * c1;
            let mut best = f64::INFINITY;
            if one_supcubes_only {
                if ev.eval(ones, 0) >= target - slack {
                    best = base;
                }
                return best;
            }
            // Submasks of the complement, including the empty one.
            let free = all & !ones;
            let mut zeros = free;
            loop {
                let cost = base + zeros.count_ones() as f64 * c0;
                if cost < best && ev.eval(ones, zeros) >= target - slack {
                    best = cost;
                }
                if zeros == 0 {
                    break;
                }
                zeros = (zeros - 1) & free;
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}
