//! Wright's coefficients and exact and asymptotic counts of connected labeled
//! graphs with a given excess.
//!
//! `C(k, m)` is the number of connected labeled graphs on `k` vertices with
//! `m` edges. For excess `l = m − k` it behaves like `γ_l k^{k+(3l−1)/2}`
//! where the Wright coefficients `γ_l` are built from an exact rational
//! sequence `d_l` increasing to `1/(2π)`.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::bigmath::binomial;
use crate::error::{require, Error, Result};

/// Exact `d_1..d_L`: `d_1 = d_2 = 5/36` and for `l ≥ 2`
/// `d_{l+1} = d_l + Σ_{i=1}^{l−1} d_i d_{l−i} / ((l+1) binomial(l, i))`.
///
/// Runs on the integers `g_l = 36^l l! d_l`, which satisfy
/// `g_{l+1} = 36 ((l+1) g_l + Σ_{i=1}^{l−1} g_i g_{l−i})`, and only forms the
/// rationals at the end.
pub fn wright_d(max_l: usize) -> Vec<BigRational> {
    assert!(max_l >= 1, "need at least one coefficient");
    // g[0] is unused so that g[l] is g_l.
    let mut g = vec![BigInt::zero(), BigInt::from(5), BigInt::from(360)];
    for l in 2..max_l {
        // Terms i and l − i are equal, so sum the lower half and double it.
        let mut half = BigInt::zero();
        for i in 1..=(l - 1) / 2 {
            half += &g[i] * &g[l - i];
        }
        let mut sum = half * 2;
        if l % 2 == 0 {
            sum += &g[l / 2] * &g[l / 2];
        }
        let next = (sum + &g[l] * (l + 1)) * 36;
        g.push(next);
    }
    let mut scale = BigInt::from(1);
    (1..=max_l)
        .map(|l| {
            scale *= 36 * l;
            BigRational::new(g[l].clone(), scale.clone())
        })
        .collect()
}

/// Exact `d_l` together with the Wright coefficients `γ_{−1}..γ_L`.
///
/// The coefficients are extended below `l = 1` by `γ_{−1} = 1` (which makes
/// the count asymptotic Cayley's formula) and `γ_0 = (π/8)^{1/2}` (the
/// unicyclic constant).
#[derive(Debug, Clone)]
pub struct WrightTable {
    d: Vec<BigRational>,
    ln_gamma: Vec<f64>,
}

impl WrightTable {
    pub fn new(max_l: usize) -> Self {
        let d = wright_d(max_l.max(1));
        let mut ln_gamma = vec![0.0, 0.5 * (PI / 8.0).ln()];
        for (i, dl) in d.iter().enumerate() {
            let l = (i + 1) as f64;
            let d_float = dl.to_f64().expect("d_l is below one");
            let value = 0.5 * PI.ln() + l * 3f64.ln() + libm::lgamma(l) + d_float.ln()
                - 0.5 * (5.0 * l - 1.0) * LN_2
                - libm::lgamma(1.5 * l);
            ln_gamma.push(value);
        }
        Self { d, ln_gamma }
    }

    /// Largest `l` for which `d_l` is tabulated.
    pub fn max_l(&self) -> usize {
        self.d.len()
    }

    /// Exact `d_l` for `1 ≤ l ≤ max_l`.
    pub fn d(&self, l: usize) -> Option<&BigRational> {
        l.checked_sub(1).and_then(|i| self.d.get(i))
    }

    pub fn ds(&self) -> &[BigRational] {
        &self.d
    }

    /// `ln γ_l` for `−1 ≤ l ≤ max_l`.
    pub fn ln_gamma(&self, l: i64) -> Result<f64> {
        if l < -1 {
            return Err(Error::domain(format!(
                "Wright coefficient undefined for l = {l}"
            )));
        }
        self.ln_gamma.get((l + 1) as usize).copied().ok_or_else(|| {
            Error::domain(format!(
                "l = {l} exceeds the tabulated range (max {})",
                self.max_l()
            ))
        })
    }
}

impl Default for WrightTable {
    fn default() -> Self {
        Self::new(128)
    }
}

/// `γ_l = π^{1/2} 3^l (l−1)! d_l / (2^{(5l−1)/2} Γ(3l/2))`, with
/// `γ_{−1} = 1` and `γ_0 = (π/8)^{1/2}`. Evaluated through log-gamma.
pub fn wright_gamma(l: i64, table: &WrightTable) -> Result<f64> {
    table.ln_gamma(l).map(f64::exp)
}

/// Log of the asymptotic count `γ_l k^{k+(3l−1)/2}`; exact for trees.
pub fn count_connected_asymptotic(k: u64, l: i64, table: &WrightTable) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let kf = k as f64;
    require(l as f64 <= 4.0 * kf.sqrt(), "requires l <= 4*sqrt(k)")?;
    let ln_gamma = table.ln_gamma(l)?;
    Ok(ln_gamma + (kf + (3 * l - 1) as f64 / 2.0) * kf.ln())
}

/// Log of the envelope `c (l∨1)^{−l/2} k^{k+(3l−1)/2}` on `C(k, k+l)`.
/// The constant `c` is not known explicitly; callers supply it.
pub fn count_connected_upper(k: u64, l: i64, c: f64) -> Result<f64> {
    if k == 0 || l < -1 {
        return Err(Error::domain("requires k >= 1 and l >= -1"));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::domain("envelope constant c must be positive"));
    }
    let kf = k as f64;
    let lv = l.max(1) as f64;
    Ok(c.ln() - (l as f64 / 2.0) * lv.ln() + (kf + (3 * l - 1) as f64 / 2.0) * kf.ln())
}

/// Memoized exact counts `C(k, m)` computed by inclusion–exclusion over the
/// component containing a fixed vertex:
///
/// `C(k,m) = binomial(binomial(k,2), m)
///          − Σ_{j<k} binomial(k−1, j−1) Σ_{m₁} C(j,m₁) binomial(binomial(k−j,2), m−m₁)`.
///
/// Lookups take a shared lock; filling the memo takes the exclusive lock.
#[derive(Debug)]
pub struct ExactCountStore {
    k_max: u64,
    inner: RwLock<Memo>,
}

#[derive(Debug, Default)]
struct Memo {
    counts: HashMap<(u64, u64), BigUint>,
    // N -> binomial(N, 0..len)
    binomials: HashMap<u64, Vec<BigUint>>,
}

pub const DEFAULT_K_MAX: u64 = 60;

impl Default for ExactCountStore {
    fn default() -> Self {
        Self::new(DEFAULT_K_MAX)
    }
}

impl ExactCountStore {
    pub fn new(k_max: u64) -> Self {
        Self {
            k_max,
            inner: RwLock::new(Memo::default()),
        }
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact `C(k, m)`; 0 outside `k−1 ≤ m ≤ k(k−1)/2`.
    pub fn count(&self, k: u64, m: u64) -> Result<BigUint> {
        if k == 0 {
            return Err(Error::domain("k must be at least 1"));
        }
        if k > self.k_max {
            return Err(Error::domain(format!(
                "k = {k} exceeds the exact-count cap {}",
                self.k_max
            )));
        }
        if let Some(v) = self.inner.read().unwrap().counts.get(&(k, m)) {
            return Ok(v.clone());
        }
        let mut memo = self.inner.write().unwrap();
        Ok(memo.count(k, m))
    }

    /// `C(k, k + l)`.
    pub fn count_excess(&self, k: u64, l: i64) -> Result<BigUint> {
        let m = k as i64 + l;
        if m < 0 {
            return Ok(BigUint::zero());
        }
        self.count(k, m as u64)
    }

    /// Loads a cache file of `k m C(k,m)` lines. Blank lines and lines
    /// starting with `#` are skipped. Returns the number of entries read.
    pub fn load(&self, path: &Path) -> Result<usize> {
        let file = fs::File::open(path)?;
        let mut memo = self.inner.write().unwrap();
        let mut read = 0;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| Error::Cache {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let [k, m, c] = fields[..] else {
                return Err(bad("expected three fields `k m C`"));
            };
            let k: u64 = k.parse().map_err(|_| bad("k is not an integer"))?;
            let m: u64 = m.parse().map_err(|_| bad("m is not an integer"))?;
            let c: BigUint = c
                .parse()
                .map_err(|_| bad("count is not a decimal integer"))?;
            if k == 0 {
                return Err(bad("k must be at least 1"));
            }
            memo.counts.insert((k, m), c);
            read += 1;
        }
        Ok(read)
    }

    /// Writes every memoized entry, sorted by `(k, m)`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let memo = self.inner.read().unwrap();
        let mut keys: Vec<_> = memo.counts.keys().copied().collect();
        keys.sort_unstable();
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        for (k, m) in keys {
            writeln!(out, "{k} {m} {}", memo.counts[&(k, m)])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl Memo {
    fn count(&mut self, k: u64, m: u64) -> BigUint {
        let pairs = k * (k - 1) / 2;
        if m + 1 < k || m > pairs {
            return BigUint::zero();
        }
        if let Some(v) = self.counts.get(&(k, m)) {
            return v.clone();
        }
        let mut total = self.binomial(pairs, m);
        for j in 1..k {
            let rest_pairs = (k - j) * (k - j - 1) / 2;
            let lo = (j - 1).max(m.saturating_sub(rest_pairs));
            let hi = m.min(j * (j - 1) / 2);
            if lo > hi {
                continue;
            }
            let mut inner = BigUint::zero();
            for m1 in lo..=hi {
                let c = self.count(j, m1);
                if c.is_zero() {
                    continue;
                }
                inner += c * self.binomial(rest_pairs, m - m1);
            }
            if !inner.is_zero() {
                total -= binomial(k - 1, j - 1) * inner;
            }
        }
        self.counts.insert((k, m), total.clone());
        total
    }

    fn binomial(&mut self, n: u64, r: u64) -> BigUint {
        if r > n {
            return BigUint::zero();
        }
        let row = self
            .binomials
            .entry(n)
            .or_insert_with(|| vec![BigUint::from(1u32)]);
        while (row.len() as u64) <= r {
            let i = row.len() as u64;
            let next = row.last().unwrap() * (n - i + 1) / i;
            row.push(next);
        }
        row[r as usize].clone()
    }
}
