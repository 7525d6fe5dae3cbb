//! Brute-force reference implementations.
//!
//! Everything here is deliberately plain: a segmented sieve of
//! Eratosthenes, direct coprimality scans and enumeration. These functions
//! seed the tables and serve as the correctness reference for every other
//! module, so none of them share code with the fast paths.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Largest span (and largest argument) the oracle accepts per call.
pub const ORACLE_CEILING: u64 = 1_000_000_000;

const STRIP: u64 = 1 << 20;
const PHI_DIRECT_LIMIT: u64 = 10_000_000;

/// Primality of every integer in `[lo, lo + len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimalityBitmap {
    lo: u64,
    len: u64,
    words: Vec<u64>,
}

impl PrimalityBitmap {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Whether `n` is prime; `n` must lie in the bitmap's range.
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(n >= self.lo && n - self.lo < self.len, "{n} outside bitmap");
        let i = n - self.lo;
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let base = self.lo + wi as u64 * 64;
            BitIter(w).map(move |bit| base + bit as u64)
        })
    }

    fn set(&mut self, i: u64) {
        self.words[(i / 64) as usize] |= 1 << (i % 64);
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let t = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(t)
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// All primes `≤ n` by an unsegmented sieve; only used for small `n`.
fn small_primes(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Marks primes of `[lo, hi)` into `is_prime`, which has length `hi - lo`.
fn sieve_strip(lo: u64, hi: u64, base: &[u64], is_prime: &mut [bool]) {
    is_prime.iter_mut().for_each(|v| *v = true);
    for n in lo..hi.min(2) {
        is_prime[(n - lo) as usize] = false;
    }
    for &p in base {
        if p * p >= hi {
            break;
        }
        let mut j = (p * p).max(lo.div_ceil(p) * p);
        while j < hi {
            is_prime[(j - lo) as usize] = false;
            j += p;
        }
    }
}

/// Primality bitmap of `[lo, hi)`.
pub fn sieve_range(lo: u64, hi: u64) -> Result<PrimalityBitmap> {
    if hi <= lo {
        return Err(Error::arg(format!("empty range [{lo}, {hi})")));
    }
    if hi - lo > ORACLE_CEILING {
        return Err(Error::Resource(format!(
            "oracle span {} exceeds {ORACLE_CEILING}",
            hi - lo
        )));
    }
    let len = hi - lo;
    let mut bm = PrimalityBitmap {
        lo,
        len,
        words: vec![0; len.div_ceil(64) as usize],
    };
    let base = small_primes(isqrt(hi - 1));
    let mut strip = vec![false; STRIP as usize];
    let mut s = lo;
    while s < hi {
        let e = (s + STRIP).min(hi);
        let buf = &mut strip[..(e - s) as usize];
        sieve_strip(s, e, &base, buf);
        for (i, &p) in buf.iter().enumerate() {
            if p {
                bm.set(s - lo + i as u64);
            }
        }
        s = e;
    }
    Ok(bm)
}

/// Number of primes `≤ x`, counted one by one.
pub fn pi_naive(x: u64) -> Result<u64> {
    Ok(pi_naive_many(&[x])?[0])
}

/// π at each of `xs` in a single sweep; output follows input order.
pub fn pi_naive_many(xs: &[u64]) -> Result<Vec<u64>> {
    let Some(&max) = xs.iter().max() else {
        return Ok(Vec::new());
    };
    if max > ORACLE_CEILING {
        return Err(Error::Resource(format!(
            "oracle argument {max} exceeds {ORACLE_CEILING}"
        )));
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by_key(|&i| xs[i]);
    let mut out = vec![0; xs.len()];
    let base = small_primes(isqrt(max));
    let mut strip = vec![false; STRIP as usize];
    let mut count = 0u64;
    let mut next = 0;
    let mut s = 0u64;
    while next < order.len() {
        let e = (s + STRIP).min(max + 1);
        let buf = &mut strip[..(e - s) as usize];
        sieve_strip(s, e, &base, buf);
        for (i, &p) in buf.iter().enumerate() {
            count += p as u64;
            let n = s + i as u64;
            while next < order.len() && xs[order[next]] == n {
                out[order[next]] = count;
                next += 1;
            }
        }
        s = e;
    }
    Ok(out)
}

/// The first `b` primes (fewer if `b` exceeds the primes below `limit`).
fn first_primes(b: usize, limit: u64) -> Vec<u64> {
    let mut bound = 64u64;
    loop {
        let ps = small_primes(bound.min(limit));
        if ps.len() >= b || bound >= limit {
            return ps.into_iter().take(b).collect();
        }
        bound *= 4;
    }
}

/// φ(m, b): integers in `[1, m]` with no prime factor among the first `b` primes.
pub fn phi_naive(m: u64, b: usize) -> Result<u64> {
    if m > ORACLE_CEILING {
        return Err(Error::Resource(format!(
            "oracle argument {m} exceeds {ORACLE_CEILING}"
        )));
    }
    if b == 0 || m == 0 {
        return Ok(m);
    }
    if m <= PHI_DIRECT_LIMIT {
        let primes = first_primes(b, m);
        return Ok(phi_scan(m, &primes));
    }
    let primes = first_primes(b, isqrt(m) + 1);
    let mut memo = HashMap::new();
    phi_recursive(m, b, &primes, &mut memo)
}

/// Direct coprimality scan of `[1, m]` against `primes`.
fn phi_scan(m: u64, primes: &[u64]) -> u64 {
    let m = m as usize;
    let mut hit = vec![false; m + 1];
    for &p in primes {
        let p = p as usize;
        if p > m {
            break;
        }
        for j in (p..=m).step_by(p) {
            hit[j] = true;
        }
    }
    hit[1..].iter().filter(|&&h| !h).count() as u64
}

/// φ(m, b) = φ(m, b−1) − φ(⌊m/p_b⌋, b−1), bottoming out in direct scans.
/// `primes` holds every prime up to √m (possibly fewer than `b`).
fn phi_recursive(
    m: u64,
    b: usize,
    primes: &[u64],
    memo: &mut HashMap<(u64, usize), u64>,
) -> Result<u64> {
    if b == 0 || m == 0 {
        return Ok(m);
    }
    if b > primes.len() || primes[b - 1] * primes[b - 1] > m {
        // Every survivor above 1 is a prime larger than p_b.
        let pi_m = pi_naive(m)?;
        return Ok(1 + pi_m.saturating_sub(b as u64));
    }
    if m <= PHI_DIRECT_LIMIT {
        return Ok(phi_scan(m, &primes[..b]));
    }
    if let Some(&v) = memo.get(&(m, b)) {
        return Ok(v);
    }
    let v = phi_recursive(m, b - 1, primes, memo)?
        - phi_recursive(m / primes[b - 1], b - 1, primes, memo)?;
    memo.insert((m, b), v);
    Ok(v)
}

/// φ(m, b) for every `b` in `0..=b_max` from one incremental scan.
pub fn phi_naive_profile(m: u64, b_max: usize) -> Result<Vec<u64>> {
    if m > ORACLE_CEILING {
        return Err(Error::Resource(format!(
            "oracle argument {m} exceeds {ORACLE_CEILING}"
        )));
    }
    let primes = first_primes(b_max, m.max(2));
    let mut alive = vec![true; m as usize + 1];
    alive[0] = false;
    let mut count = m;
    let mut out = Vec::with_capacity(b_max + 1);
    out.push(count);
    for b in 1..=b_max {
        if let Some(&p) = primes.get(b - 1) {
            let mut j = p;
            while j <= m {
                if alive[j as usize] {
                    alive[j as usize] = false;
                    count -= 1;
                }
                j += p;
            }
        }
        out.push(count);
    }
    Ok(out)
}

/// Number of `n ≤ x` of the form `p·q` with primes `y < p ≤ q`.
pub fn p2_naive(x: u64, y: u64) -> Result<u64> {
    let r = isqrt(x);
    if y >= r {
        return Ok(0);
    }
    let ps: Vec<u64> = sieve_range(y + 1, r + 1)?.primes().collect();
    let mut points = Vec::with_capacity(2 * ps.len());
    for &p in &ps {
        points.push(x / p);
        points.push(p);
    }
    let pis = pi_naive_many(&points)?;
    Ok(pis
        .chunks(2)
        .map(|pair| pair[0] - pair[1] + 1)
        .sum())
}
