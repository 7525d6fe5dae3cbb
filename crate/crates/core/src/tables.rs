//! Parameter set and the immutable lookup tables shared by every stage:
//! the sieving primes, a stride-compressed π table and the wheel.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::oracle;

/// A positive rational, used for the tuning factor α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::arg(format!("ratio {num}/{den} must be positive")));
        }
        let g = crate::arith::gcd(num, den);
        Ok(Ratio {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(n: u64) -> Self {
        Ratio { num: n.max(1), den: 1 }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Ratio {
    type Err = Error;

    /// Accepts `3`, `2.5` or `5/2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::arg(format!("cannot parse ratio {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            return Ratio::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
        }
        match s.split_once('.') {
            None => Ratio::new(s.parse().map_err(|_| bad())?, 1),
            Some((int, frac)) => {
                if frac.len() > 9 || !frac.chars().all(|ch| ch.is_ascii_digit()) {
                    return Err(bad());
                }
                let den = 10u64.pow(frac.len() as u32);
                let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
                let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
                let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
                Ratio::new(num, den)
            }
        }
    }
}

/// Every tuning constant of one π(x) computation plus the bounds derived from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Params {
    pub x: u128,
    /// Leaf bound and largest sieving prime; y_max = α·x^{1/3}, clamped.
    pub y_max: u64,
    /// π(y_max).
    pub a: usize,
    pub alpha: Ratio,
    /// Number of primes folded into the wheel. Zero marks the small-x path.
    pub c: usize,
    /// log₂ of the sieve block length.
    pub block_log: u32,
    pub sqrt_x: u64,
    /// ⌊x / y_max⌋, the upper end of the sieve.
    pub z: u64,
    pub threads: usize,
    pub packed_counters: bool,
    /// Route every non-trivial special leaf through the sieve.
    #[doc(hidden)]
    pub force_hard: bool,
    /// Added to every easy-leaf value; non-zero only to prove that
    /// verification notices a broken engine.
    #[doc(hidden)]
    pub easy_leaf_fault: i64,
}

impl Params {
    /// Below this x the engine defers to the oracle.
    pub const SMALL_X: u128 = 10_000;

    pub fn is_small(&self) -> bool {
        self.x < Self::SMALL_X || self.c == 0
    }

    pub fn block_len(&self) -> u64 {
        1 << self.block_log
    }
}

/// p_1 < p_2 < ... < p_a, every prime up to y_max.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    primes: Vec<u64>,
    y_max: u64,
}

impl PrimeTable {
    pub fn y_max(&self) -> u64 {
        self.y_max
    }

    /// a = π(y_max).
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// The b-th prime, 1-indexed.
    #[inline]
    pub fn prime(&self, b: usize) -> u64 {
        self.primes[b - 1]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.primes
    }
}

pub fn build_prime_table(y_max: u64) -> Result<PrimeTable> {
    if y_max < 2 {
        return Err(Error::arg(format!("y_max = {y_max} must be at least 2")));
    }
    if y_max >= oracle::ORACLE_CEILING {
        return Err(Error::Resource(format!(
            "prime table up to {y_max} exceeds the supported size"
        )));
    }
    let primes = oracle::sieve_range(0, y_max + 1)?.primes().collect();
    Ok(PrimeTable { primes, y_max })
}

/// π sampled at multiples of d = ⌊log₂ y_max⌋; the gaps are filled by a
/// short forward scan of the prime table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePiTable {
    stride: u64,
    grid: Vec<u64>,
    y_max: u64,
}

impl SparsePiTable {
    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn grid(&self) -> &[u64] {
        &self.grid
    }

    pub fn y_max(&self) -> u64 {
        self.y_max
    }

    /// Exact π(y) for y ≤ y_max.
    pub fn lookup(&self, pt: &PrimeTable, y: u64) -> Result<u64> {
        if y > self.y_max {
            return Err(Error::arg(format!("π lookup at {y} beyond y_max = {}", self.y_max)));
        }
        Ok(self.get(pt, y))
    }

    /// π(y) and the number of prime-table probes it took.
    pub fn lookup_counting(&self, pt: &PrimeTable, y: u64) -> Result<(u64, u32)> {
        if y > self.y_max {
            return Err(Error::arg(format!("π lookup at {y} beyond y_max = {}", self.y_max)));
        }
        let mut b = self.grid[(y / self.stride) as usize] as usize + 1;
        let mut probes = 0;
        while b <= pt.len() {
            probes += 1;
            if pt.prime(b) > y {
                break;
            }
            b += 1;
        }
        Ok(((b - 1) as u64, probes))
    }

    #[inline]
    pub(crate) fn get(&self, pt: &PrimeTable, y: u64) -> u64 {
        debug_assert!(y <= self.y_max);
        let primes = pt.as_slice();
        let mut i = self.grid[(y / self.stride) as usize] as usize;
        while i < primes.len() && primes[i] <= y {
            i += 1;
        }
        i as u64
    }
}

pub fn build_sparse_pi(pt: &PrimeTable) -> SparsePiTable {
    let y_max = pt.y_max();
    let stride = (63 - y_max.max(1).leading_zeros() as u64).max(2);
    let cells = (y_max / stride + 1) as usize;
    let mut grid = Vec::with_capacity(cells);
    let mut count = 0;
    let mut it = pt.as_slice().iter().peekable();
    for k in 0..cells as u64 {
        let at = k * stride;
        while it.next_if(|&&p| p <= at).is_some() {
            count += 1;
        }
        grid.push(count);
    }
    SparsePiTable { stride, grid, y_max }
}

/// The first `c` primes, their product W and φ(r, c) for every residue r.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wheel {
    c: usize,
    modulus: u64,
    phi_w: u64,
    cum: Vec<u32>,
    coprime: Vec<bool>,
}

const WHEEL_PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

pub fn build_wheel(c: usize) -> Result<Wheel> {
    if !(1..=WHEEL_PRIMES.len()).contains(&c) {
        return Err(Error::arg(format!("wheel size c = {c} outside 1..=8")));
    }
    let ps = &WHEEL_PRIMES[..c];
    let modulus: u64 = ps.iter().product();
    let w = modulus as usize;
    let mut coprime = vec![true; w];
    for &p in ps {
        for j in (0..w).step_by(p as usize) {
            coprime[j] = false;
        }
    }
    let mut cum = Vec::with_capacity(w + 1);
    let mut acc = 0u32;
    cum.push(0);
    for r in 1..=w {
        acc += coprime[r % w] as u32;
        cum.push(acc);
    }
    Ok(Wheel {
        c,
        modulus,
        phi_w: acc as u64,
        cum,
        coprime,
    })
}

impl Wheel {
    pub fn c(&self) -> usize {
        self.c
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn phi_w(&self) -> u64 {
        self.phi_w
    }

    pub fn cum(&self) -> &[u32] {
        &self.cum
    }

    /// φ(m, c) in constant time.
    #[inline]
    pub fn phi(&self, m: u128) -> u128 {
        let w = self.modulus as u128;
        (m / w) * self.phi_w as u128 + self.cum[(m % w) as usize] as u128
    }

    /// coprime[r] for r in 0..W.
    pub(crate) fn coprime(&self) -> &[bool] {
        &self.coprime
    }

    #[inline]
    pub fn is_coprime(&self, n: u64) -> bool {
        self.coprime[(n % self.modulus) as usize]
    }

    /// Heap bytes held by the wheel.
    pub fn bytes(&self) -> usize {
        self.cum.len() * std::mem::size_of::<u32>() + self.coprime.len()
    }
}

/// Prime table, sparse π table and wheel for one parameter set.
#[derive(Debug, Clone)]
pub struct Tables {
    pub primes: PrimeTable,
    pub pi: SparsePiTable,
    pub wheel: Wheel,
}

impl Tables {
    pub fn build(y_max: u64, c: usize) -> Result<Self> {
        let primes = build_prime_table(y_max)?;
        let pi = build_sparse_pi(&primes);
        let wheel = build_wheel(c)?;
        Ok(Tables { primes, pi, wheel })
    }

    /// π(y) for y ≤ y_max.
    #[inline]
    pub fn pi(&self, y: u64) -> u64 {
        self.pi.get(&self.primes, y)
    }
}
