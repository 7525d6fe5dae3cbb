//! The combinatorial core.
//!
//! π(x) = φ(x, a) + a − 1 − P2(x, a) with a = π(y_max). Expanding φ(x, a)
//! with φ(m, b) = φ(m, b−1) − φ(m/p_b, b−1) and stopping at the wheel size c
//! or once the accumulated divisor exceeds y_max leaves two kinds of terms:
//!
//! * ordinary leaves μ(n)·φ(x/n, c) for squarefree n ≤ y_max whose prime
//!   factors exceed p_c, read off the wheel;
//! * special leaves −μ(m)·φ(x/(m·p_b), b−1) with m ≤ y_max < m·p_b and
//!   p_min(m) > p_b. They are trivial (φ = 1), easy (Legendre's formula plus
//!   a sparse π lookup) or hard (read from the block sieve).
//!
//! P2 is gathered by the same sieve, which also identifies every prime up
//! to z = x / y_max.

mod leaves;
mod sieve;

use std::sync::Arc;

pub use leaves::LeafClass;
pub use sieve::{p2_from_outcomes, ChunkOutcome, TallySheet};

use crate::arith::{icbrt_ceil, isqrt, Dividend};
use crate::bigcount::BigCount;
use crate::counters::{CounterMode, CounterTree};
use crate::error::{Error, Result};
use crate::oracle;
use crate::tables::{build_wheel, Params, Ratio, Tables};

/// Largest x accepted anywhere in the crate.
pub const MAX_X: u128 = 1 << 86;

pub const MAX_THREADS: usize = 256;

/// Optional replacements for the default tuning constants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub alpha: Option<Ratio>,
    pub c: Option<usize>,
    pub block_log: Option<u32>,
    pub threads: Option<usize>,
    pub packed_counters: bool,
}

/// α = max(1, ⌊ln³x / 1500⌋).
pub fn default_alpha(x: u128) -> Ratio {
    let l = (x as f64).ln();
    Ratio::integer((l * l * l / 1500.0).floor().max(1.0) as u64)
}

pub const DEFAULT_WHEEL: usize = 6;

/// L = max(6, ⌈log₂x / 3⌉), so 2^L ≥ x^{1/3}.
pub fn default_block_log(x: u128) -> u32 {
    ((x as f64).log2() / 3.0).ceil().max(6.0) as u32
}

/// ⌈α·x^{1/3}⌉ clamped to [⌈x^{1/3}⌉, ⌊√x⌋].
fn leaf_bound(x: u128, alpha: Ratio) -> u64 {
    let lo = icbrt_ceil(x);
    let hi = isqrt(x);
    let num3 = (alpha.num as u128).checked_pow(3);
    let den3 = (alpha.den as u128).checked_pow(3);
    let candidate = match (num3.and_then(|n| x.checked_mul(n)), den3) {
        (Some(t), Some(d)) => icbrt_ceil(t.div_ceil(d)),
        _ => (alpha.as_f64() * (x as f64).cbrt()).ceil() as u128,
    };
    candidate.max(lo).min(hi).max(2) as u64
}

pub fn select_params(x: u128, ov: &Overrides) -> Result<Params> {
    if x < 2 {
        return Err(Error::arg(format!("x = {x} must be at least 2")));
    }
    if x > MAX_X {
        return Err(Error::Capacity(format!("x = {x} exceeds 2^86")));
    }
    if let Some(c) = ov.c {
        if !(1..=8).contains(&c) {
            return Err(Error::arg(format!("wheel size {c} outside 1..=8")));
        }
    }
    if let Some(l) = ov.block_log {
        if !(6..=31).contains(&l) {
            return Err(Error::arg(format!("block log {l} outside 6..=31")));
        }
    }
    let threads = ov.threads.unwrap_or(1);
    if threads == 0 || threads > MAX_THREADS {
        return Err(Error::arg(format!("thread count {threads} outside 1..={MAX_THREADS}")));
    }
    let alpha = ov.alpha.unwrap_or_else(|| default_alpha(x));
    let y_max = leaf_bound(x, alpha);
    if y_max >= oracle::ORACLE_CEILING {
        return Err(Error::Resource(format!("y_max = {y_max} too large for the prime table")));
    }
    let a = oracle::pi_naive(y_max)? as usize;
    let c = ov.c.unwrap_or(DEFAULT_WHEEL).min(a.saturating_sub(1));
    Ok(Params {
        x,
        y_max,
        a,
        alpha,
        c,
        block_log: ov.block_log.unwrap_or_else(|| default_block_log(x)),
        sqrt_x: isqrt(x) as u64,
        z: (x / y_max as u128) as u64,
        threads,
        packed_counters: ov.packed_counters,
        force_hard: false,
        easy_leaf_fault: 0,
    })
}

/// Parameters with an explicit leaf bound instead of α. `alpha` is set to 1
/// and does not describe `y_max`; such parameters cannot be used for jobs.
pub fn params_with_leaf_bound(x: u128, y_max: u64, c: usize, block_log: u32) -> Result<Params> {
    if !(2..=MAX_X).contains(&x) {
        return Err(Error::arg(format!("x = {x} outside [2, 2^86]")));
    }
    if y_max < 2 || y_max as u128 > isqrt(x) {
        return Err(Error::arg(format!("y_max = {y_max} outside [2, √x]")));
    }
    if !(1..=8).contains(&c) || !(6..=31).contains(&block_log) {
        return Err(Error::arg(format!("c = {c}, L = {block_log} out of range")));
    }
    let a = oracle::pi_naive(y_max)? as usize;
    Ok(Params {
        x,
        y_max,
        a,
        alpha: Ratio::integer(1),
        c: c.min(a.saturating_sub(1)),
        block_log,
        sqrt_x: isqrt(x) as u64,
        z: (x / y_max as u128) as u64,
        threads: 1,
        packed_counters: false,
        force_hard: false,
        easy_leaf_fault: 0,
    })
}

/// π(x) with the parameters (and thread count) in `params`.
pub fn pi(params: &Params) -> Result<BigCount> {
    crate::jobs::run_threads(params, params.threads)
}

/// π(x) with default parameters on one thread.
pub fn count_primes(x: u128) -> Result<BigCount> {
    pi(&select_params(x, &Overrides::default())?)
}

/// Bytes held by the main data structures, computed from the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub prime_table: usize,
    pub sparse_pi: usize,
    pub wheel: usize,
    /// Counter trees plus presence bitmaps, one pair per thread.
    pub counters: usize,
}

impl Footprint {
    pub fn total(&self) -> usize {
        self.prime_table + self.sparse_pi + self.wheel + self.counters
    }
}

pub fn footprint(params: &Params) -> Result<Footprint> {
    let y = params.y_max;
    let stride = (63 - y.leading_zeros() as u64).max(2);
    let mode = if params.packed_counters {
        CounterMode::Packed
    } else {
        CounterMode::Unpacked
    };
    let block = 1usize << params.block_log;
    let per_thread = CounterTree::bytes_for(params.block_log, mode) + block.div_ceil(64) * 8;
    Ok(Footprint {
        prime_table: params.a * 8,
        sparse_pi: (y / stride + 1) as usize * 8,
        wheel: if params.c == 0 { 0 } else { build_wheel(params.c)?.bytes() },
        counters: per_thread * params.threads,
    })
}

/// Per-b thresholds on m: special leaves have m > `special_above`,
/// hard ones m ≤ `hard_upto`, trivial ones m > `trivial_above`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LeafBounds {
    pub special_above: u64,
    pub hard_upto: u64,
    pub trivial_above: u64,
}

/// One instance of φ(u, k) = ordinary + special leaves, optionally also
/// counting primes up to z for P2.
#[derive(Debug, Clone)]
pub struct Engine {
    params: Params,
    tables: Arc<Tables>,
    u: Dividend,
    /// φ is taken over the first k primes; k = a at the top level.
    k: usize,
    /// Last prime index removed by the block sieve.
    b_sieve: usize,
    count_primes: bool,
    bounds: Vec<LeafBounds>,
}

impl Engine {
    pub fn new(params: Params) -> Result<Self> {
        if params.c == 0 || params.c > params.a {
            return Err(Error::arg(format!(
                "wheel size {} needs 1 ≤ c ≤ a = {}",
                params.c, params.a
            )));
        }
        let tables = Arc::new(Tables::build(params.y_max, params.c)?);
        let k = params.a;
        // P2 needs every prime ≤ √z in the table.
        let count_primes = isqrt(params.z as u128) as u64 <= params.y_max;
        Ok(Self::assemble(params, tables, k, count_primes))
    }

    /// Shares `tables` for a sub-problem φ(u, k) with leaf bound `params.y_max`.
    pub(crate) fn with_tables(params: Params, tables: Arc<Tables>, k: usize) -> Self {
        Self::assemble(params, tables, k, false)
    }

    fn assemble(params: Params, tables: Arc<Tables>, k: usize, count_primes: bool) -> Self {
        let u = Dividend::new(params.x);
        let pt = &tables.primes;
        let c = params.c;
        let z = params.z as u128;
        let mut b_sieve = c;
        for b in c + 1..=k {
            let p = pt.prime(b) as u128;
            let needed = p * p <= z || (params.force_hard && p * p * p <= params.x);
            if !needed {
                break;
            }
            b_sieve = b;
        }
        let y = params.y_max;
        let bounds = (c + 1..=k.max(c))
            .map(|b| {
                let p = pt.prime(b);
                let trivial_above = u.div2(p, p).min(y as u128) as u64;
                let hard_upto = if params.force_hard {
                    trivial_above
                } else {
                    let by_square = u.div3(p, p, p);
                    let by_table = u.div2(p, y + 1);
                    by_square.max(by_table).min(trivial_above as u128) as u64
                };
                LeafBounds {
                    special_above: y / p,
                    hard_upto,
                    trivial_above,
                }
            })
            .collect();
        Engine {
            params,
            tables,
            u,
            k,
            b_sieve,
            count_primes,
            bounds,
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    /// Number of primes the φ term runs over.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether sieve outcomes carry prime counts for P2.
    pub fn counts_primes(&self) -> bool {
        self.count_primes
    }

    pub fn sieve_limit_index(&self) -> usize {
        self.b_sieve
    }

    #[inline]
    pub(crate) fn bounds(&self, b: usize) -> LeafBounds {
        self.bounds[b - self.params.c - 1]
    }

    #[inline]
    pub(crate) fn primes(&self) -> &[u64] {
        &self.tables.primes.as_slice()[..self.k]
    }

    /// Number of primes ≤ v among the first k, for v ≤ y_max.
    #[inline]
    pub(crate) fn prime_index_le(&self, v: u64) -> usize {
        (self.tables.pi(v) as usize).min(self.k)
    }

    /// φ(u, k) computed on the current thread: S0 + easy + hard.
    pub fn phi(&self) -> Result<BigCount> {
        let s0 = self.ordinary_leaves();
        let easy = self.easy_leaves(|_| true);
        let zeros = vec![0i128; self.b_sieve - self.params.c + 1];
        let chunk = self.sieve_chunk(1, self.params.z + 1, &zeros)?;
        Ok(s0 + easy + chunk.s_hard)
    }

    /// Sub-problem φ(u, k) sharing this engine's tables, for the boundary
    /// bootstrap. Requires c < k and p_k ≤ √u.
    pub(crate) fn sub_phi(&self, u: u64, k: usize) -> Result<BigCount> {
        let c = self.params.c;
        if k <= c || k > self.params.a {
            return Err(Error::arg(format!("sub-problem index {k} outside ({c}, {}]", self.params.a)));
        }
        let x = u as u128;
        let pk = self.tables.primes.prime(k);
        let y = leaf_bound(x, self.params.alpha)
            .max(pk)
            .min(self.params.y_max);
        let sub = Params {
            x,
            y_max: y,
            a: self.tables.pi(y) as usize,
            alpha: self.params.alpha,
            c,
            block_log: default_block_log(x),
            sqrt_x: isqrt(x) as u64,
            z: u / y,
            threads: 1,
            packed_counters: self.params.packed_counters,
            force_hard: false,
            easy_leaf_fault: 0,
        };
        Engine::with_tables(sub, self.tables.clone(), k).phi()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_params_examples() {
        let one = Overrides {
            alpha: Some(Ratio::integer(1)),
            ..Default::default()
        };
        let p = select_params(1_000_000, &one).unwrap();
        assert_eq!((p.y_max, p.a), (100, 25));
        assert_eq!(p.z, 10_000);
        assert_eq!(p.c, 6);

        let two = Overrides {
            alpha: Some(Ratio::integer(2)),
            ..Default::default()
        };
        let p = select_params(1_000_000, &two).unwrap();
        assert_eq!((p.y_max, p.a), (200, 46));

        let p = select_params(8, &Overrides::default()).unwrap();
        assert_eq!((p.y_max, p.a, p.c), (2, 1, 0));
        assert!(p.is_small());
    }

    #[test]
    fn select_params_defaults() {
        let p = select_params(1_000_000, &Overrides::default()).unwrap();
        assert_eq!(p.block_log, 7);
        assert!(p.block_len() >= 64);
        assert!((p.y_max as u128).pow(3) >= p.x);
        assert!((p.y_max as u128).pow(2) <= p.x);
        let p = select_params(1u128 << 43, &Overrides::default()).unwrap();
        assert!(1u128 << (3 * p.block_log) >= p.x);
        assert!(p.z >= p.y_max);
    }

    #[test]
    fn select_params_rejects() {
        assert!(matches!(select_params(1, &Overrides::default()), Err(Error::Argument(_))));
        assert!(matches!(select_params(MAX_X + 1, &Overrides::default()), Err(Error::Capacity(_))));
        let bad_c = Overrides {
            c: Some(9),
            ..Default::default()
        };
        assert!(select_params(1_000_000, &bad_c).is_err());
        let bad_l = Overrides {
            block_log: Some(5),
            ..Default::default()
        };
        assert!(select_params(1_000_000, &bad_l).is_err());
        let bad_t = Overrides {
            threads: Some(0),
            ..Default::default()
        };
        assert!(select_params(1_000_000, &bad_t).is_err());
    }

    #[test]
    fn footprint_accounting() {
        let mut p = select_params(1_000_000_000, &Overrides::default()).unwrap();
        let t = Tables::build(p.y_max, p.c).unwrap();
        let f = footprint(&p).unwrap();
        assert_eq!(f.prime_table, t.primes.len() * 8);
        assert_eq!(f.sparse_pi, (p.y_max / t.pi.stride() + 1) as usize * 8);
        assert_eq!(f.sparse_pi, t.pi.grid().len() * 8);
        assert_eq!(f.wheel, t.wheel.bytes());
        p.packed_counters = true;
        let g = footprint(&p).unwrap();
        let tree = |f: &Footprint| f.counters - (1usize << p.block_log) / 8;
        assert!(2 * tree(&g) <= tree(&f));
        let totals: Vec<usize> = [10_000_000_000u128, 100_000_000_000, 1_000_000_000_000]
            .iter()
            .map(|&x| footprint(&select_params(x, &Overrides::default()).unwrap()).unwrap().total())
            .collect();
        assert!(totals.windows(2).all(|w| w[0] < w[1]), "{totals:?}");
    }

    #[test]
    fn fractional_alpha_rounds_up() {
        let ov = Overrides {
            alpha: Some("1.5".parse().unwrap()),
            ..Default::default()
        };
        assert_eq!(select_params(1_000_000, &ov).unwrap().y_max, 150);
        let ov = Overrides {
            alpha: Some("1.001".parse().unwrap()),
            ..Default::default()
        };
        assert_eq!(select_params(1_000_000, &ov).unwrap().y_max, 101);
    }
}
