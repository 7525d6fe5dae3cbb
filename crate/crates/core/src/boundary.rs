//! φ(m0, b) for every c ≤ b ≤ a at an arbitrary start point m0.
//!
//! A job that sieves [lo, hi) needs φ(lo − 1, b) as its starting values.
//! They come from φ(m, b) = φ(m, b−1) − φ(m/p_b, b−1), seeded by the
//! wheel and closed off in three regimes:
//!
//! * p_{b−1}² ≤ m/p_b: φ(m/p_b, b−1) from a smaller combinatorial run;
//! * otherwise Legendre: φ(m/p_b, b−1) = π(m/p_b) − b + 2;
//! * b > π(√m): φ(m, b) = φ(m, b−1) − 1, down to 1 once p_b > m.

use crate::bigcount::BigCount;
use crate::engine::{count_primes, Engine};
use crate::error::{Error, Result};
use crate::oracle;

/// Deepest nesting of sub-computations before giving up.
pub const MAX_DEPTH: u32 = 8;

/// Sub-problems below this are handed to the oracle.
pub const NAIVE_BELOW: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiBoundary {
    pub m0: u64,
    c: usize,
    values: Vec<i128>,
}

impl PhiBoundary {
    pub fn c(&self) -> usize {
        self.c
    }

    /// Largest index covered.
    pub fn a(&self) -> usize {
        self.c + self.values.len() - 1
    }

    /// φ(m0, b) for c ≤ b ≤ a.
    pub fn get(&self, b: usize) -> i128 {
        self.values[b - self.c]
    }

    /// values()[i] = φ(m0, c + i).
    pub fn values(&self) -> &[i128] {
        &self.values
    }
}

pub fn phi_boundary(engine: &Engine, m0: u64) -> Result<PhiBoundary> {
    phi_boundary_at(engine, m0, 0)
}

fn phi_boundary_at(engine: &Engine, m0: u64, depth: u32) -> Result<PhiBoundary> {
    let params = engine.params();
    let tables = engine.tables();
    let (c, a, y) = (params.c, engine.k(), params.y_max);
    let pt = &tables.primes;
    let mut values = vec![0i128; a - c + 1];
    if m0 == 0 {
        return Ok(PhiBoundary { m0, c, values });
    }
    let wheel = &tables.wheel;
    values[0] = wheel.phi(m0 as u128) as i128;
    if a == c {
        return Ok(PhiBoundary { m0, c, values });
    }
    values[1] = values[0] - wheel.phi((m0 / pt.prime(c + 1)) as u128) as i128;

    let r = isqrt(m0);
    let pi_root = if r <= y { (tables.pi(r) as usize).min(a) } else { a };
    for b in c + 2..=pi_root {
        let p = pt.prime(b);
        let q = pt.prime(b - 1);
        let u = m0 / p;
        let phi_u = if q * q <= u {
            phi_sub(engine, u, b - 1, depth + 1)?
        } else {
            let pi_u = if u <= y {
                tables.pi(u) as i128
            } else {
                count_primes(u as u128)?.get()
            };
            pi_u - b as i128 + 2
        };
        values[b - c] = values[b - c - 1] - phi_u;
    }

    let tail_from = (c + 2).max(pi_root + 1);
    let pi_m0 = if m0 < y { tables.pi(m0) as usize } else { usize::MAX };
    for b in tail_from..=a {
        values[b - c] = if b <= pi_m0 { values[b - c - 1] - 1 } else { 1 };
    }
    Ok(PhiBoundary { m0, c, values })
}

/// φ(u, k) for p_k² ≤ u.
fn phi_sub(engine: &Engine, u: u64, k: usize, depth: u32) -> Result<i128> {
    if depth > MAX_DEPTH {
        return Err(Error::Resource(format!(
            "φ({u}, {k}) nests deeper than {MAX_DEPTH} levels"
        )));
    }
    if u < NAIVE_BELOW {
        return Ok(oracle::phi_naive(u, k)? as i128);
    }
    if k <= engine.params().c {
        return Ok(engine.tables().wheel.phi(u as u128) as i128);
    }
    engine.sub_phi(u, k).map(BigCount::get)
}

fn isqrt(n: u64) -> u64 {
    crate::arith::isqrt(n as u128) as u64
}
