//! Ordinary, trivial and easy leaves.

use super::Engine;
use crate::bigcount::BigCount;
use crate::error::{Error, Result};
use crate::sf_iter::{iterate_squarefree, max_depth};

/// How a special leaf (m, b) is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafClass {
    /// φ(x/(m·p_b), b−1) = 1.
    Trivial,
    /// φ(x/(m·p_b), b−1) = π(x/(m·p_b)) − b + 2.
    Easy,
    /// Read from the block sieve.
    Hard,
}

impl Engine {
    /// Σ μ(n)·φ(x/n, c) over squarefree n ≤ y_max with p_min(n) > p_c.
    pub fn ordinary_leaves(&self) -> BigCount {
        let c = self.params.c;
        let wheel = &self.tables.wheel;
        let mut s = 0i128;
        iterate_squarefree(self.primes(), c, 1, self.params.y_max, |it| {
            s += it.mu as i128 * wheel.phi(self.u.div(it.m)) as i128;
        });
        BigCount(s)
    }

    /// Class of the special leaf (m, b); errors if (m, b) is not one.
    pub fn classify_special_leaf(&self, m: u64, b: usize) -> Result<LeafClass> {
        let c = self.params.c;
        if b <= c || b > self.k {
            return Err(Error::arg(format!("leaf index {b} outside ({c}, {}]", self.k)));
        }
        let bounds = self.bounds(b);
        let p = self.tables.primes.prime(b);
        if m <= bounds.special_above || m > self.params.y_max || m == 1 {
            return Err(Error::arg(format!("({m}, {b}) is not a special leaf")));
        }
        let mut rest = m;
        for &q in self.primes() {
            if q * q > rest {
                break;
            }
            if rest.is_multiple_of(q) {
                rest /= q;
                if q <= p || rest.is_multiple_of(q) {
                    return Err(Error::arg(format!("({m}, {b}) is not a special leaf")));
                }
            }
        }
        if rest > 1 && (rest <= p || self.prime_index_le(rest.min(self.params.y_max)) == 0) {
            return Err(Error::arg(format!("({m}, {b}) is not a special leaf")));
        }
        if rest > self.tables.primes.prime(self.k) {
            return Err(Error::arg(format!("({m}, {b}) has a factor beyond p_k")));
        }
        Ok(if m > bounds.trivial_above {
            LeafClass::Trivial
        } else if m > bounds.hard_upto {
            LeafClass::Easy
        } else {
            LeafClass::Hard
        })
    }

    /// Trivial plus easy leaves for one b.
    pub(crate) fn easy_leaves_at(&self, b: usize) -> i128 {
        let y = self.params.y_max;
        let bounds = self.bounds(b);
        let p = self.tables.primes.prime(b);
        let primes = self.primes();
        let mut s = 0i128;

        let easy_lo = bounds.special_above.max(bounds.hard_upto) + 1;
        let easy_hi = bounds.trivial_above;
        if easy_lo <= easy_hi {
            let shift = b as i128 - 2 - self.params.easy_leaf_fault as i128;
            iterate_squarefree(primes, b, easy_lo, easy_hi, |it| {
                let zl = self.u.div2(it.m, p) as u64;
                let v = self.tables.pi(zl) as i128 - shift;
                s -= it.mu as i128 * v;
            });
        }

        let triv_lo = bounds.special_above.max(bounds.trivial_above) + 1;
        if triv_lo <= y {
            if max_depth(primes, b, y) <= 1 {
                // Only primes p_j, j > b, fit below y_max here.
                let above = self.prime_index_le(triv_lo - 1).max(b);
                let upto = self.prime_index_le(y);
                s += upto.saturating_sub(above) as i128;
            } else {
                iterate_squarefree(primes, b, triv_lo, y, |it| s -= it.mu as i128);
            }
        }
        s
    }

    /// Trivial and easy leaves for every b ∈ (c, k] accepted by `keep`.
    pub fn easy_leaves(&self, keep: impl Fn(usize) -> bool) -> BigCount {
        BigCount(
            (self.params.c + 1..=self.k)
                .filter(|&b| keep(b))
                .map(|b| self.easy_leaves_at(b))
                .sum(),
        )
    }
}
