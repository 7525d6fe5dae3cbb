//! Enumeration of the squarefree m whose prime factors all have index > b.
//!
//! This replaces stored p_min(m) and μ(m) arrays. The values are produced
//! depth by depth (primes, then products of two primes, ...) with the
//! prime indices of each product strictly increasing, so every m appears
//! once and μ(m) = (−1)^depth is known without factoring.

/// One squarefree value produced by [`iterate_squarefree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SquarefreeItem {
    pub m: u64,
    pub mu: i8,
    /// 1-based index of the smallest prime factor, 0 for m = 1.
    pub b1: usize,
    /// Number of prime factors.
    pub depth: u32,
}

/// Product of `primes[start..start + count]` if it stays within `bound`.
#[inline]
fn run_product_within(primes: &[u64], start: usize, count: usize, bound: u64) -> bool {
    if start + count > primes.len() {
        return false;
    }
    let mut prod = 1u64;
    for &p in &primes[start..start + count] {
        match prod.checked_mul(p) {
            Some(v) if v <= bound => prod = v,
            _ => return false,
        }
    }
    true
}

/// Largest n with p_{b+1}·p_{b+2}⋯p_{b+n} ≤ bound.
pub fn max_depth(primes: &[u64], b: usize, bound: u64) -> u32 {
    let mut prod = 1u64;
    let mut n = 0;
    for &p in primes.iter().skip(b) {
        match prod.checked_mul(p) {
            Some(v) if v <= bound => {
                prod = v;
                n += 1;
            }
            _ => break,
        }
    }
    n
}

/// Calls `visit` once for every squarefree m in `[m_lo, m_hi]` whose prime
/// factors are all among `primes[b..]` (1-based indices b+1, b+2, ...).
/// m = 1 is included when it lies in the range.
///
/// Each depth is walked with an explicit stack of (index, partial product)
/// pairs. A level stops as soon as its running product leaves no room for
/// the remaining factors below `m_hi`; on the innermost level the start
/// index jumps directly to the first prime that reaches `m_lo`.
pub fn iterate_squarefree<F>(primes: &[u64], b: usize, m_lo: u64, m_hi: u64, mut visit: F)
where
    F: FnMut(SquarefreeItem),
{
    let m_lo = m_lo.max(1);
    if m_lo > m_hi {
        return;
    }
    if m_lo == 1 {
        visit(SquarefreeItem {
            m: 1,
            mu: 1,
            b1: 0,
            depth: 0,
        });
    }
    let deepest = max_depth(primes, b, m_hi) as usize;
    let mut stack: Vec<(usize, u64)> = Vec::with_capacity(deepest);
    for depth in 1..=deepest {
        let mu: i8 = if depth % 2 == 0 { 1 } else { -1 };
        stack.clear();
        let mut next = b;
        loop {
            let level = stack.len();
            let prefix = stack.last().map_or(1, |e| e.1);
            if level + 1 == depth {
                let budget = m_hi / prefix;
                let need = m_lo.div_ceil(prefix);
                let tail = &primes[next..];
                let start = next + tail.partition_point(|&p| p < need);
                let b1 = stack.first().map_or(0, |e| e.0);
                for (k, &p) in primes.iter().enumerate().skip(start) {
                    if p > budget {
                        break;
                    }
                    visit(SquarefreeItem {
                        m: prefix * p,
                        mu,
                        b1: if level == 0 { k + 1 } else { b1 + 1 },
                        depth: depth as u32,
                    });
                }
            } else if next < primes.len() {
                let p = primes[next];
                let remaining = depth - level - 1;
                if let Some(prod) = prefix.checked_mul(p).filter(|&v| v <= m_hi) {
                    if run_product_within(primes, next + 1, remaining, m_hi / prod) {
                        stack.push((next, prod));
                        next += 1;
                        continue;
                    }
                }
            }
            // Level exhausted: advance the parent.
            match stack.pop() {
                Some((idx, _)) => next = idx + 1,
                None => break,
            }
        }
    }
}
