//! Exact integer roots.

pub(crate) fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u128;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

pub(crate) fn icbrt(n: u128) -> u128 {
    let cube = |r: u128| r.checked_mul(r).and_then(|s| s.checked_mul(r));
    let mut r = (n as f64).cbrt() as u128;
    while cube(r).is_none_or(|c| c > n) {
        r -= 1;
    }
    while cube(r + 1).is_some_and(|c| c <= n) {
        r += 1;
    }
    r
}

pub(crate) fn icbrt_ceil(n: u128) -> u128 {
    let r = icbrt(n);
    if r * r * r == n {
        r
    } else {
        r + 1
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `x` together with a 64-bit copy when it fits, so the hot divisions
/// stay in 64-bit arithmetic.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dividend {
    wide: u128,
    narrow: Option<u64>,
}

impl Dividend {
    pub fn new(x: u128) -> Self {
        Dividend {
            wide: x,
            narrow: u64::try_from(x).ok(),
        }
    }

    #[inline]
    pub fn div(self, d: u64) -> u128 {
        match self.narrow {
            Some(x) => (x / d) as u128,
            None => self.wide / d as u128,
        }
    }

    /// ⌊x / (d1·d2)⌋ without forming the product.
    #[inline]
    pub fn div2(self, d1: u64, d2: u64) -> u128 {
        match self.narrow {
            Some(x) => (x / d1 / d2) as u128,
            None => self.wide / d1 as u128 / d2 as u128,
        }
    }

    #[inline]
    pub fn div3(self, d1: u64, d2: u64, d3: u64) -> u128 {
        match self.narrow {
            Some(x) => (x / d1 / d2 / d3) as u128,
            None => self.wide / d1 as u128 / d2 as u128 / d3 as u128,
        }
    }
}
