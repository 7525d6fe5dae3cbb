use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

/// Signed count wide enough for π(2^86) and every intermediate sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BigCount(pub i128);

impl BigCount {
    pub const ZERO: BigCount = BigCount(0);

    pub fn get(self) -> i128 {
        self.0
    }
}

impl From<i128> for BigCount {
    fn from(v: i128) -> Self {
        BigCount(v)
    }
}

impl From<i64> for BigCount {
    fn from(v: i64) -> Self {
        BigCount(v as i128)
    }
}

impl From<u64> for BigCount {
    fn from(v: u64) -> Self {
        BigCount(v as i128)
    }
}

impl TryFrom<u128> for BigCount {
    type Error = std::num::TryFromIntError;

    fn try_from(v: u128) -> Result<Self, Self::Error> {
        i128::try_from(v).map(BigCount)
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for BigCount {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<i128>().map(BigCount)
    }
}

impl Add for BigCount {
    type Output = BigCount;
    fn add(self, rhs: BigCount) -> BigCount {
        BigCount(self.0 + rhs.0)
    }
}

impl Sub for BigCount {
    type Output = BigCount;
    fn sub(self, rhs: BigCount) -> BigCount {
        BigCount(self.0 - rhs.0)
    }
}

impl Mul<i128> for BigCount {
    type Output = BigCount;
    fn mul(self, rhs: i128) -> BigCount {
        BigCount(self.0 * rhs)
    }
}

impl Neg for BigCount {
    type Output = BigCount;
    fn neg(self) -> BigCount {
        BigCount(-self.0)
    }
}

impl AddAssign for BigCount {
    fn add_assign(&mut self, rhs: BigCount) {
        self.0 += rhs.0;
    }
}

impl SubAssign for BigCount {
    fn sub_assign(&mut self, rhs: BigCount) {
        self.0 -= rhs.0;
    }
}

impl Sum for BigCount {
    fn sum<I: Iterator<Item = BigCount>>(iter: I) -> BigCount {
        iter.fold(BigCount::ZERO, Add::add)
    }
}
