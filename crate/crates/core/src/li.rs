//! The logarithmic integral, for comparing π(x) with li(x).

use crate::error::{Error, Result};

/// Euler–Mascheroni constant to 30 digits.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082;

/// li(x) = γ + ln ln x + Σ_{k≥1} (ln x)^k / (k·k!), for x > 1.
pub fn li(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 1.0 || x.is_infinite() {
        return Err(Error::arg(format!("li is defined here only for finite x > 1, got {x}")));
    }
    let l = x.ln();
    let mut sum = Neumaier::default();
    sum.add(EULER_GAMMA);
    sum.add(l.ln());
    let mut power = 1.0; // (ln x)^k / k!
    let mut k = 1u32;
    loop {
        power *= l / k as f64;
        let term = power / k as f64;
        sum.add(term);
        if k as f64 > l && term < 1e-17 * sum.value().abs().max(1.0) {
            break;
        }
        k += 1;
    }
    Ok(sum.value())
}

/// Kahan–Babuška–Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}
