//! Randomised comparison of the engine against the oracle under several
//! parameter sets.

use rand::{Rng, SeedableRng};

use crate::engine::{pi, select_params, Overrides};
use crate::error::{Error, Result};
use crate::oracle::{pi_naive_many, ORACLE_CEILING};
use crate::tables::Ratio;

/// (α, c, L) triples every sample is checked under.
pub const TRIPLES: [(u64, usize, u32); 3] = [(1, 1, 6), (2, 3, 8), (4, 6, 10)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub x: u64,
    pub alpha: u64,
    pub c: usize,
    pub block_log: u32,
    pub expected: u64,
    pub got: i128,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub trials: usize,
    pub checks: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Checks `trials` uniform x ∈ [2, limit] under every triple. A non-zero
/// `easy_leaf_fault` deliberately breaks the engine.
pub fn verify(limit: u64, trials: usize, seed: u64, easy_leaf_fault: i64) -> Result<VerifyReport> {
    if !(2..=ORACLE_CEILING).contains(&limit) {
        return Err(Error::arg(format!("limit {limit} outside [2, {ORACLE_CEILING}]")));
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let xs: Vec<u64> = (0..trials).map(|_| rng.gen_range(2..=limit)).collect();
    let expected = pi_naive_many(&xs)?;
    let mut report = VerifyReport {
        trials,
        ..Default::default()
    };
    for (&x, &want) in xs.iter().zip(&expected) {
        for &(alpha, c, block_log) in &TRIPLES {
            let ov = Overrides {
                alpha: Some(Ratio::integer(alpha)),
                c: Some(c),
                block_log: Some(block_log),
                ..Default::default()
            };
            let mut params = select_params(x as u128, &ov)?;
            params.easy_leaf_fault = easy_leaf_fault;
            let got = pi(&params)?.get();
            report.checks += 1;
            if got != want as i128 {
                report.mismatches.push(Mismatch {
                    x,
                    alpha,
                    c,
                    block_log,
                    expected: want,
                    got,
                });
            }
        }
    }
    Ok(report)
}
