//! Exact prime counting with the combinatorial method.
//!
//! π(x) is assembled from the partial sieve function φ(x, a) through the
//! identity π(x) = φ(x, a) + a − 1 − P2(x, a), where a = π(y_max). The
//! φ term is split into ordinary, easy and hard leaves; the hard leaves are
//! resolved by a block sieve over [1, x / y_max] backed by hierarchical
//! counters. Memory stays near O(x^{1/3} log² x): the π(y) table is kept
//! only at a stride of ⌊log₂ y_max⌋, the smallest-prime-factor and Möbius
//! tables are replaced by a squarefree enumerator, and the counters can be
//! packed to about two bits each.
//!
//! The sieve range can be cut into independent jobs ([`jobs::split_jobs`])
//! whose results merge exactly ([`jobs::merge_results`]); each job computes
//! its own starting values of φ with [`boundary::phi_boundary`].

mod arith;
pub mod bigcount;
pub mod boundary;
pub mod counters;
pub mod engine;
pub mod error;
pub mod jobs;
pub mod li;
pub mod oracle;
pub mod sf_iter;
pub mod tables;
pub mod verify;

pub use bigcount::BigCount;
pub use engine::{count_primes, pi, select_params, Overrides};
pub use error::{Error, Result};
pub use tables::Params;
