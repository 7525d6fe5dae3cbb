//! Splitting one computation into independent jobs, and threads within one.
//!
//! A job owns a chunk [lo, hi) of the sieve range, the easy leaves with
//! b ≡ j (mod J) and, for job 0, the ordinary leaves. It rebuilds every
//! table from its [`JobSpec`] and seeds its sieve with
//! [`phi_boundary`](crate::boundary::phi_boundary) at lo − 1, so jobs share
//! nothing until [`merge_results`] adds up their [`JobResult`]s.
//!
//! Result files are plain text, one `key = value` per line, in this order:
//!
//! ```text
//! format = 1
//! x = <decimal>
//! alpha_num = <decimal>
//! alpha_den = <decimal>
//! c = <decimal>
//! L = <decimal>
//! ymax = <decimal>
//! job = <decimal>
//! jobs = <decimal>
//! lo = <decimal>
//! hi = <decimal>
//! s_ordinary = <signed decimal>     (job 0 only)
//! s_easy = <signed decimal>
//! s_hard = <signed decimal>
//! C = <decimal>
//! H = <decimal>
//! S = <decimal>
//! G = <decimal>
//! T = <decimal>
//! checksum = <decimal>
//! ```
//!
//! The checksum is 64-bit FNV-1a over the canonical form of the preceding
//! lines (`key = value\n`, single spaces, in the order above).

use std::collections::{BTreeMap, BTreeSet};

use crate::bigcount::BigCount;
use crate::boundary::phi_boundary;
use crate::engine::{p2_from_outcomes, select_params, ChunkOutcome, Engine, Overrides, MAX_THREADS};
use crate::error::{Error, Result};
use crate::oracle;
use crate::tables::{Params, Ratio};

pub use crate::engine::TallySheet;

pub const FORMAT_VERSION: u32 = 1;

/// One job of a split computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSpec {
    pub x: u128,
    pub alpha: Ratio,
    pub c: usize,
    pub block_log: u32,
    pub y_max: u64,
    pub job: u32,
    pub jobs: u32,
    pub lo: u64,
    pub hi: u64,
}

impl JobSpec {
    /// Whether the easy leaves for index b belong to this job.
    pub fn owns_easy(&self, b: usize) -> bool {
        b as u64 % self.jobs as u64 == self.job as u64
    }

    fn same_computation(&self, other: &JobSpec) -> bool {
        (self.x, self.alpha, self.c, self.block_log, self.y_max, self.jobs)
            == (other.x, other.alpha, other.c, other.block_log, other.y_max, other.jobs)
    }

    fn overrides(&self, threads: usize) -> Overrides {
        Overrides {
            alpha: Some(self.alpha),
            c: (self.c > 0).then_some(self.c),
            block_log: Some(self.block_log),
            threads: Some(threads),
            packed_counters: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobResult {
    pub spec: JobSpec,
    /// Present exactly in job 0.
    pub s_ordinary: Option<BigCount>,
    pub s_easy: BigCount,
    pub outcome: ChunkOutcome,
    /// Checksum as written or read; see [`JobResult::compute_checksum`].
    pub checksum: u64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

const KEYS: [&str; 20] = [
    "format", "x", "alpha_num", "alpha_den", "c", "L", "ymax", "job", "jobs", "lo", "hi",
    "s_ordinary", "s_easy", "s_hard", "C", "H", "S", "G", "T", "checksum",
];

impl JobResult {
    fn body(&self) -> String {
        let s = &self.spec;
        let o = &self.outcome;
        let mut lines: Vec<(&str, String)> = vec![
            ("format", FORMAT_VERSION.to_string()),
            ("x", s.x.to_string()),
            ("alpha_num", s.alpha.num.to_string()),
            ("alpha_den", s.alpha.den.to_string()),
            ("c", s.c.to_string()),
            ("L", s.block_log.to_string()),
            ("ymax", s.y_max.to_string()),
            ("job", s.job.to_string()),
            ("jobs", s.jobs.to_string()),
            ("lo", s.lo.to_string()),
            ("hi", s.hi.to_string()),
        ];
        if let Some(v) = self.s_ordinary {
            lines.push(("s_ordinary", v.to_string()));
        }
        lines.extend([
            ("s_easy", self.s_easy.to_string()),
            ("s_hard", o.s_hard.to_string()),
            ("C", o.prime_count.to_string()),
            ("H", o.p2_hits.to_string()),
            ("S", o.p2_local_sum.to_string()),
            ("G", o.p2_p_hits.to_string()),
            ("T", o.p2_p_local_sum.to_string()),
        ]);
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// FNV-1a of the canonical serialization of every field.
    pub fn compute_checksum(&self) -> u64 {
        fnv1a(self.body().as_bytes())
    }

    pub fn to_text(&self) -> String {
        format!("{}checksum = {}\n", self.body(), self.checksum)
    }

    /// Parses and checks a result file.
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Integrity(msg);
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(bad(format!("line {}: unknown key `{k}`", n + 1)));
            }
            if fields.insert(k, v).is_some() {
                return Err(bad(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        fn get<T: std::str::FromStr>(f: &BTreeMap<&str, &str>, k: &str) -> Result<T> {
            let v = f
                .get(k)
                .ok_or_else(|| Error::Integrity(format!("missing key `{k}`")))?;
            v.parse()
                .map_err(|_| Error::Integrity(format!("`{k}` has malformed value `{v}`")))
        }
        let format: u32 = get(&fields, "format")?;
        if format != FORMAT_VERSION {
            return Err(bad(format!("unsupported format {format}")));
        }
        let alpha = Ratio::new(get(&fields, "alpha_num")?, get(&fields, "alpha_den")?)
            .map_err(|e| bad(e.to_string()))?;
        let spec = JobSpec {
            x: get(&fields, "x")?,
            alpha,
            c: get(&fields, "c")?,
            block_log: get(&fields, "L")?,
            y_max: get(&fields, "ymax")?,
            job: get(&fields, "job")?,
            jobs: get(&fields, "jobs")?,
            lo: get(&fields, "lo")?,
            hi: get(&fields, "hi")?,
        };
        let s_ordinary = match fields.contains_key("s_ordinary") {
            true => Some(get(&fields, "s_ordinary")?),
            false => None,
        };
        let result = JobResult {
            outcome: ChunkOutcome {
                lo: spec.lo,
                hi: spec.hi,
                s_hard: get(&fields, "s_hard")?,
                prime_count: get(&fields, "C")?,
                p2_hits: get(&fields, "H")?,
                p2_local_sum: get(&fields, "S")?,
                p2_p_hits: get(&fields, "G")?,
                p2_p_local_sum: get(&fields, "T")?,
            },
            spec,
            s_ordinary,
            s_easy: get(&fields, "s_easy")?,
            checksum: get(&fields, "checksum")?,
        };
        result.verify_checksum()?;
        Ok(result)
    }

    pub fn verify_checksum(&self) -> Result<()> {
        let actual = self.compute_checksum();
        if actual != self.checksum {
            return Err(Error::Integrity(format!(
                "job {}: checksum {} does not match contents ({actual})",
                self.spec.job, self.checksum
            )));
        }
        Ok(())
    }
}

/// Cuts [1, z] into J chunks on the 2^L block grid.
pub fn split_jobs(params: &Params, jobs: u32) -> Result<Vec<JobSpec>> {
    if jobs == 0 {
        return Err(Error::arg("job count must be at least 1"));
    }
    let len = params.block_len();
    let z = params.z;
    let blocks = z.div_ceil(len);
    if params.is_small() && jobs > 1 {
        return Err(Error::arg(format!("x = {} is too small to split", params.x)));
    }
    if jobs as u64 > blocks {
        return Err(Error::arg(format!(
            "{jobs} jobs exceed the {blocks} sieve blocks of length {len}"
        )));
    }
    Ok((0..jobs)
        .map(|j| {
            let first = j as u64 * blocks / jobs as u64;
            let last = (j as u64 + 1) * blocks / jobs as u64;
            JobSpec {
                x: params.x,
                alpha: params.alpha,
                c: params.c,
                block_log: params.block_log,
                y_max: params.y_max,
                job: j,
                jobs,
                lo: 1 + first * len,
                hi: (1 + last * len).min(z + 1),
            }
        })
        .collect())
}

/// Runs one job from its spec alone.
pub fn run_job(spec: &JobSpec, threads: usize) -> Result<JobResult> {
    let params = select_params(spec.x, &spec.overrides(threads))?;
    if params.y_max != spec.y_max || params.c != spec.c {
        return Err(Error::Config(format!(
            "spec echoes y_max = {}, c = {} but its parameters give y_max = {}, c = {}",
            spec.y_max, spec.c, params.y_max, params.c
        )));
    }
    let expected = split_jobs(&params, spec.jobs)?;
    if expected.get(spec.job as usize) != Some(spec) {
        return Err(Error::Config(format!(
            "job {}/{} does not match the chunk grid",
            spec.job, spec.jobs
        )));
    }
    let mut result = if params.is_small() {
        let pi = oracle::pi_naive(params.x as u64)? as i128;
        JobResult {
            spec: spec.clone(),
            s_ordinary: Some(BigCount(pi - (params.a as i128 - 1))),
            s_easy: BigCount::ZERO,
            outcome: ChunkOutcome {
                lo: spec.lo,
                hi: spec.hi,
                ..Default::default()
            },
            checksum: 0,
        }
    } else {
        let engine = Engine::new(params)?;
        let bases = phi_boundary(&engine, spec.lo - 1)?;
        let outcome = engine.sieve_chunk_threaded(spec.lo, spec.hi, bases.values(), threads)?;
        let (s_ordinary, s_easy) = leaves(&engine, threads, spec.job == 0, |b| spec.owns_easy(b));
        JobResult {
            spec: spec.clone(),
            s_ordinary: (spec.job == 0).then_some(s_ordinary),
            s_easy,
            outcome,
            checksum: 0,
        }
    };
    result.checksum = result.compute_checksum();
    Ok(result)
}

/// π(x) from a complete set of job results, in any order.
pub fn merge_results(results: &[JobResult]) -> Result<BigCount> {
    let first = results.first().ok_or_else(|| Error::arg("no job results to merge"))?;
    for r in results {
        r.verify_checksum()?;
    }
    let jobs = first.spec.jobs;
    let mut seen = BTreeSet::new();
    for r in results {
        if !r.spec.same_computation(&first.spec) {
            return Err(Error::Config(format!(
                "job {} was computed with different parameters than job {}",
                r.spec.job, first.spec.job
            )));
        }
        if r.spec.job >= jobs {
            return Err(Error::Config(format!("job index {} out of 0..{jobs}", r.spec.job)));
        }
        if !seen.insert(r.spec.job) {
            return Err(Error::Config(format!("job {} appears twice", r.spec.job)));
        }
        if (r.spec.job == 0) != r.s_ordinary.is_some() {
            return Err(Error::Config(format!(
                "job {} {} an ordinary-leaf sum",
                r.spec.job,
                if r.s_ordinary.is_some() { "carries" } else { "lacks" }
            )));
        }
    }
    let missing: Vec<u32> = (0..jobs).filter(|j| !seen.contains(j)).collect();
    if !missing.is_empty() {
        return Err(Error::Incomplete { missing });
    }
    let mut sorted: Vec<&JobResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.spec.job);

    let x = first.spec.x;
    let y_max = first.spec.y_max;
    if y_max < 2 {
        return Err(Error::Config(format!("y_max = {y_max} is below 2")));
    }
    let z = (x / y_max as u128) as u64;
    let outcomes: Vec<ChunkOutcome> = sorted.iter().map(|r| r.outcome.clone()).collect();
    let p2 = p2_from_outcomes(&outcomes, z).map_err(|e| Error::Config(e.to_string()))?;
    let a = oracle::pi_naive(y_max)? as i128;
    let mut total = BigCount(a - 1) - p2;
    for r in sorted {
        total += r.s_ordinary.unwrap_or(BigCount::ZERO) + r.s_easy + r.outcome.s_hard;
    }
    Ok(total)
}

/// Ordinary (when `ordinary`) and easy leaves accepted by `keep`, with easy
/// indices dealt round-robin to `threads` threads.
fn leaves(
    engine: &Engine,
    threads: usize,
    ordinary: bool,
    keep: impl Fn(usize) -> bool + Sync,
) -> (BigCount, BigCount) {
    let s0 = || if ordinary { engine.ordinary_leaves() } else { BigCount::ZERO };
    if threads <= 1 {
        return (s0(), engine.easy_leaves(keep));
    }
    let keep = &keep;
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| s.spawn(move || engine.easy_leaves(|b| b % threads == t && keep(b))))
            .collect();
        let ord = s0();
        let easy = handles
            .into_iter()
            .map(|h| h.join().expect("leaf thread panicked"))
            .sum();
        (ord, easy)
    })
}

/// π(x) on `threads` threads. The sieve runs in rounds of one block per
/// thread; the result is identical for every thread count.
pub fn run_threads(params: &Params, threads: usize) -> Result<BigCount> {
    if threads == 0 || threads > MAX_THREADS {
        return Err(Error::arg(format!("thread count {threads} outside 1..={MAX_THREADS}")));
    }
    if params.is_small() {
        return Ok(BigCount(oracle::pi_naive(params.x as u64)? as i128));
    }
    let engine = Engine::new(params.clone())?;
    if !engine.counts_primes() {
        return Err(Error::arg(format!(
            "y_max = {} is below x^(1/3); P2 cannot be formed",
            params.y_max
        )));
    }
    let (s0, easy) = leaves(&engine, threads, true, |_| true);
    let zeros = vec![0i128; engine.sieve_limit_index() - params.c + 1];
    let outcome = engine.sieve_chunk_threaded(1, params.z + 1, &zeros, threads)?;
    let p2 = p2_from_outcomes(std::slice::from_ref(&outcome), params.z)?;
    Ok(s0 + easy + outcome.s_hard + BigCount(params.a as i128 - 1) - p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Overrides;

    fn params(x: u128) -> Params {
        select_params(x, &Overrides::default()).unwrap()
    }

    #[test]
    fn split_examples() {
        let p = params(1_000_000);
        let one = split_jobs(&p, 1).unwrap();
        assert_eq!((one[0].lo, one[0].hi), (1, p.z + 1));
        assert!(split_jobs(&p, 0).is_err());

        let mut p = params(1_000_000);
        p.z = 10_000;
        p.block_log = 10;
        let two = split_jobs(&p, 2).unwrap();
        assert_eq!((two[0].lo, two[0].hi, two[1].lo, two[1].hi), (1, 5121, 5121, 10_001));
        assert!(split_jobs(&p, 11).is_err());
    }

    #[test]
    fn easy_shares_partition() {
        let p = params(10_000_000);
        let specs = split_jobs(&p, 3).unwrap();
        for b in p.c + 1..=p.a {
            assert_eq!(specs.iter().filter(|s| s.owns_easy(b)).count(), 1);
        }
    }

    #[test]
    fn two_jobs_merge() {
        let p = params(1_000_000);
        let results: Vec<JobResult> = split_jobs(&p, 2)
            .unwrap()
            .iter()
            .map(|s| run_job(s, 1).unwrap())
            .collect();
        assert_eq!(merge_results(&results).unwrap().get(), 78498);
        let mut shuffled = results.clone();
        shuffled.reverse();
        assert_eq!(merge_results(&shuffled).unwrap().get(), 78498);
        assert!(matches!(
            merge_results(&[results[0].clone(), results[0].clone()]),
            Err(Error::Config(_))
        ));
        assert_eq!(
            merge_results(&results[1..]),
            Err(Error::Incomplete { missing: vec![0] })
        );
    }

    #[test]
    fn first_job_starts_from_zero() {
        let p = params(1_000_000);
        let e = Engine::new(p).unwrap();
        assert!(phi_boundary(&e, 0).unwrap().values().iter().all(|&v| v == 0));
    }

    #[test]
    fn small_x_job() {
        let p = params(1000);
        let specs = split_jobs(&p, 1).unwrap();
        let r = run_job(&specs[0], 1).unwrap();
        assert_eq!(merge_results(&[r]).unwrap().get(), 168);
        assert!(split_jobs(&p, 2).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = params(3_000_000);
        for spec in split_jobs(&p, 2).unwrap() {
            let r = run_job(&spec, 1).unwrap();
            let text = r.to_text();
            assert_eq!(JobResult::from_text(&text).unwrap(), r);
            assert_eq!(text.contains("s_ordinary"), spec.job == 0);
        }
    }

    #[test]
    fn text_rejections() {
        let p = params(1_000_000);
        let r = run_job(&split_jobs(&p, 1).unwrap()[0], 1).unwrap();
        let text = r.to_text();
        let tampered = text.replace("s_easy = ", "s_easy = 1");
        assert!(matches!(JobResult::from_text(&tampered), Err(Error::Integrity(_))));
        let unknown = format!("{text}extra = 1\n");
        assert!(matches!(JobResult::from_text(&unknown), Err(Error::Integrity(_))));
        let dup = format!("C = 1\n{text}");
        assert!(matches!(JobResult::from_text(&dup), Err(Error::Integrity(_))));
        let missing: String = text.lines().filter(|l| !l.starts_with("T ")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(JobResult::from_text(&missing), Err(Error::Integrity(_))));
        let mut bad = r.clone();
        bad.checksum ^= 1;
        assert!(matches!(merge_results(&[bad]), Err(Error::Integrity(_))));
    }

    #[test]
    fn echo_mismatch_is_config_error() {
        let p = params(1_000_000);
        let mut results: Vec<JobResult> = split_jobs(&p, 2)
            .unwrap()
            .iter()
            .map(|s| run_job(s, 1).unwrap())
            .collect();
        results[1].spec.alpha = Ratio::integer(7);
        results[1].checksum = results[1].compute_checksum();
        assert!(matches!(merge_results(&results), Err(Error::Config(_))));
    }

    #[test]
    fn threads_agree() {
        let p = params(1_000_000);
        for n in [1, 2, 3, 8] {
            assert_eq!(run_threads(&p, n).unwrap().get(), 78498);
        }
        assert!(run_threads(&p, 0).is_err());
        assert!(run_threads(&p, MAX_THREADS + 1).is_err());
    }
}
