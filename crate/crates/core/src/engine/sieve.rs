//! Block sieve over [1, z]: hard leaves, prime counts and P2 terms.

use super::Engine;
use crate::bigcount::BigCount;
use crate::counters::{Bitmap, CounterMode, CounterTree};
use crate::error::{Error, Result};
use crate::sf_iter::iterate_squarefree;

/// What one chunk [lo, hi) of the sieve contributes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChunkOutcome {
    pub lo: u64,
    pub hi: u64,
    /// Σ of hard-leaf contributions with exact φ values.
    pub s_hard: BigCount,
    /// C: primes in [lo, hi).
    pub prime_count: u64,
    /// H: primes p ∈ (y_max, √x] with ⌊x/p⌋ ∈ [lo, hi).
    pub p2_hits: u64,
    /// S: Σ over those p of the primes in [lo, ⌊x/p⌋].
    pub p2_local_sum: u128,
    /// G: primes p ∈ (y_max, √x] ∩ [lo, hi).
    pub p2_p_hits: u64,
    /// T: Σ over those p of the primes in [lo, p].
    pub p2_p_local_sum: u128,
}

/// P2 = Σ_{y_max < p ≤ √x} (π(x/p) − π(p) + 1) from outcomes that tile [1, z].
pub fn p2_from_outcomes(outcomes: &[ChunkOutcome], z: u64) -> Result<BigCount> {
    let mut expect_lo = 1;
    let mut pref: i128 = 0;
    let mut total: i128 = 0;
    for o in outcomes {
        if o.lo != expect_lo || o.hi <= o.lo {
            return Err(Error::arg(format!(
                "chunk [{}, {}) does not continue at {expect_lo}",
                o.lo, o.hi
            )));
        }
        total += o.p2_local_sum as i128 + o.p2_hits as i128 * pref;
        total -= o.p2_p_local_sum as i128 + o.p2_p_hits as i128 * pref;
        total += o.p2_p_hits as i128;
        pref += o.prime_count as i128;
        expect_lo = o.hi;
    }
    if expect_lo != z + 1 {
        return Err(Error::arg(format!("chunks end at {expect_lo}, expected {}", z + 1)));
    }
    Ok(BigCount(total))
}

/// Per-thread sieve state.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    present: Bitmap,
    tree: CounterTree,
    mark: Vec<bool>,
}

impl Workspace {
    pub(crate) fn new(engine: &Engine) -> Result<Self> {
        let log = engine.params.block_log;
        let present = Bitmap::new(1 << log);
        let mode = if engine.params.packed_counters {
            CounterMode::Packed
        } else {
            CounterMode::Unpacked
        };
        let tree = CounterTree::new(log, mode, &present)?;
        Ok(Workspace {
            present,
            tree,
            mark: Vec::new(),
        })
    }
}

/// Hard-leaf sum of one block sieved without knowing φ(lo − 1, ·).
///
/// `partial` holds Σ −μ(m)·(count inside the block). `tally[i]` is the
/// Σ −μ(m) over the leaves whose base φ(lo − 1, c + i) was missing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TallySheet {
    pub partial: i128,
    pub tally: Vec<i128>,
}

impl TallySheet {
    /// The block's exact contribution once `bases[i] = φ(lo − 1, c + i)` is known.
    pub fn resolve(&self, bases: &[i128]) -> i128 {
        self.partial + self.tally.iter().zip(bases).map(|(t, b)| t * b).sum::<i128>()
    }
}

/// One block's raw result. With known bases the sheet has no tallies and
/// its partial sum is final.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BlockOutcome {
    pub lo: u64,
    pub hi: u64,
    pub sheet: TallySheet,
    /// survivors[i]: numbers in the block not divisible by p_1..p_{c+i}.
    pub survivors: Vec<u64>,
    pub primes: u64,
    pub hits: u64,
    pub hit_sum: u128,
    pub p_hits: u64,
    pub p_hit_sum: u128,
}

/// Running state while blocks of one chunk are folded in order.
#[derive(Debug, Clone)]
pub(crate) struct Folder {
    bases: Vec<i128>,
    before: u64,
    out: ChunkOutcome,
}

impl Folder {
    pub(crate) fn new(lo: u64, bases: Vec<i128>) -> Self {
        Folder {
            bases,
            before: 0,
            out: ChunkOutcome {
                lo,
                hi: lo,
                ..Default::default()
            },
        }
    }

    pub(crate) fn bases(&self) -> &[i128] {
        &self.bases
    }

    /// Resolves the block's tallies against the current bases and advances them.
    pub(crate) fn fold(&mut self, blk: &BlockOutcome) -> i128 {
        debug_assert_eq!(blk.lo, self.out.hi);
        let s = blk.sheet.resolve(&self.bases);
        self.out.s_hard += BigCount(s);
        for (base, &n) in self.bases.iter_mut().zip(&blk.survivors) {
            *base += n as i128;
        }
        let o = &mut self.out;
        o.p2_local_sum += blk.hit_sum + blk.hits as u128 * self.before as u128;
        o.p2_p_local_sum += blk.p_hit_sum + blk.p_hits as u128 * self.before as u128;
        o.p2_hits += blk.hits;
        o.p2_p_hits += blk.p_hits;
        o.prime_count += blk.primes;
        self.before += blk.primes;
        o.hi = blk.hi;
        s
    }

    pub(crate) fn finish(self) -> ChunkOutcome {
        self.out
    }
}

impl Engine {
    fn check_chunk(&self, lo: u64, hi: u64, phi_base: &[i128]) -> Result<Vec<i128>> {
        let z = self.params.z;
        if lo < 1 || lo >= hi || hi > z + 1 {
            return Err(Error::arg(format!("chunk [{lo}, {hi}) outside [1, {})", z + 1)));
        }
        let need = self.b_sieve - self.params.c + 1;
        if phi_base.len() < need {
            return Err(Error::arg(format!(
                "phi_base has {} entries, {need} required",
                phi_base.len()
            )));
        }
        Ok(phi_base[..need].to_vec())
    }

    fn blocks(&self, lo: u64, hi: u64) -> impl Iterator<Item = (u64, u64)> {
        let len = self.params.block_len();
        (lo..hi)
            .step_by(len as usize)
            .map(move |b| (b, (b + len).min(hi)))
    }

    /// Sieves [lo, hi) block by block on the current thread.
    /// `phi_base[i]` must be φ(lo − 1, c + i).
    pub fn sieve_chunk(&self, lo: u64, hi: u64, phi_base: &[i128]) -> Result<ChunkOutcome> {
        let mut folder = Folder::new(lo, self.check_chunk(lo, hi, phi_base)?);
        let mut ws = Workspace::new(self)?;
        for (blo, bhi) in self.blocks(lo, hi) {
            let blk = self.sieve_block(&mut ws, blo, bhi, Some(folder.bases()));
            folder.fold(&blk);
        }
        Ok(folder.finish())
    }

    /// Same result as [`Engine::sieve_chunk`], sieving `threads` consecutive
    /// blocks at a time without bases and folding them in block order.
    pub fn sieve_chunk_threaded(
        &self,
        lo: u64,
        hi: u64,
        phi_base: &[i128],
        threads: usize,
    ) -> Result<ChunkOutcome> {
        if threads <= 1 {
            return self.sieve_chunk(lo, hi, phi_base);
        }
        let mut folder = Folder::new(lo, self.check_chunk(lo, hi, phi_base)?);
        let mut spaces = (0..threads)
            .map(|_| Workspace::new(self))
            .collect::<Result<Vec<_>>>()?;
        let blocks: Vec<(u64, u64)> = self.blocks(lo, hi).collect();
        for round in blocks.chunks(threads) {
            let outs = self.sieve_round(&mut spaces, round);
            for blk in &outs {
                folder.fold(blk);
            }
        }
        Ok(folder.finish())
    }

    /// Sieves each block of `round` on its own thread in delta mode.
    pub(crate) fn sieve_round(&self, spaces: &mut [Workspace], round: &[(u64, u64)]) -> Vec<BlockOutcome> {
        std::thread::scope(|s| {
            let handles: Vec<_> = round
                .iter()
                .zip(spaces.iter_mut())
                .map(|(&(blo, bhi), ws)| s.spawn(move || self.sieve_block(ws, blo, bhi, None)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sieve thread panicked"))
                .collect()
        })
    }

    /// Sieves one block [lo, hi), hi − lo ≤ 2^L.
    pub(crate) fn sieve_block(
        &self,
        ws: &mut Workspace,
        lo: u64,
        hi: u64,
        bases: Option<&[i128]>,
    ) -> BlockOutcome {
        let c = self.params.c;
        let n = (hi - lo) as usize;
        debug_assert!(n as u64 <= self.params.block_len());
        let pt = &self.tables.primes;
        let primes = self.primes();

        ws.present.clear_all();
        let pattern = self.tables.wheel.coprime();
        let w = pattern.len();
        let mut r = (lo % w as u64) as usize;
        for pos in 1..=n {
            if pattern[r] {
                ws.present.set(pos);
            }
            r += 1;
            if r == w {
                r = 0;
            }
        }
        ws.tree.reset(&ws.present);
        let mut alive = ws.tree.count_leq(n);

        let steps = self.b_sieve - c;
        let mut survivors = Vec::with_capacity(steps + 1);
        survivors.push(alive);
        let mut tally = if bases.is_some() { Vec::new() } else { vec![0i128; steps] };
        let mut s = 0i128;

        for b in c + 1..=self.b_sieve {
            let p = pt.prime(b);
            let bounds = self.bounds(b);
            let m_lo = (self.u.div2(p, hi) + 1).max(bounds.special_above as u128 + 1);
            let m_hi = self.u.div2(p, lo).min(bounds.hard_upto as u128);
            if m_lo <= m_hi {
                let tree = &ws.tree;
                let mut sum_mu = 0i128;
                iterate_squarefree(primes, b, m_lo as u64, m_hi as u64, |it| {
                    let zl = self.u.div2(it.m, p) as u64;
                    let cnt = tree.count_leq((zl - lo + 1) as usize) as i128;
                    s -= it.mu as i128 * cnt;
                    sum_mu -= it.mu as i128;
                });
                match bases {
                    Some(bs) => s += sum_mu * bs[b - 1 - c],
                    None => tally[b - 1 - c] += sum_mu,
                }
            }

            let first = lo.div_ceil(p) * p;
            let mut j = if first.is_multiple_of(2) { first + p } else { first };
            while j < hi {
                let pos = (j - lo + 1) as usize;
                if ws.present.get(pos) {
                    ws.tree.remove(&mut ws.present, pos);
                    alive -= 1;
                }
                j += 2 * p;
            }
            survivors.push(alive);
        }

        let mut blk = BlockOutcome {
            lo,
            hi,
            sheet: TallySheet { partial: s, tally },
            survivors,
            primes: 0,
            hits: 0,
            hit_sum: 0,
            p_hits: 0,
            p_hit_sum: 0,
        };
        if self.count_primes {
            self.count_block_primes(ws, &mut blk);
        }
        blk
    }

    /// Fills the prime count and the P2 fields of a sieved block.
    fn count_block_primes(&self, ws: &mut Workspace, blk: &mut BlockOutcome) {
        let (lo, hi) = (blk.lo, blk.hi);
        let y = self.params.y_max;
        let b_sieve = self.b_sieve as u64;
        let sieved_upto = |v: u64| self.tables.pi(v.min(y)).min(b_sieve);
        let one = (lo == 1) as u64;
        let sieved_before = sieved_upto(lo - 1);
        let tree = &ws.tree;
        // Primes in [lo, lo + t − 1]: survivors (less 1) plus the sieving primes.
        let local = |t: usize| tree.count_leq(t) - one + sieved_upto(lo + t as u64 - 1) - sieved_before;
        blk.primes = local((hi - lo) as usize);

        let x = self.params.x;
        let sqrt_x = self.params.sqrt_x;
        let p_lo = ((x / hi as u128) as u64 + 1).max(y + 1);
        let p_hi = ((x / lo as u128).min(sqrt_x as u128)) as u64;
        if p_lo <= p_hi {
            let (mut hits, mut sum) = (0u64, 0u128);
            self.for_each_prime(&mut ws.mark, p_lo, p_hi, |p| {
                let pos = (x / p as u128) as u64 - lo + 1;
                hits += 1;
                sum += local(pos as usize) as u128;
            });
            blk.hits = hits;
            blk.hit_sum = sum;
        }

        let n_lo = lo.max(y + 1);
        let n_hi = (hi - 1).min(sqrt_x);
        if n_lo <= n_hi {
            for pos in ws.present.ones_in((n_lo - lo + 1) as usize, (n_hi - lo + 1) as usize) {
                blk.p_hits += 1;
                blk.p_hit_sum += local(pos) as u128;
            }
        }
    }

    /// Calls `f` on every prime in [lo, hi], ascending; needs √hi ≤ y_max.
    fn for_each_prime(&self, mark: &mut Vec<bool>, lo: u64, hi: u64, mut f: impl FnMut(u64)) {
        const SEG: u64 = 1 << 16;
        let primes = self.tables.primes.as_slice();
        let mut s_lo = lo.max(2);
        while s_lo <= hi {
            let s_hi = hi.min(s_lo + SEG - 1);
            let len = (s_hi - s_lo + 1) as usize;
            mark.clear();
            mark.resize(len, true);
            for &q in primes {
                if q * q > s_hi {
                    break;
                }
                let mut j = (s_lo.div_ceil(q) * q).max(q * q);
                while j <= s_hi {
                    mark[(j - s_lo) as usize] = false;
                    j += q;
                }
            }
            for (i, &is_p) in mark.iter().enumerate() {
                if is_p {
                    f(s_lo + i as u64);
                }
            }
            s_lo = s_hi + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{params_with_leaf_bound, select_params, Overrides};
    use crate::oracle::{p2_naive, phi_naive, pi_naive};
    use crate::tables::Ratio;

    fn engine(x: u128, alpha: u64, c: usize, l: u32) -> Engine {
        let ov = Overrides {
            alpha: Some(Ratio::integer(alpha)),
            c: Some(c),
            block_log: Some(l),
            ..Default::default()
        };
        Engine::new(select_params(x, &ov).unwrap()).unwrap()
    }

    fn zeros(e: &Engine) -> Vec<i128> {
        vec![0; e.params.a - e.params.c + 1]
    }

    #[test]
    fn hard_leaves_complete_phi() {
        for &(x, alpha, c, l) in &[(1_000_000u128, 1, 6, 7), (1_000_000, 2, 3, 6), (5_000_000, 4, 1, 10)] {
            let e = engine(x, alpha, c, l);
            let out = e.sieve_chunk(1, e.params.z + 1, &zeros(&e)).unwrap();
            let phi = phi_naive(x as u64, e.params.a).unwrap() as i128;
            let rest = phi - e.ordinary_leaves().get() - e.easy_leaves(|_| true).get();
            assert_eq!(out.s_hard.get(), rest, "x = {x}");
            assert_eq!(out.prime_count, pi_naive(e.params.z).unwrap());
        }
    }

    #[test]
    fn p2_single_outcome() {
        let e = Engine::new(params_with_leaf_bound(100, 5, 1, 6).unwrap()).unwrap();
        let out = e.sieve_chunk(1, e.params.z + 1, &zeros(&e)).unwrap();
        assert_eq!(p2_from_outcomes(&[out], e.params.z).unwrap().get(), 3);
        assert_eq!(p2_naive(100, 5).unwrap(), 3);
    }

    #[test]
    fn p2_empty_when_leaf_bound_is_root() {
        let e = Engine::new(params_with_leaf_bound(10_000, 100, 2, 6).unwrap()).unwrap();
        let out = e.sieve_chunk(1, e.params.z + 1, &zeros(&e)).unwrap();
        assert_eq!(p2_from_outcomes(&[out], e.params.z).unwrap().get(), 0);
    }

    #[test]
    fn two_chunks_match_one() {
        let e = engine(1_000_000, 1, 6, 7);
        assert_eq!(e.params.z, 10_000);
        let whole = e.sieve_chunk(1, 10_001, &zeros(&e)).unwrap();
        let first = e.sieve_chunk(1, 5001, &zeros(&e)).unwrap();
        let base: Vec<i128> = (e.params.c..=e.params.a)
            .map(|b| phi_naive(5000, b).unwrap() as i128)
            .collect();
        let second = e.sieve_chunk(5001, 10_001, &base).unwrap();
        assert_eq!(first.s_hard + second.s_hard, whole.s_hard);
        let p2 = p2_from_outcomes(&[first, second], e.params.z).unwrap();
        assert_eq!(p2, p2_from_outcomes(&[whole], e.params.z).unwrap());
        assert_eq!(p2.get(), p2_naive(1_000_000, 100).unwrap() as i128);
    }

    #[test]
    fn coverage_errors() {
        let e = engine(1_000_000, 1, 6, 7);
        let a = e.sieve_chunk(1, 4000, &zeros(&e)).unwrap();
        assert!(p2_from_outcomes(std::slice::from_ref(&a), e.params.z).is_err());
        let mut b = a.clone();
        b.lo = 3999;
        b.hi = 10_001;
        assert!(p2_from_outcomes(&[a, b], e.params.z).is_err());
        assert!(e.sieve_chunk(0, 10, &zeros(&e)).is_err());
        assert!(e.sieve_chunk(1, 10_002, &zeros(&e)).is_err());
        assert!(e.sieve_chunk(1, 10, &[]).is_err());
    }

    /// Resolving a round's tallies reproduces the blocks sieved with bases.
    #[test]
    fn tally_resolution_matches_replay() {
        for &threads in &[2usize, 3, 5] {
            let e = engine(20_000_000, 2, 3, 8);
            let lo = 1;
            let hi = e.params.z + 1;
            let blocks: Vec<(u64, u64)> = e.blocks(lo, hi).collect();
            let mut spaces: Vec<Workspace> = (0..threads).map(|_| Workspace::new(&e).unwrap()).collect();
            let mut exact = Workspace::new(&e).unwrap();
            let mut folder = Folder::new(lo, zeros(&e)[..e.b_sieve - e.params.c + 1].to_vec());
            for round in blocks.chunks(threads) {
                let outs = e.sieve_round(&mut spaces, round);
                for blk in &outs {
                    let direct = e.sieve_block(&mut exact, blk.lo, blk.hi, Some(folder.bases()));
                    assert_eq!(direct.survivors, blk.survivors);
                    assert_eq!(folder.fold(blk), direct.sheet.partial, "block at {}", blk.lo);
                }
            }
            let seq = e.sieve_chunk(lo, hi, &zeros(&e)).unwrap();
            assert_eq!(folder.finish(), seq);
        }
    }

    #[test]
    fn threaded_chunk_is_identical() {
        let e = engine(10_000_000, 1, 6, 9);
        let seq = e.sieve_chunk(1, e.params.z + 1, &zeros(&e)).unwrap();
        for threads in [2, 4, 8] {
            assert_eq!(e.sieve_chunk_threaded(1, e.params.z + 1, &zeros(&e), threads).unwrap(), seq);
        }
    }

    #[test]
    fn packed_counters_agree() {
        let mut p = select_params(3_000_000, &Overrides::default()).unwrap();
        let a = Engine::new(p.clone()).unwrap();
        p.packed_counters = true;
        let b = Engine::new(p).unwrap();
        let z = a.params.z + 1;
        assert_eq!(
            a.sieve_chunk(1, z, &zeros(&a)).unwrap(),
            b.sieve_chunk(1, z, &zeros(&b)).unwrap()
        );
    }
}
