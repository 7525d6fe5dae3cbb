//! Hierarchical sieve counters over one block of 2^L positions.
//!
//! Cell k (1-based) holds the number of still-present positions in
//! (k − 2^ℓ(k), k], where ℓ(k) is the number of trailing zero bits of k.
//! Removing a position touches the ≤ L+1 cells covering it and a prefix
//! count sums ≤ L+1 cells, both in O(L).
//!
//! Cell k never exceeds 2^ℓ(k), so it fits in ℓ(k)+1 bits. The packed
//! layout stores the cells back to back in that width, in ascending k.
//! Since Σ_{j<k} (ℓ(j)+1) = 2(k−1) − popcount(k−1), the bit offset of a
//! cell is closed-form and the whole tree takes 2^{L+1} − 1 bits.

use crate::error::{Error, Result};

/// Presence flags for positions 1..=len.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub fn new(len: usize) -> Self {
        Bitmap {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut bm = Bitmap::new(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                bm.set(i + 1);
            }
        }
        bm
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, pos: usize) -> bool {
        let i = pos - 1;
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, pos: usize) {
        let i = pos - 1;
        self.words[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    pub fn clear(&mut self, pos: usize) {
        let i = pos - 1;
        self.words[i >> 6] &= !(1 << (i & 63));
    }

    pub fn clear_all(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    /// Number of set positions in 1..=pos.
    pub fn count_leq(&self, pos: usize) -> u64 {
        let full = pos >> 6;
        let mut n: u64 = self.words[..full].iter().map(|w| w.count_ones() as u64).sum();
        let rem = pos & 63;
        if rem != 0 {
            n += (self.words[full] & ((1u64 << rem) - 1)).count_ones() as u64;
        }
        n
    }

    /// Set positions in `from..=to`, ascending.
    pub fn ones_in(&self, from: usize, to: usize) -> impl Iterator<Item = usize> + '_ {
        let to = to.min(self.len);
        (from.max(1)..=to).filter(move |&p| self.get(p))
    }

    pub fn bytes(&self) -> usize {
        self.words.len() * 8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterMode {
    Unpacked,
    Packed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Cells {
    /// One u32 per cell, index 0 unused.
    Unpacked(Vec<u32>),
    /// Bit-packed cells plus one padding word for straddling reads.
    Packed(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterTree {
    log: u32,
    cells: Cells,
}

#[inline]
fn lowbit(k: usize) -> usize {
    k & k.wrapping_neg()
}

#[inline]
fn packed_offset(k: usize) -> usize {
    let j = k - 1;
    2 * j - j.count_ones() as usize
}

#[inline]
fn packed_width(k: usize) -> u32 {
    k.trailing_zeros() + 1
}

#[inline]
fn read_pair(words: &[u64], bit: usize) -> u128 {
    let i = bit >> 6;
    (words[i] as u128 | (words[i + 1] as u128) << 64) >> (bit & 63)
}

#[inline]
fn add_at(words: &mut [u64], bit: usize, value: u64) {
    let i = bit >> 6;
    let pair = words[i] as u128 | (words[i + 1] as u128) << 64;
    let pair = pair + ((value as u128) << (bit & 63));
    words[i] = pair as u64;
    words[i + 1] = (pair >> 64) as u64;
}

#[inline]
fn sub_one_at(words: &mut [u64], bit: usize) {
    let i = bit >> 6;
    let pair = words[i] as u128 | (words[i + 1] as u128) << 64;
    // The field holds at least 1, so the borrow stays inside it.
    let pair = pair - (1u128 << (bit & 63));
    words[i] = pair as u64;
    words[i + 1] = (pair >> 64) as u64;
}

/// Payload bits of the packed layout: Σ_{k=1}^{2^L} (ℓ(k)+1).
pub fn packed_payload_bits(log: u32) -> u64 {
    let n = 1usize << log;
    packed_offset(n + 1) as u64
}

impl CounterTree {
    /// Builds the tree with every cell equal to the present count in its range.
    pub fn new(log: u32, mode: CounterMode, present: &Bitmap) -> Result<Self> {
        if !(2..=31).contains(&log) {
            return Err(Error::arg(format!("counter log L = {log} outside 2..=31")));
        }
        let n = 1usize << log;
        if present.len() != n {
            return Err(Error::arg(format!(
                "presence bitmap has {} positions, expected {n}",
                present.len()
            )));
        }
        let cells = match mode {
            CounterMode::Unpacked => Cells::Unpacked(Vec::new()),
            CounterMode::Packed => Cells::Packed(Vec::new()),
        };
        let mut t = CounterTree { log, cells };
        t.reset(present);
        Ok(t)
    }

    pub fn from_bools(log: u32, mode: CounterMode, present: &[bool]) -> Result<Self> {
        Self::new(log, mode, &Bitmap::from_bools(present))
    }

    pub fn log(&self) -> u32 {
        self.log
    }

    pub fn size(&self) -> usize {
        1 << self.log
    }

    pub fn mode(&self) -> CounterMode {
        match self.cells {
            Cells::Unpacked(_) => CounterMode::Unpacked,
            Cells::Packed(_) => CounterMode::Packed,
        }
    }

    /// Reinitialises every cell from `present`, reusing the allocation.
    pub fn reset(&mut self, present: &Bitmap) {
        let n = self.size();
        debug_assert_eq!(present.len(), n);
        match &mut self.cells {
            Cells::Unpacked(v) => {
                v.clear();
                v.resize(n + 1, 0);
                for k in 1..=n {
                    v[k] += present.get(k) as u32;
                    let parent = k + lowbit(k);
                    if parent <= n {
                        v[parent] += v[k];
                    }
                }
            }
            Cells::Packed(w) => {
                let words = (packed_payload_bits(self.log) as usize).div_ceil(64) + 1;
                w.clear();
                w.resize(words, 0);
                for k in 1..=n {
                    let off = packed_offset(k);
                    if present.get(k) {
                        add_at(w, off, 1);
                    }
                    let parent = k + lowbit(k);
                    if parent <= n {
                        let v = read_pair(w, off) as u64 & ((1u64 << packed_width(k)) - 1);
                        if v != 0 {
                            add_at(w, packed_offset(parent), v);
                        }
                    }
                }
            }
        }
    }

    /// Value of cell k.
    pub fn cell(&self, k: usize) -> u64 {
        match &self.cells {
            Cells::Unpacked(v) => v[k] as u64,
            Cells::Packed(w) => read_pair(w, packed_offset(k)) as u64 & ((1u64 << packed_width(k)) - 1),
        }
    }

    /// Removes position `pos` (1-based), which must still be present.
    #[inline]
    pub fn remove(&mut self, present: &mut Bitmap, pos: usize) {
        debug_assert!(present.get(pos), "position {pos} removed twice");
        present.clear(pos);
        let n = self.size();
        let mut k = pos;
        match &mut self.cells {
            Cells::Unpacked(v) => {
                while k <= n {
                    v[k] -= 1;
                    k += lowbit(k);
                }
            }
            Cells::Packed(w) => {
                while k <= n {
                    sub_one_at(w, packed_offset(k));
                    k += lowbit(k);
                }
            }
        }
    }

    /// Number of present positions in 1..=pos.
    #[inline]
    pub fn count_leq(&self, pos: usize) -> u64 {
        debug_assert!(pos <= self.size());
        let mut k = pos;
        let mut s = 0u64;
        match &self.cells {
            Cells::Unpacked(v) => {
                while k > 0 {
                    s += v[k] as u64;
                    k &= k - 1;
                }
            }
            Cells::Packed(w) => {
                while k > 0 {
                    s += read_pair(w, packed_offset(k)) as u64 & ((1u64 << packed_width(k)) - 1);
                    k &= k - 1;
                }
            }
        }
        s
    }

    /// Same cell values in the packed layout.
    pub fn to_packed(&self) -> CounterTree {
        let n = self.size();
        let words = (packed_payload_bits(self.log) as usize).div_ceil(64) + 1;
        let mut w = vec![0u64; words];
        for k in 1..=n {
            let v = self.cell(k);
            if v != 0 {
                add_at(&mut w, packed_offset(k), v);
            }
        }
        CounterTree {
            log: self.log,
            cells: Cells::Packed(w),
        }
    }

    /// Heap bytes used by the cells.
    pub fn bytes(&self) -> usize {
        match &self.cells {
            Cells::Unpacked(v) => v.len() * 4,
            Cells::Packed(w) => w.len() * 8,
        }
    }

    /// Bytes a tree of this size occupies in the given mode.
    pub fn bytes_for(log: u32, mode: CounterMode) -> usize {
        match mode {
            CounterMode::Unpacked => ((1usize << log) + 1) * 4,
            CounterMode::Packed => ((packed_payload_bits(log) as usize).div_ceil(64) + 1) * 8,
        }
    }
}
