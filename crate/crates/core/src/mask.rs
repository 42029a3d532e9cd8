//! Fixed-length binary membership masks over the rows of a dataset.

use std::fmt;

const WORD: usize = 64;

/// A set of row indices in `0..len`, stored as a packed bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mask {
    len: usize,
    words: Vec<u64>,
}

impl Mask {
    pub fn empty(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut mask = Self::empty(len);
        for word in &mut mask.words {
            *word = u64::MAX;
        }
        mask.trim();
        mask
    }

    pub fn singleton(len: usize, row: usize) -> Self {
        let mut mask = Self::empty(len);
        mask.set(row, true);
        mask
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut mask = Self::empty(bits.len());
        for (row, &bit) in bits.iter().enumerate() {
            if bit {
                mask.set(row, true);
            }
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, row: usize) -> bool {
        assert!(
            row < self.len,
            "row {row} out of range for mask of length {}",
            self.len
        );
        self.words[row / WORD] >> (row % WORD) & 1 == 1
    }

    pub fn set(&mut self, row: usize, value: bool) {
        assert!(
            row < self.len,
            "row {row} out of range for mask of length {}",
            self.len
        );
        let bit = 1u64 << (row % WORD);
        if value {
            self.words[row / WORD] |= bit;
        } else {
            self.words[row / WORD] &= !bit;
        }
    }

    /// Number of member rows.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn none(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn all(&self) -> bool {
        self.count() == self.len
    }

    pub fn and(&self, other: &Mask) -> Mask {
        assert_eq!(self.len, other.len, "mask length mismatch");
        Mask {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn complement(&self) -> Mask {
        let mut out = Mask {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.trim();
        out
    }

    /// Share of rows that are members, `P(x ∈ S)`.
    pub fn share(&self) -> f64 {
        if self.len == 0 {
            0.0
        } else {
            self.count() as f64 / self.len as f64
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&row| self.get(row))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|row| self.get(row)).collect()
    }

    fn trim(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Mask[")?;
        for row in 0..self.len {
            f.write_str(if self.get(row) { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}
