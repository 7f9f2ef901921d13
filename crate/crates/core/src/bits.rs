//! Bitstrings and measurement sample sets.
//!
//! A bitstring doubles as a basis-state label and a feature subset: bit `l`
//! of the packed word is qubit `l` is feature `l`. Every module in the crate
//! relies on this single convention.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("bitstring length {0} exceeds the supported maximum of 64")]
    TooLong(usize),
    #[error("invalid character {0:?} in bitstring (expected '0' or '1')")]
    BadChar(char),
    #[error("bitstring length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// A fixed-length bitstring packed into a `u64`.
///
/// Bit `l` of [`Bits::index`] is qubit/feature `l`, so the packed word is
/// exactly the computational-basis index of the corresponding state. The
/// string form prints qubit 0 leftmost: `"10"` means qubit 0 = 1, qubit 1 = 0
/// (basis index 1 for n = 2).
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bits {
    word: u64,
    len: usize,
}

impl Bits {
    pub fn new(len: usize, word: u64) -> Result<Self, BitsError> {
        if len > 64 {
            return Err(BitsError::TooLong(len));
        }
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Ok(Self { word: word & mask, len })
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(len, 0).expect("length checked by caller")
    }

    pub fn ones(len: usize) -> Self {
        Self::new(len, u64::MAX).expect("length checked by caller")
    }

    /// Basis-state index: bit `l` of the result is qubit `l`.
    pub fn index(self) -> u64 {
        self.word
    }

    pub fn len(self) -> usize {
        self.len
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    pub fn get(self, l: usize) -> bool {
        debug_assert!(l < self.len);
        (self.word >> l) & 1 == 1
    }

    pub fn with_bit(self, l: usize, value: bool) -> Self {
        debug_assert!(l < self.len);
        let word = if value { self.word | (1 << l) } else { self.word & !(1 << l) };
        Self { word, len: self.len }
    }

    pub fn count_ones(self) -> u32 {
        self.word.count_ones()
    }

    /// Indices of the set bits, ascending.
    pub fn ones_iter(self) -> impl Iterator<Item = usize> {
        (0..self.len).filter(move |&l| self.get(l))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in 0..self.len {
            f.write_str(if self.get(l) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl FromStr for Bits {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() > 64 {
            return Err(BitsError::TooLong(s.len()));
        }
        let mut word = 0u64;
        for (l, c) in s.chars().enumerate() {
            match c {
                '1' => word |= 1 << l,
                '0' => {}
                other => return Err(BitsError::BadChar(other)),
            }
        }
        Ok(Self { word, len: s.len() })
    }
}

/// A multiset of measured bitstrings: the empirical distribution after
/// `shots` samples. Counts are keyed by basis index and iterate in sorted
/// order, so exports are deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    n_qubits: usize,
    counts: BTreeMap<u64, u64>,
    shots: u64,
}

impl SampleSet {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, counts: BTreeMap::new(), shots: 0 }
    }

    pub fn from_counts(
        n_qubits: usize,
        counts: impl IntoIterator<Item = (u64, u64)>,
    ) -> Result<Self, BitsError> {
        let mut set = Self::new(n_qubits);
        for (index, count) in counts {
            let bits = Bits::new(n_qubits, index)?;
            if count > 0 {
                *set.counts.entry(bits.index()).or_insert(0) += count;
                set.shots += count;
            }
        }
        Ok(set)
    }

    pub fn record(&mut self, index: u64) {
        *self.counts.entry(index).or_insert(0) += 1;
        self.shots += 1;
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Number of distinct bitstrings observed.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, bits: Bits) -> u64 {
        self.counts.get(&bits.index()).copied().unwrap_or(0)
    }

    /// Empirical frequency of `bits` (0 if never observed).
    pub fn frequency(&self, bits: Bits) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        self.count(bits) as f64 / self.shots as f64
    }

    /// Distinct observed bitstrings with their counts, ascending by index.
    pub fn iter(&self) -> impl Iterator<Item = (Bits, u64)> + '_ {
        self.counts
            .iter()
            .map(|(&index, &count)| (Bits { word: index, len: self.n_qubits }, count))
    }

    /// Total-variation distance to an exact probability table indexed by
    /// basis index (length 2^n). Test/diagnostic helper.
    pub fn total_variation(&self, probs: &[f64]) -> f64 {
        let shots = self.shots as f64;
        let mut tv = 0.0;
        for (j, &p) in probs.iter().enumerate() {
            let emp = self.counts.get(&(j as u64)).copied().unwrap_or(0) as f64 / shots;
            tv += (emp - p).abs();
        }
        tv / 2.0
    }

    /// Writes `bitstring,count` rows in sorted order.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "bitstring,count")?;
        for (bits, count) in self.iter() {
            writeln!(w, "{bits},{count}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_round_trip_uses_qubit0_leftmost() {
        let b: Bits = "10".parse().unwrap();
        assert_eq!(b.index(), 1);
        assert!(b.get(0));
        assert!(!b.get(1));
        assert_eq!(b.to_string(), "10");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!("10x".parse::<Bits>(), Err(BitsError::BadChar('x')));
        assert!(Bits::new(65, 0).is_err());
    }

    #[test]
    fn sample_set_counts_sum_to_shots() {
        let mut s = SampleSet::new(2);
        s.record(0);
        s.record(3);
        s.record(3);
        assert_eq!(s.shots(), 3);
        assert_eq!(s.iter().map(|(_, c)| c).sum::<u64>(), s.shots());
        assert_eq!(s.count(Bits::new(2, 3).unwrap()), 2);
        assert!((s.frequency(Bits::new(2, 3).unwrap()) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ones_iter_matches_get() {
        let b = Bits::new(6, 0b100101).unwrap();
        assert_eq!(b.ones_iter().collect::<Vec<_>>(), vec![0, 2, 5]);
        assert_eq!(b.count_ones(), 3);
    }
}
