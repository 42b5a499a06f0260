//! Static-model range coder.
//!
//! The coder keeps a 64-bit range and renormalizes 32 bits at a time, so the
//! range always sits in `[2^32, 2^64)` between symbols. `low` is held in a
//! `u128` so that bit 64 can capture a carry out of the current interval.
//! Carries are resolved LZMA-style: the most recent settled output word is
//! held back in `cache`, followed by a count of pending `0xFFFF_FFFF` words
//! that a carry would roll over to zero.
//!
//! Output words are written most significant byte first.

use crate::error::{Error, Result};

/// Largest frequency total handed to the coder. With the range at least
/// `2^32`, every symbol keeps a quantum of at least `2^8`.
pub const MAX_TOTAL: u64 = 1 << 24;

const RENORM_THRESHOLD: u64 = 1 << 32;
const WORD_MASK: u128 = 0xFFFF_FFFF;

/// Cumulative frequencies of a frozen model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    cum: Vec<u64>,
}

impl FrequencyTable {
    /// Uses raw counts when their total is at most [`MAX_TOTAL`]; otherwise
    /// rescales proportionally, keeping every present symbol at frequency
    /// one or more and absent symbols at zero.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or(Error::Corrupt { stage: "model" })?;
        if total == 0 {
            return Err(Error::EmptySource);
        }
        let present = counts.iter().filter(|&&c| c > 0).count() as u64;
        let budget = (MAX_TOTAL - present) as u128;
        let mut cum = Vec::with_capacity(counts.len() + 1);
        cum.push(0u64);
        let mut acc = 0u64;
        for &c in counts {
            let f = if total <= MAX_TOTAL || c == 0 {
                c
            } else {
                1 + (c as u128 * budget / total as u128) as u64
            };
            acc += f;
            cum.push(acc);
        }
        Ok(Self { cum })
    }

    pub fn total(&self) -> u64 {
        *self.cum.last().expect("table has a sentinel")
    }

    pub fn freq(&self, symbol: usize) -> u64 {
        self.cum[symbol + 1] - self.cum[symbol]
    }

    pub fn cum(&self, symbol: usize) -> u64 {
        self.cum[symbol]
    }

    /// Symbol whose cumulative interval holds `target < total`.
    fn lookup(&self, target: u64) -> usize {
        // first index with cum > target, minus one; zero-width entries are skipped
        self.cum.partition_point(|&c| c <= target) - 1
    }
}

pub struct RangeEncoder {
    low: u128,
    range: u64,
    cache: Option<u32>,
    pending: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u64::MAX,
            cache: None,
            pending: 0,
            out: Vec::new(),
        }
    }

    pub fn encode(&mut self, table: &FrequencyTable, symbol: usize) {
        let freq = table.freq(symbol);
        debug_assert!(freq > 0, "symbol {symbol} has no code space");
        let r = self.range / table.total();
        self.low += (r as u128) * (table.cum(symbol) as u128);
        self.range = r * freq;
        while self.range < RENORM_THRESHOLD {
            self.range <<= 32;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        // bits 32..=64: the word leaving the window plus a possible carry
        let top = self.low >> 32;
        if top != WORD_MASK {
            let carry = (top >> 32) as u32;
            if let Some(cache) = self.cache {
                self.push(cache.wrapping_add(carry));
            }
            for _ in 0..self.pending {
                self.push(0xFFFF_FFFFu32.wrapping_add(carry));
            }
            self.pending = 0;
            self.cache = Some((top & WORD_MASK) as u32);
        } else {
            self.pending += 1;
        }
        self.low = (self.low & WORD_MASK) << 32;
    }

    fn push(&mut self, word: u32) {
        self.out.extend_from_slice(&word.to_be_bytes());
    }

    /// Flushes the two live words of `low`. The decoder reads exactly as
    /// many words as are written.
    pub fn finish(mut self) -> Vec<u8> {
        self.shift_low();
        self.shift_low();
        if let Some(cache) = self.cache {
            self.push(cache);
        }
        for _ in 0..self.pending {
            self.push(0xFFFF_FFFF);
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    code: u64,
    range: u64,
    words: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(payload: &'a [u8]) -> Result<Self> {
        let mut dec = Self {
            code: 0,
            range: u64::MAX,
            words: payload,
            pos: 0,
        };
        let hi = dec.next_word()? as u64;
        let lo = dec.next_word()? as u64;
        dec.code = (hi << 32) | lo;
        Ok(dec)
    }

    fn next_word(&mut self) -> Result<u32> {
        let bytes = self
            .words
            .get(self.pos..self.pos + 4)
            .ok_or(Error::Truncated("range-coded payload ended early"))?;
        self.pos += 4;
        Ok(u32::from_be_bytes(bytes.try_into().expect("4-byte slice")))
    }

    pub fn decode(&mut self, table: &FrequencyTable) -> Result<usize> {
        let r = self.range / table.total();
        let target = self.code / r;
        if target >= table.total() {
            return Err(Error::Corrupt { stage: "payload" });
        }
        let symbol = table.lookup(target);
        self.code -= r * table.cum(symbol);
        self.range = r * table.freq(symbol);
        while self.range < RENORM_THRESHOLD {
            self.range <<= 32;
            self.code = (self.code << 32) | self.next_word()? as u64;
        }
        Ok(symbol)
    }

    /// True once every payload word has been consumed.
    pub fn exhausted(&self) -> bool {
        self.pos == self.words.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(counts: &[u64], symbols: &[usize]) -> Vec<u8> {
        let table = FrequencyTable::from_counts(counts).unwrap();
        let mut enc = RangeEncoder::new();
        for &s in symbols {
            enc.encode(&table, s);
        }
        let bytes = enc.finish();
        assert_eq!(bytes.len() % 4, 0);
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for &s in symbols {
            assert_eq!(dec.decode(&table).unwrap(), s);
        }
        assert!(dec.exhausted());
        bytes
    }

    #[test]
    fn single_symbol_model_costs_almost_nothing() {
        let symbols = vec![2usize; 100_000];
        let bytes = roundtrip(&[0, 0, 100_000, 0], &symbols);
        assert!(bytes.len() <= 16, "{}", bytes.len());
    }

    #[test]
    fn skewed_and_sparse_models() {
        let counts = [1u64, 0, 0, 1_000_000, 0, 3, 0, 1];
        let mut symbols = vec![3usize; 1_000];
        symbols.extend([0, 5, 5, 7, 5, 3, 0]);
        roundtrip(&counts, &symbols);
    }

    #[test]
    fn rescaled_model_keeps_rare_symbols() {
        let counts = [u64::MAX / 4, 1, 0, 17];
        let table = FrequencyTable::from_counts(&counts).unwrap();
        assert!(table.total() <= MAX_TOTAL);
        assert!(table.freq(1) >= 1);
        assert_eq!(table.freq(2), 0);
        assert!(table.freq(3) >= 1);
        roundtrip(&counts, &[0, 1, 3, 0, 0, 1, 3]);
    }

    #[test]
    fn lookup_skips_empty_symbols() {
        let table = FrequencyTable::from_counts(&[0, 2, 0, 0, 3]).unwrap();
        assert_eq!(table.lookup(0), 1);
        assert_eq!(table.lookup(1), 1);
        assert_eq!(table.lookup(2), 4);
        assert_eq!(table.lookup(4), 4);
    }

    #[test]
    fn carry_heavy_streams_roundtrip() {
        // alternating extreme probabilities push low toward 0xFFFF.. runs
        let counts = [1u64, (1 << 24) - 2, 1];
        let symbols: Vec<usize> = (0..50_000)
            .map(|i| match i % 7 {
                0 => 2,
                3 => 0,
                _ => 1,
            })
            .collect();
        roundtrip(&counts, &symbols);
        let symbols: Vec<usize> = (0..50_000).map(|i| if i % 3 == 0 { 2 } else { 1 }).collect();
        roundtrip(&counts, &symbols);
    }

    #[test]
    fn truncated_payload_is_detected() {
        let table = FrequencyTable::from_counts(&[1, 1]).unwrap();
        let mut enc = RangeEncoder::new();
        for i in 0..1000 {
            enc.encode(&table, i % 2);
        }
        let bytes = enc.finish();
        let short = &bytes[..bytes.len() - 4];
        let mut dec = RangeDecoder::new(short).unwrap();
        let res: Result<Vec<usize>> = (0..1000).map(|_| dec.decode(&table)).collect();
        assert!(matches!(res, Err(Error::Truncated(_))));
        assert!(RangeDecoder::new(&bytes[..4]).is_err());
    }
}
