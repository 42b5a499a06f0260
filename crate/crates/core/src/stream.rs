//! Symbol-stream statistics: alphabets, histograms, distributions and bigram
//! counts.
//!
//! Counters are `u64`, so a histogram can absorb up to `2^63 - 1` samples
//! (and well beyond) without overflow. Builders are append-only; the values
//! they produce are immutable and `Send + Sync`.

use std::fmt;

use crate::error::{Error, Result};

/// A quantized sample value, `0..alphabet_size`.
pub type Symbol = u16;

/// Largest supported ADC resolution.
pub const MAX_BIT_DEPTH: u32 = 16;

/// Largest bit depth for which dense bigram matrices are built
/// (`2^20` cells, 8 MiB).
pub const MAX_BIGRAM_BIT_DEPTH: u32 = 10;

/// Bit depth of a quantized source; the alphabet is `0..2^bit_depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantizationSpec {
    bit_depth: u32,
}

impl QuantizationSpec {
    pub fn new(bit_depth: u32) -> Result<Self> {
        if !(1..=MAX_BIT_DEPTH).contains(&bit_depth) {
            return Err(Error::InvalidBitDepth(bit_depth));
        }
        Ok(Self { bit_depth })
    }

    /// 2-bit VLBI alphabet `{00, 01, 10, 11}`.
    pub const TWO_BIT: Self = Self { bit_depth: 2 };
    /// 8-bit ADC alphabet `{0, .., 255}`.
    pub const EIGHT_BIT: Self = Self { bit_depth: 8 };

    pub fn bit_depth(&self) -> u32 {
        self.bit_depth
    }

    pub fn alphabet_size(&self) -> usize {
        1usize << self.bit_depth
    }

    /// Midpoint of the ADC range, `(2^N - 1) / 2`.
    pub fn midpoint(&self) -> f64 {
        (self.alphabet_size() - 1) as f64 / 2.0
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::SpecMismatch {
                left: self.bit_depth,
                right: other.bit_depth,
            });
        }
        Ok(())
    }

    pub(crate) fn check_symbol(&self, position: u64, symbol: Symbol) -> Result<()> {
        if (symbol as usize) >= self.alphabet_size() {
            return Err(Error::SymbolOutOfAlphabet {
                position,
                symbol: symbol as u64,
                alphabet_size: self.alphabet_size(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for QuantizationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-bit", self.bit_depth)
    }
}

/// Symbol occurrence counts over a full alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    spec: QuantizationSpec,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn empty(spec: QuantizationSpec) -> Self {
        Self {
            spec,
            counts: vec![0; spec.alphabet_size()],
            total: 0,
        }
    }

    /// Builds a histogram in one pass over `samples`.
    pub fn from_samples(samples: &[Symbol], spec: QuantizationSpec) -> Result<Self> {
        let mut builder = HistogramBuilder::new(spec);
        builder.push_slice(samples)?;
        Ok(builder.finish())
    }

    /// Takes ownership of raw counts; `counts.len()` must equal the alphabet size.
    pub fn from_counts(spec: QuantizationSpec, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != spec.alphabet_size() {
            return Err(Error::domain(format!(
                "{} counts supplied for an alphabet of {}",
                counts.len(),
                spec.alphabet_size()
            )));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::domain("histogram total overflows u64"))?;
        Ok(Self { spec, counts, total })
    }

    pub fn spec(&self) -> QuantizationSpec {
        self.spec
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Elementwise sum. Associative and commutative, with [`Histogram::empty`]
    /// as identity.
    pub fn merge(&self, other: &Histogram) -> Result<Histogram> {
        self.spec.check_same(&other.spec)?;
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Histogram {
            spec: self.spec,
            counts,
            total: self.total + other.total,
        })
    }

    pub fn to_distribution(&self) -> Result<SymbolDistribution> {
        if self.total == 0 {
            return Err(Error::EmptySource);
        }
        let total = self.total as f64;
        let probs = self.counts.iter().map(|&c| c as f64 / total).collect();
        Ok(SymbolDistribution {
            spec: self.spec,
            probs,
        })
    }

    /// Mean and population standard deviation, in symbol units.
    pub fn moments(&self) -> Result<Moments> {
        Ok(self.to_distribution()?.moments())
    }
}

/// Append-only accumulator for a [`Histogram`].
#[derive(Debug, Clone)]
pub struct HistogramBuilder {
    spec: QuantizationSpec,
    counts: Vec<u64>,
    total: u64,
}

impl HistogramBuilder {
    pub fn new(spec: QuantizationSpec) -> Self {
        Self {
            spec,
            counts: vec![0; spec.alphabet_size()],
            total: 0,
        }
    }

    pub fn push(&mut self, symbol: Symbol) -> Result<()> {
        self.spec.check_symbol(self.total, symbol)?;
        self.counts[symbol as usize] += 1;
        self.total += 1;
        Ok(())
    }

    /// Counts every sample in `samples`. On error nothing from this slice is
    /// counted.
    pub fn push_slice(&mut self, samples: &[Symbol]) -> Result<()> {
        let n = self.spec.alphabet_size();
        if let Some(i) = samples.iter().position(|&s| s as usize >= n) {
            return Err(Error::SymbolOutOfAlphabet {
                position: self.total + i as u64,
                symbol: samples[i] as u64,
                alphabet_size: n,
            });
        }
        for &s in samples {
            self.counts[s as usize] += 1;
        }
        self.total += samples.len() as u64;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn finish(self) -> Histogram {
        Histogram {
            spec: self.spec,
            counts: self.counts,
            total: self.total,
        }
    }
}

/// First and second central moments of a symbol distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Population standard deviation.
    pub sigma: f64,
}

/// Normalized symbol probabilities; the memoryless source model.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDistribution {
    spec: QuantizationSpec,
    probs: Vec<f64>,
}

/// Allowed deviation of a distribution's total mass from 1.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

impl SymbolDistribution {
    /// Validates that `probs` covers the alphabet, lies in `[0, 1]` and sums
    /// to 1 within [`PROBABILITY_SUM_TOLERANCE`].
    pub fn new(spec: QuantizationSpec, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != spec.alphabet_size() {
            return Err(Error::domain(format!(
                "{} probabilities supplied for an alphabet of {}",
                probs.len(),
                spec.alphabet_size()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::domain(format!("probability {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { spec, probs })
    }

    /// Scales non-negative weights to unit mass.
    pub fn from_weights(spec: QuantizationSpec, weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::EmptySource);
        }
        Self::new(spec, weights.iter().map(|w| w / sum).collect())
    }

    pub fn spec(&self) -> QuantizationSpec {
        self.spec
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn moments(&self) -> Moments {
        let mean: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum();
        let var: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = i as f64 - mean;
                p * d * d
            })
            .sum();
        Moments {
            mean,
            sigma: var.max(0.0).sqrt(),
        }
    }

    /// Total-variation distance, `½ Σ |p_i − q_i|`.
    pub fn total_variation(&self, other: &SymbolDistribution) -> Result<f64> {
        self.spec.check_same(&other.spec)?;
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(p, q)| (p - q).abs())
                .sum::<f64>())
    }
}

/// Adjacent-pair counts `(prev, next)`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigramHistogram {
    spec: QuantizationSpec,
    pair_counts: Vec<u64>,
    total_pairs: u64,
}

impl BigramHistogram {
    pub fn from_samples(samples: &[Symbol], spec: QuantizationSpec) -> Result<Self> {
        let mut builder = BigramBuilder::new(spec)?;
        builder.push_slice(samples)?;
        Ok(builder.finish())
    }

    pub fn spec(&self) -> QuantizationSpec {
        self.spec
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn count(&self, prev: Symbol, next: Symbol) -> u64 {
        let n = self.spec.alphabet_size();
        self.pair_counts[prev as usize * n + next as usize]
    }

    /// Counts for all successors of `prev`.
    pub fn row(&self, prev: Symbol) -> &[u64] {
        let n = self.spec.alphabet_size();
        let start = prev as usize * n;
        &self.pair_counts[start..start + n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.pair_counts.chunks_exact(self.spec.alphabet_size())
    }

    /// Row sums: the histogram of every symbol that has a successor.
    pub fn row_marginal(&self) -> Histogram {
        let counts = self.rows().map(|r| r.iter().sum()).collect();
        Histogram {
            spec: self.spec,
            counts,
            total: self.total_pairs,
        }
    }
}

/// Streaming builder for [`BigramHistogram`]; pairs spanning successive
/// `push_slice` calls are counted.
#[derive(Debug, Clone)]
pub struct BigramBuilder {
    spec: QuantizationSpec,
    pair_counts: Vec<u64>,
    total_pairs: u64,
    seen: u64,
    prev: Option<Symbol>,
}

impl BigramBuilder {
    pub fn new(spec: QuantizationSpec) -> Result<Self> {
        if spec.bit_depth() > MAX_BIGRAM_BIT_DEPTH {
            return Err(Error::AlphabetTooLarge {
                alphabet_size: spec.alphabet_size(),
                what: "a dense bigram matrix",
            });
        }
        let n = spec.alphabet_size();
        Ok(Self {
            spec,
            pair_counts: vec![0; n * n],
            total_pairs: 0,
            seen: 0,
            prev: None,
        })
    }

    pub fn push_slice(&mut self, samples: &[Symbol]) -> Result<()> {
        let n = self.spec.alphabet_size();
        if let Some(i) = samples.iter().position(|&s| s as usize >= n) {
            return Err(Error::SymbolOutOfAlphabet {
                position: self.seen + i as u64,
                symbol: samples[i] as u64,
                alphabet_size: n,
            });
        }
        for &s in samples {
            if let Some(p) = self.prev {
                self.pair_counts[p as usize * n + s as usize] += 1;
                self.total_pairs += 1;
            }
            self.prev = Some(s);
        }
        self.seen += samples.len() as u64;
        Ok(())
    }

    pub fn finish(self) -> BigramHistogram {
        BigramHistogram {
            spec: self.spec,
            pair_counts: self.pair_counts,
            total_pairs: self.total_pairs,
        }
    }
}
