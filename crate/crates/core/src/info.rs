//! Information content, entropy, redundancy and compressibility.
//!
//! All functions use the convention `0 · log2(0) = 0`.

use crate::error::{Error, Result};
use crate::stream::{BigramHistogram, SymbolDistribution};

/// Slack allowed when checking `H <= X` against floating-point noise.
const WORD_SIZE_SLACK: f64 = 1e-12;

/// `p · log2(p)` with the zero-probability limit taken as 0.
#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Self-information of an event of probability `p`, in bits.
pub fn information_content(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("probability {p} outside (0, 1]")));
    }
    // -log2(1) is -0.0
    Ok((-p.log2()).max(0.0))
}

/// Memoryless (first-order) entropy `-Σ p log2 p`, bits/symbol.
pub fn first_order_entropy(dist: &SymbolDistribution) -> f64 {
    let h = -dist.probs().iter().map(|&p| plogp(p)).sum::<f64>();
    h.max(0.0)
}

/// Entropy of the next symbol given the previous one, bits/symbol.
///
/// The conditioning distribution is the row marginal of the bigram matrix
/// (every symbol that has a successor). Rows with no pairs contribute 0.
pub fn conditional_entropy(bigrams: &BigramHistogram) -> Result<f64> {
    let total = bigrams.total_pairs();
    if total == 0 {
        return Err(Error::EmptySource);
    }
    let total = total as f64;
    let mut h = 0.0;
    for row in bigrams.rows() {
        let row_total: u64 = row.iter().sum();
        if row_total == 0 {
            continue;
        }
        let row_total_f = row_total as f64;
        let row_h: f64 = -row
            .iter()
            .map(|&c| plogp(c as f64 / row_total_f))
            .sum::<f64>();
        h += (row_total_f / total) * row_h;
    }
    Ok(h.max(0.0))
}

/// Compression bounds for a source of entropy `H` carried in `X`-bit words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// Channel word size `X`, bits/symbol.
    pub word_bits: f64,
    /// Source entropy `H`, bits/symbol.
    pub entropy: f64,
    /// `X - H`, bits.
    pub redundancy: f64,
    /// Smallest achievable size fraction, `H / X`.
    pub ratio_bound: f64,
    /// `(X - H) / X`.
    pub frac_compressibility: f64,
    /// `100 · (X - H) / X`.
    pub percent_compressibility: f64,
}

pub fn entropy_report(entropy: f64, word_bits: f64) -> Result<EntropyReport> {
    if !(word_bits > 0.0) || !word_bits.is_finite() {
        return Err(Error::domain(format!("word size {word_bits} must be positive")));
    }
    if !(entropy >= 0.0) || !entropy.is_finite() {
        return Err(Error::domain(format!("entropy {entropy} must be non-negative")));
    }
    if entropy > word_bits + WORD_SIZE_SLACK {
        return Err(Error::InfeasibleWordSize {
            entropy,
            word_bits,
        });
    }
    let entropy = entropy.min(word_bits);
    let redundancy = word_bits - entropy;
    let frac = redundancy / word_bits;
    Ok(EntropyReport {
        word_bits,
        entropy,
        redundancy,
        ratio_bound: 1.0 - frac,
        frac_compressibility: frac,
        percent_compressibility: 100.0 * frac,
    })
}

/// Source rate, interval and compression ratio of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePlan {
    source_rate: f64,
    interval: f64,
    ratio: f64,
}

impl RatePlan {
    pub fn new(source_rate: f64, interval: f64, ratio: f64) -> Result<Self> {
        if !(source_rate > 0.0 && source_rate.is_finite()) {
            return Err(Error::domain("source rate must be positive"));
        }
        if !(interval > 0.0 && interval.is_finite()) {
            return Err(Error::domain("interval must be positive"));
        }
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::domain(format!("compression ratio {ratio} outside (0, 1]")));
        }
        Ok(Self {
            source_rate,
            interval,
            ratio,
        })
    }

    pub fn source_rate(&self) -> f64 {
        self.source_rate
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn compressed_rate(&self) -> f64 {
        self.source_rate * self.ratio
    }

    pub fn compressed_time(&self) -> f64 {
        self.ratio * self.interval
    }
}

/// `(compressed_rate, compressed_time)` for a plan.
pub fn rate_algebra(plan: &RatePlan) -> (f64, f64) {
    (plan.compressed_rate(), plan.compressed_time())
}

/// Entropy of a binary source with `P(0) = p`.
pub fn binary_entropy(p: f64) -> f64 {
    (-plogp(p) - plogp(1.0 - p)).max(0.0)
}

/// `(p, H(p))` on `p = 0, step, 2·step, …, 1`. The final point is always
/// `p = 1`, even when `1 / step` is not an integer.
pub fn binary_entropy_curve(step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::domain(format!("step {step} outside (0, 0.5]")));
    }
    let n = (1.0 / step).floor() as usize;
    let mut curve: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let p = (i as f64 * step).min(1.0);
            (p, binary_entropy(p))
        })
        .collect();
    // snap values within rounding of 1 and close the curve
    if let Some(last) = curve.last_mut() {
        if (1.0 - last.0).abs() < 1e-9 {
            *last = (1.0, 0.0);
        } else {
            curve.push((1.0, 0.0));
        }
    }
    Ok(curve)
}
