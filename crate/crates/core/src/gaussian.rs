//! Discretized-Gaussian model of an N-bit ADC and entropy sweeps over sigma.
//!
//! Bin masses come from the complementary error function in `libm` (a port
//! of FreeBSD's msun, within about one ulp, i.e. relative error near 1e-16
//! over the whole real line). Each bin is evaluated on whichever side of
//! the mean keeps both tail probabilities small, so masses far from the mean
//! are not lost to cancellation.

use std::f64::consts::SQRT_2;

use libm::erfc;

use crate::error::{Error, Result};
use crate::info::{entropy_report, first_order_entropy};
use crate::stream::{QuantizationSpec, SymbolDistribution};

/// How a continuous density becomes a probability mass function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discretization {
    /// Integrate the density over `[k - ½, k + ½)`; tails saturate into the
    /// extreme codes like a clipping ADC.
    #[default]
    BinIntegral,
    /// Sample the density at each integer code and renormalize.
    PointSampled,
}

impl Discretization {
    pub fn name(&self) -> &'static str {
        match self {
            Discretization::BinIntegral => "integral",
            Discretization::PointSampled => "sampled",
        }
    }
}

impl std::str::FromStr for Discretization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integral" => Ok(Discretization::BinIntegral),
            "sampled" => Ok(Discretization::PointSampled),
            other => Err(Error::domain(format!(
                "unknown discretization {other:?} (expected integral|sampled)"
            ))),
        }
    }
}

/// A Gaussian analogue signal feeding an N-bit quantizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSource {
    mu: f64,
    sigma: f64,
    spec: QuantizationSpec,
    discretization: Discretization,
}

impl GaussianSource {
    pub fn new(
        mu: f64,
        sigma: f64,
        spec: QuantizationSpec,
        discretization: Discretization,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma {sigma} must be positive")));
        }
        let top = (spec.alphabet_size() - 1) as f64;
        if !(0.0..=top).contains(&mu) {
            return Err(Error::domain(format!("mean {mu} outside [0, {top}]")));
        }
        Ok(Self {
            mu,
            sigma,
            spec,
            discretization,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn spec(&self) -> QuantizationSpec {
        self.spec
    }

    pub fn discretization(&self) -> Discretization {
        self.discretization
    }

    pub fn discretize(&self) -> SymbolDistribution {
        let weights = match self.discretization {
            Discretization::BinIntegral => self.bin_masses(),
            Discretization::PointSampled => self.point_weights(),
        };
        let sum: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / sum).collect();
        SymbolDistribution::new(self.spec, probs)
            .expect("normalized Gaussian masses form a valid distribution")
    }

    fn bin_masses(&self) -> Vec<f64> {
        let n = self.spec.alphabet_size();
        let z = |edge: f64| (edge - self.mu) / self.sigma;
        (0..n)
            .map(|k| {
                let lo = if k == 0 {
                    f64::NEG_INFINITY
                } else {
                    z(k as f64 - 0.5)
                };
                let hi = if k == n - 1 {
                    f64::INFINITY
                } else {
                    z(k as f64 + 0.5)
                };
                standard_normal_mass(lo, hi)
            })
            .collect()
    }

    fn point_weights(&self) -> Vec<f64> {
        (0..self.spec.alphabet_size())
            .map(|k| {
                let z = (k as f64 - self.mu) / self.sigma;
                (-0.5 * z * z).exp()
            })
            .collect()
    }
}

/// Upper tail `P(Z > z)` of the standard normal.
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `P(lo <= Z < hi)` for a standard normal `Z`.
fn standard_normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        upper_tail(lo) - upper_tail(hi)
    } else if hi <= 0.0 {
        upper_tail(-hi) - upper_tail(-lo)
    } else {
        1.0 - upper_tail(hi) - upper_tail(-lo)
    }
}

/// Entropy, redundancy and compressibility of the model at one sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub entropy: f64,
    pub redundancy: f64,
    pub percent_compressibility: f64,
}

/// Evaluates the model at every sigma, with `X = bit_depth`.
pub fn entropy_sweep(
    mu: f64,
    spec: QuantizationSpec,
    sigmas: &[f64],
    discretization: Discretization,
) -> Result<Vec<SweepRow>> {
    if sigmas.is_empty() {
        return Err(Error::domain("sigma list is empty"));
    }
    if sigmas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("sigma values must be strictly increasing"));
    }
    let word_bits = spec.bit_depth() as f64;
    sigmas
        .iter()
        .map(|&sigma| {
            let source = GaussianSource::new(mu, sigma, spec, discretization)?;
            let report = entropy_report(first_order_entropy(&source.discretize()), word_bits)?;
            Ok(SweepRow {
                sigma,
                entropy: report.entropy,
                redundancy: report.redundancy,
                percent_compressibility: report.percent_compressibility,
            })
        })
        .collect()
}

/// `lo, lo + step, …` up to and including `hi` (within rounding).
pub fn sigma_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && step > 0.0) || !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::domain(format!(
            "invalid sigma range {lo}:{hi}:{step} (need 0 < lo <= hi, step > 0)"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::first_order_entropy;

    const EIGHT: QuantizationSpec = QuantizationSpec::EIGHT_BIT;

    fn entropy(mu: f64, sigma: f64, mode: Discretization) -> f64 {
        first_order_entropy(
            &GaussianSource::new(mu, sigma, EIGHT, mode)
                .unwrap()
                .discretize(),
        )
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = Discretization::BinIntegral;
        assert!(GaussianSource::new(128.0, 0.0, EIGHT, d).is_err());
        assert!(GaussianSource::new(128.0, -1.0, EIGHT, d).is_err());
        assert!(GaussianSource::new(-1.0, 1.0, EIGHT, d).is_err());
        assert!(GaussianSource::new(256.0, 1.0, EIGHT, d).is_err());
    }

    #[test]
    fn narrow_source_concentrates() {
        for mode in [Discretization::BinIntegral, Discretization::PointSampled] {
            let d = GaussianSource::new(128.0, 0.1, EIGHT, mode)
                .unwrap()
                .discretize();
            // P(|Z| > 5) is 5.7e-7
            assert!(d.probs()[128] > 1.0 - 1e-6);
            assert!(entropy(128.0, 0.1, mode) < 1e-4);
            assert!(entropy(128.0, 0.05, mode) < 1e-15);
        }
    }

    #[test]
    fn table_two_entropies() {
        for mode in [Discretization::BinIntegral, Discretization::PointSampled] {
            assert!((entropy(127.72, 9.70, mode) - 5.325).abs() < 0.01);
            assert!((entropy(127.69, 16.73, mode) - 6.11).abs() < 0.01);
        }
    }

    #[test]
    fn mass_sums_to_one() {
        for mode in [Discretization::BinIntegral, Discretization::PointSampled] {
            for sigma in [0.05, 0.7, 3.0, 35.0, 200.0] {
                let d = GaussianSource::new(100.3, sigma, EIGHT, mode)
                    .unwrap()
                    .discretize();
                let sum: f64 = d.probs().iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "{mode:?} {sigma}: {sum}");
            }
        }
    }

    #[test]
    fn saturating_tails() {
        // a wide source piles mass into the end codes
        let d = GaussianSource::new(127.5, 500.0, EIGHT, Discretization::BinIntegral)
            .unwrap()
            .discretize();
        let p = d.probs();
        assert!(p[0] > 0.3 && p[255] > 0.3);
        assert!((p[0] - p[255]).abs() < 1e-12);
    }

    #[test]
    fn symmetric_about_midpoint() {
        for spec in [QuantizationSpec::TWO_BIT, EIGHT] {
            let source = GaussianSource::new(spec.midpoint(), 7.3, spec, Discretization::BinIntegral)
                .unwrap();
            let p = source.discretize();
            let p = p.probs();
            let n = p.len();
            for k in 0..n {
                assert!((p[k] - p[n - 1 - k]).abs() < 1e-12);
            }
            let m = source.discretize().moments();
            assert!((m.mean - spec.midpoint()).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_examples() {
        let rows = entropy_sweep(128.0, EIGHT, &[9.70], Discretization::BinIntegral).unwrap();
        assert!((rows[0].percent_compressibility - 33.4).abs() < 0.3);
        let rows = entropy_sweep(128.0, EIGHT, &[16.73], Discretization::BinIntegral).unwrap();
        assert!((rows[0].percent_compressibility - 23.6).abs() < 0.3);
    }

    #[test]
    fn sweep_rows_are_self_consistent() {
        let sigmas = sigma_grid(1.0, 80.0, 1.0).unwrap();
        assert_eq!(sigmas.len(), 80);
        let rows = entropy_sweep(128.0, EIGHT, &sigmas, Discretization::BinIntegral).unwrap();
        for r in rows {
            assert!((r.redundancy - (8.0 - r.entropy)).abs() < 1e-12);
            assert!((r.percent_compressibility - 100.0 * r.redundancy / 8.0).abs() < 1e-12);
            assert!(r.entropy < 8.0 && r.percent_compressibility > 0.0);
        }
    }

    #[test]
    fn sweep_validation() {
        let d = Discretization::BinIntegral;
        assert!(entropy_sweep(128.0, EIGHT, &[], d).is_err());
        assert!(entropy_sweep(128.0, EIGHT, &[2.0, 1.0], d).is_err());
        assert!(entropy_sweep(128.0, EIGHT, &[1.0, 1.0], d).is_err());
        assert!(entropy_sweep(128.0, EIGHT, &[-1.0, 1.0], d).is_err());
    }

    #[test]
    fn entropy_increases_with_sigma() {
        let sigmas = sigma_grid(0.5, 32.0, 0.25).unwrap();
        let rows = entropy_sweep(128.0, EIGHT, &sigmas, Discretization::BinIntegral).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].entropy > w[0].entropy, "{:?}", w);
        }
    }

    #[test]
    fn modes_converge_for_wide_sources() {
        // beyond ~40 the modes part ways: saturation folds tail mass into
        // the end codes, point sampling renormalizes it away
        for sigma in sigma_grid(3.0, 40.0, 0.5).unwrap() {
            let a = entropy(128.0, sigma, Discretization::BinIntegral);
            let b = entropy(128.0, sigma, Discretization::PointSampled);
            assert!((a - b).abs() < 0.01, "sigma {sigma}: {a} vs {b}");
        }
    }

    #[test]
    fn unclipped_entropy_tracks_differential_entropy() {
        // h(X) of a Gaussian, unit-width bins
        for sigma in [5.0, 10.0, 20.0, 30.0, 40.0] {
            let oracle = (sigma * (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt()).log2();
            let h = entropy(128.0, sigma, Discretization::BinIntegral);
            assert!((h - oracle).abs() < 0.02, "sigma {sigma}: {h} vs {oracle}");
        }
    }

    #[test]
    fn tail_masses_do_not_cancel() {
        // P(Z > 8) is ~6.2e-16; a 1 - cdf evaluation would return 0 or noise
        let m = standard_normal_mass(8.0, f64::INFINITY);
        assert!((m / 6.22096057427178e-16 - 1.0).abs() < 1e-9, "{m}");
        let m = standard_normal_mass(f64::NEG_INFINITY, -8.0);
        assert!((m / 6.22096057427178e-16 - 1.0).abs() < 1e-9);
        assert!((standard_normal_mass(-1.0, 1.0) - 0.682689492137086).abs() < 1e-14);
    }

    #[test]
    fn grid_construction() {
        assert_eq!(sigma_grid(5.0, 60.0, 1.0).unwrap().len(), 56);
        assert_eq!(sigma_grid(1.0, 2.0, 0.1).unwrap().len(), 11);
        assert!(sigma_grid(0.0, 2.0, 1.0).is_err());
        assert!(sigma_grid(3.0, 2.0, 1.0).is_err());
        assert!(sigma_grid(1.0, 2.0, 0.0).is_err());
    }
}
