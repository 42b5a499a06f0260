//! Information content and lossless compressibility of quantized sample
//! streams.
//!
//! * [`stream`]: alphabets, histograms, distributions, bigram counts
//! * [`info`]: entropy, redundancy, compression bounds, rate algebra
//! * [`gaussian`]: discretized-Gaussian ADC model and sigma sweeps
//! * [`fit`]: exponential compressibility law and R²
//! * [`ingest`]: streaming raw-file readers and the 2-bit packer
//! * [`synth`]: seeded synthetic ADC streams
//! * [`codec`]: static range coder and its container
//! * [`bench`]: external-compressor benchmark harness
//! * [`report`]: CSV, text table and SVG output helpers

pub mod bench;
pub mod codec;
pub mod error;
pub mod fit;
pub mod gaussian;
pub mod info;
pub mod ingest;
pub mod report;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
pub use fit::{fit_exponential, ExpFit};
pub use gaussian::{entropy_sweep, Discretization, GaussianSource, SweepRow};
pub use info::{
    binary_entropy_curve, conditional_entropy, entropy_report, first_order_entropy,
    information_content, rate_algebra, EntropyReport, RatePlan,
};
pub use ingest::{read_samples, Packing, StreamFormat};
pub use stream::{
    BigramHistogram, Histogram, Moments, QuantizationSpec, Symbol, SymbolDistribution,
};
pub use synth::{generate, SynthSpec};
