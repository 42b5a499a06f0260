//! Built-in lossless coder: a two-pass static range coder in a
//! self-describing container.
//!
//! Container layout (little-endian integers):
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 4 | magic `"EScp"` |
//! | 4 | 1 | version, `0x01` |
//! | 5 | 1 | bit depth |
//! | 6 | 1 | packing of the original raw file |
//! | 7 | 8 | sample count, `u64` |
//! | 15 | 8·2^N | symbol counts `0..2^N`, `u64` each |
//! | … | 4·k | range-coded payload, 32-bit words, MSB first |
//! | end−4 | 4 | CRC-32 (IEEE, reflected) of every preceding byte |

mod range;

pub use range::{FrequencyTable, RangeDecoder, RangeEncoder, MAX_TOTAL};

use crate::error::{Error, Result};
use crate::ingest::Packing;
use crate::stream::{Histogram, QuantizationSpec, Symbol};

pub const MAGIC: [u8; 4] = *b"EScp";
pub const VERSION: u8 = 0x01;
/// Magic, version, bit depth, packing and sample count.
pub const FIXED_HEADER_BYTES: usize = 15;
pub const CHECKSUM_BYTES: usize = 4;

/// Serialized model size for a bit depth.
pub fn model_bytes(spec: QuantizationSpec) -> usize {
    8 * spec.alphabet_size()
}

/// Container bytes excluding the payload.
pub fn container_overhead(spec: QuantizationSpec) -> usize {
    FIXED_HEADER_BYTES + model_bytes(spec) + CHECKSUM_BYTES
}

/// Encodes `samples` in two passes: count, then range-code against the
/// frozen counts.
pub fn encode(samples: &[Symbol], spec: QuantizationSpec, packing: Packing) -> Result<Vec<u8>> {
    if samples.is_empty() {
        return Err(Error::EmptySource);
    }
    let histogram = Histogram::from_samples(samples, spec)?;
    let table = FrequencyTable::from_counts(histogram.counts())?;

    let mut out = Vec::with_capacity(container_overhead(spec) + samples.len() / 2);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(spec.bit_depth() as u8);
    out.push(packing.code());
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for &c in histogram.counts() {
        out.extend_from_slice(&c.to_le_bytes());
    }

    let mut enc = RangeEncoder::new();
    for &s in samples {
        enc.encode(&table, s as usize);
    }
    out.extend_from_slice(&enc.finish());

    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Output of [`decode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub spec: QuantizationSpec,
    pub packing: Packing,
    pub samples: Vec<Symbol>,
}

/// Parsed container header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerInfo {
    pub spec: QuantizationSpec,
    pub packing: Packing,
    pub sample_count: u64,
    pub histogram: Histogram,
    pub payload_bytes: usize,
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

/// Validates structure and checksum, returning the header and payload.
pub fn inspect(container: &[u8]) -> Result<(ContainerInfo, &[u8])> {
    if container.len() < MAGIC.len() {
        return Err(Error::Truncated("shorter than the magic number"));
    }
    if container[..4] != MAGIC {
        return Err(Error::Format("bad magic, not an EScp container".into()));
    }
    if container.len() < FIXED_HEADER_BYTES + CHECKSUM_BYTES {
        return Err(Error::Truncated("header incomplete"));
    }
    if container[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", container[4])));
    }
    let spec = QuantizationSpec::new(container[5] as u32)
        .map_err(|_| Error::Format(format!("invalid bit depth {}", container[5])))?;
    let packing = Packing::from_code(container[6])
        .ok_or_else(|| Error::Format(format!("invalid packing flag {}", container[6])))?;
    let sample_count = read_u64(container, 7);

    let model_end = FIXED_HEADER_BYTES + model_bytes(spec);
    if container.len() < model_end + CHECKSUM_BYTES {
        return Err(Error::Truncated("model incomplete"));
    }
    let payload_len = container.len() - model_end - CHECKSUM_BYTES;
    if payload_len < 8 || !payload_len.is_multiple_of(4) {
        return Err(Error::Truncated("payload is not a whole number of words"));
    }

    let body = &container[..container.len() - CHECKSUM_BYTES];
    let stored = u32::from_le_bytes(
        container[container.len() - CHECKSUM_BYTES..]
            .try_into()
            .expect("4-byte slice"),
    );
    if crc32fast::hash(body) != stored {
        return Err(Error::Corrupt { stage: "checksum" });
    }

    let counts = (0..spec.alphabet_size())
        .map(|i| read_u64(container, FIXED_HEADER_BYTES + 8 * i))
        .collect();
    let histogram =
        Histogram::from_counts(spec, counts).map_err(|_| Error::Corrupt { stage: "model" })?;
    if histogram.total() != sample_count || sample_count == 0 {
        return Err(Error::Corrupt { stage: "model" });
    }
    Ok((
        ContainerInfo {
            spec,
            packing,
            sample_count,
            histogram,
            payload_bytes: payload_len,
        },
        &container[model_end..container.len() - CHECKSUM_BYTES],
    ))
}

/// Recovers the exact sample sequence from a container.
pub fn decode(container: &[u8]) -> Result<Decoded> {
    let (info, payload) = inspect(container)?;
    let table = FrequencyTable::from_counts(info.histogram.counts())?;
    let count = usize::try_from(info.sample_count).map_err(|_| Error::Corrupt { stage: "model" })?;

    let mut dec = RangeDecoder::new(payload)?;
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        samples.push(dec.decode(&table)? as Symbol);
    }
    if !dec.exhausted() {
        return Err(Error::Corrupt { stage: "payload" });
    }
    Ok(Decoded {
        spec: info.spec,
        packing: info.packing,
        samples,
    })
}
