//! Streaming readers for raw quantized sample files.
//!
//! Files are a run of header bytes followed by samples, either one byte per
//! sample (8-bit) or several samples packed into each byte. Readers work
//! through a fixed-size buffer, so memory use does not depend on file size.

use std::fs::File;
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::thread;

use crate::error::{Error, Result};
use crate::stream::{
    BigramBuilder, BigramHistogram, Histogram, HistogramBuilder, QuantizationSpec, Symbol,
};

/// Bytes read from the underlying stream per refill.
pub const READ_BUFFER_BYTES: usize = 64 * 1024;

/// Header length assumed for `.lba` recordings when none is given.
pub const LBA_HEADER_BYTES: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Packing {
    OneBytePerSample,
    /// First sample in the most significant bits of each byte.
    PackedMsbFirst,
    /// First sample in the least significant bits of each byte.
    PackedLsbFirst,
}

impl Packing {
    /// Wire value used by the codec container.
    pub fn code(&self) -> u8 {
        match self {
            Packing::OneBytePerSample => 0,
            Packing::PackedMsbFirst => 1,
            Packing::PackedLsbFirst => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Packing::OneBytePerSample),
            1 => Some(Packing::PackedMsbFirst),
            2 => Some(Packing::PackedLsbFirst),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Packing::OneBytePerSample => "byte",
            Packing::PackedMsbFirst => "msb",
            Packing::PackedLsbFirst => "lsb",
        }
    }

    /// Natural packing for a bit depth: bytes at 8 bits, MSB-first below.
    pub fn default_for(spec: QuantizationSpec) -> Self {
        if spec.bit_depth() == 8 {
            Packing::OneBytePerSample
        } else {
            Packing::PackedMsbFirst
        }
    }
}

/// Layout of a raw sample file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFormat {
    header_skip: u64,
    spec: QuantizationSpec,
    packing: Packing,
    max_samples: Option<u64>,
}

impl StreamFormat {
    pub fn new(
        spec: QuantizationSpec,
        packing: Packing,
        header_skip: u64,
        max_samples: Option<u64>,
    ) -> Result<Self> {
        let bits = spec.bit_depth();
        match packing {
            Packing::OneBytePerSample if bits != 8 => {
                return Err(Error::domain(format!(
                    "one byte per sample requires 8-bit samples, not {bits}-bit"
                )))
            }
            Packing::PackedMsbFirst | Packing::PackedLsbFirst if bits > 8 || 8 % bits != 0 => {
                return Err(Error::domain(format!(
                    "{bits}-bit samples do not pack evenly into bytes"
                )))
            }
            _ => {}
        }
        if max_samples == Some(0) {
            return Err(Error::domain("sample limit must be positive"));
        }
        Ok(Self {
            header_skip,
            spec,
            packing,
            max_samples,
        })
    }

    /// 8-bit, one byte per sample, no header.
    pub fn bytes() -> Self {
        Self {
            header_skip: 0,
            spec: QuantizationSpec::EIGHT_BIT,
            packing: Packing::OneBytePerSample,
            max_samples: None,
        }
    }

    pub fn with_header_skip(mut self, header_skip: u64) -> Self {
        self.header_skip = header_skip;
        self
    }

    pub fn with_max_samples(mut self, max_samples: Option<u64>) -> Self {
        self.max_samples = max_samples.filter(|&n| n > 0);
        self
    }

    pub fn header_skip(&self) -> u64 {
        self.header_skip
    }

    pub fn spec(&self) -> QuantizationSpec {
        self.spec
    }

    pub fn packing(&self) -> Packing {
        self.packing
    }

    pub fn max_samples(&self) -> Option<u64> {
        self.max_samples
    }

    pub fn samples_per_byte(&self) -> u64 {
        (8 / self.spec.bit_depth()) as u64
    }
}

/// Header length to assume for a file: 16 bytes for `*.lba`, else 0.
pub fn default_header_skip(path: &Path) -> u64 {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("lba") => LBA_HEADER_BYTES,
        _ => 0,
    }
}

/// Unpacks one byte into `out`.
fn unpack_byte(byte: u8, bits: u32, packing: Packing, out: &mut Vec<Symbol>) {
    let per_byte = 8 / bits;
    let mask = ((1u16 << bits) - 1) as u8;
    match packing {
        Packing::OneBytePerSample => out.push(byte as Symbol),
        Packing::PackedMsbFirst => {
            for i in (0..per_byte).rev() {
                out.push(((byte >> (i * bits)) & mask) as Symbol);
            }
        }
        Packing::PackedLsbFirst => {
            for i in 0..per_byte {
                out.push(((byte >> (i * bits)) & mask) as Symbol);
            }
        }
    }
}

/// Single-consumer streaming sample reader.
pub struct SampleReader<R> {
    inner: R,
    format: StreamFormat,
    buf: Box<[u8]>,
    offset: u64,
    delivered: u64,
    done: bool,
}

impl<R: Read> SampleReader<R> {
    /// Consumes the header; fails if the stream ends inside it.
    pub fn new(mut inner: R, format: StreamFormat) -> Result<Self> {
        let skipped = io::copy(&mut (&mut inner).take(format.header_skip), &mut io::sink())
            .map_err(|source| Error::Read { offset: 0, source })?;
        if skipped < format.header_skip {
            return Err(Error::TruncatedHeader {
                expected: format.header_skip,
                got: skipped,
            });
        }
        Ok(Self {
            inner,
            format,
            buf: vec![0u8; READ_BUFFER_BYTES].into_boxed_slice(),
            offset: format.header_skip,
            delivered: 0,
            done: false,
        })
    }

    /// Byte offset of the next unread byte, header included.
    pub fn byte_offset(&self) -> u64 {
        self.offset
    }

    pub fn samples_read(&self) -> u64 {
        self.delivered
    }

    /// Replaces `out` with the next run of samples; returns how many were
    /// produced, 0 at end of stream.
    pub fn read_chunk(&mut self, out: &mut Vec<Symbol>) -> Result<usize> {
        out.clear();
        if self.done {
            return Ok(0);
        }
        let per_byte = self.format.samples_per_byte();
        let mut want_bytes = self.buf.len() as u64;
        if let Some(max) = self.format.max_samples {
            let remaining = max - self.delivered;
            want_bytes = want_bytes.min(remaining.div_ceil(per_byte));
        }
        if want_bytes == 0 {
            self.done = true;
            return Ok(0);
        }
        let n = loop {
            match self.inner.read(&mut self.buf[..want_bytes as usize]) {
                Ok(n) => break n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(source) => {
                    return Err(Error::Read {
                        offset: self.offset,
                        source,
                    })
                }
            }
        };
        if n == 0 {
            self.done = true;
            return Ok(0);
        }
        self.offset += n as u64;
        let bits = self.format.spec.bit_depth();
        out.reserve(n * per_byte as usize);
        for &byte in &self.buf[..n] {
            unpack_byte(byte, bits, self.format.packing, out);
        }
        if let Some(max) = self.format.max_samples {
            let remaining = (max - self.delivered) as usize;
            if out.len() >= remaining {
                out.truncate(remaining);
                self.done = true;
            }
        }
        self.delivered += out.len() as u64;
        Ok(out.len())
    }
}

/// Reads every sample into memory.
pub fn read_samples<R: Read>(reader: R, format: StreamFormat) -> Result<Vec<Symbol>> {
    let mut reader = SampleReader::new(reader, format)?;
    let mut all = Vec::new();
    let mut chunk = Vec::new();
    while reader.read_chunk(&mut chunk)? > 0 {
        all.extend_from_slice(&chunk);
    }
    Ok(all)
}

/// Packs samples into bytes. A final partial byte is padded with zero
/// symbols.
pub fn write_samples<W: Write>(
    mut writer: W,
    samples: &[Symbol],
    spec: QuantizationSpec,
    packing: Packing,
) -> Result<()> {
    StreamFormat::new(spec, packing, 0, None)?;
    for (i, &s) in samples.iter().enumerate() {
        spec.check_symbol(i as u64, s)?;
    }
    let bits = spec.bit_depth();
    let per_byte = (8 / bits) as usize;
    let mut out = Vec::with_capacity(READ_BUFFER_BYTES);
    for group in samples.chunks(per_byte) {
        let byte = match packing {
            Packing::OneBytePerSample => group[0] as u8,
            Packing::PackedMsbFirst => group.iter().enumerate().fold(0u8, |acc, (i, &s)| {
                acc | ((s as u8) << ((per_byte - 1 - i) as u32 * bits))
            }),
            Packing::PackedLsbFirst => group
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &s)| acc | ((s as u8) << (i as u32 * bits))),
        };
        out.push(byte);
        if out.len() == READ_BUFFER_BYTES {
            writer.write_all(&out)?;
            out.clear();
        }
    }
    writer.write_all(&out)?;
    writer.flush()?;
    Ok(())
}

/// Statistics from one streaming pass.
#[derive(Debug, Clone)]
pub struct StreamStats {
    pub histogram: Histogram,
    pub bigrams: Option<BigramHistogram>,
    /// Bytes consumed, header included.
    pub bytes_read: u64,
}

/// Single pass building the histogram and, optionally, bigram counts.
pub fn scan_stream<R: Read>(reader: R, format: StreamFormat, bigrams: bool) -> Result<StreamStats> {
    let mut reader = SampleReader::new(reader, format)?;
    let mut hist = HistogramBuilder::new(format.spec);
    let mut pairs = if bigrams {
        Some(BigramBuilder::new(format.spec)?)
    } else {
        None
    };
    let mut chunk = Vec::with_capacity(READ_BUFFER_BYTES * 8);
    while reader.read_chunk(&mut chunk)? > 0 {
        hist.push_slice(&chunk)?;
        if let Some(p) = pairs.as_mut() {
            p.push_slice(&chunk)?;
        }
    }
    Ok(StreamStats {
        histogram: hist.finish(),
        bigrams: pairs.map(BigramBuilder::finish),
        bytes_read: reader.byte_offset(),
    })
}

pub fn histogram_from_reader<R: Read>(reader: R, format: StreamFormat) -> Result<Histogram> {
    Ok(scan_stream(reader, format, false)?.histogram)
}

/// Sample-aligned slice of a file's data region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteRange {
    /// Offset from the end of the header.
    pub start: u64,
    pub len: u64,
    /// Samples to take from this range.
    pub samples: u64,
}

/// Splits a file's data region into at most `parts` contiguous ranges of
/// whole bytes. Every byte boundary is a sample boundary because samples
/// never straddle bytes.
pub fn plan_ranges(file_len: u64, format: &StreamFormat, parts: usize) -> Result<Vec<ByteRange>> {
    let boundaries = data_boundaries(file_len, format)?;
    let (data_bytes, samples) = boundaries;
    let parts = (parts.max(1) as u64).min(data_bytes.max(1));
    let cuts: Vec<u64> = (0..=parts).map(|i| data_bytes * i / parts).collect();
    Ok(ranges_from_cuts(&cuts, samples, format))
}

/// Ranges between arbitrary byte cut points (sorted, starting at 0 and
/// ending at the data length).
pub fn ranges_at(file_len: u64, format: &StreamFormat, cuts: &[u64]) -> Result<Vec<ByteRange>> {
    let (data_bytes, samples) = data_boundaries(file_len, format)?;
    if cuts.first() != Some(&0)
        || cuts.last() != Some(&data_bytes)
        || cuts.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::domain("cut points must run from 0 to the data length"));
    }
    Ok(ranges_from_cuts(cuts, samples, format))
}

fn data_boundaries(file_len: u64, format: &StreamFormat) -> Result<(u64, u64)> {
    if file_len < format.header_skip {
        return Err(Error::TruncatedHeader {
            expected: format.header_skip,
            got: file_len,
        });
    }
    let per_byte = format.samples_per_byte();
    let mut data_bytes = file_len - format.header_skip;
    let mut samples = data_bytes * per_byte;
    if let Some(max) = format.max_samples {
        if max < samples {
            samples = max;
            data_bytes = max.div_ceil(per_byte);
        }
    }
    Ok((data_bytes, samples))
}

fn ranges_from_cuts(cuts: &[u64], total_samples: u64, format: &StreamFormat) -> Vec<ByteRange> {
    let per_byte = format.samples_per_byte();
    cuts.windows(2)
        .map(|w| {
            let first = w[0] * per_byte;
            let end = (w[1] * per_byte).min(total_samples);
            ByteRange {
                start: w[0],
                len: w[1] - w[0],
                samples: end.saturating_sub(first),
            }
        })
        .collect()
}

/// Histogram of one range, read through its own file handle.
pub fn histogram_of_range(path: &Path, format: &StreamFormat, range: ByteRange) -> Result<Histogram> {
    if range.samples == 0 {
        return Ok(Histogram::empty(format.spec));
    }
    let mut file = File::open(path)?;
    let start = format.header_skip + range.start;
    file.seek(SeekFrom::Start(start))?;
    let sub = StreamFormat {
        header_skip: 0,
        max_samples: Some(range.samples),
        ..*format
    };
    let mut reader = SampleReader::new(file.take(range.len), sub)?;
    reader.offset = start;
    let mut hist = HistogramBuilder::new(format.spec);
    let mut chunk = Vec::with_capacity(READ_BUFFER_BYTES * 8);
    while reader.read_chunk(&mut chunk)? > 0 {
        hist.push_slice(&chunk)?;
    }
    Ok(hist.finish())
}

/// Histograms each range on its own thread and merges the results in range
/// order. The outcome is identical to a single sequential pass.
pub fn histogram_of_ranges(
    path: &Path,
    format: &StreamFormat,
    ranges: &[ByteRange],
) -> Result<Histogram> {
    let partials: Vec<Result<Histogram>> = thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .iter()
            .map(|&range| scope.spawn(move || histogram_of_range(path, format, range)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("histogram worker panicked"))
            .collect()
    });
    partials
        .into_iter()
        .try_fold(Histogram::empty(format.spec), |acc, h| acc.merge(&h?))
}

/// Chunk-parallel histogram of a whole file.
pub fn histogram_file_parallel(path: &Path, format: &StreamFormat, parts: usize) -> Result<Histogram> {
    let len = std::fs::metadata(path)?.len();
    let ranges = plan_ranges(len, format, parts)?;
    histogram_of_ranges(path, format, &ranges)
}
