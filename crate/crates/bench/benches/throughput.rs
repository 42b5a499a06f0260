use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use escp_core::codec::{decode, encode};
use escp_core::gaussian::{Discretization, GaussianSource};
use escp_core::info::{conditional_entropy, first_order_entropy};
use escp_core::ingest::{read_samples, write_samples, Packing, StreamFormat};
use escp_core::stream::{BigramHistogram, Histogram};
use escp_core::synth::{generate, SynthSpec};
use escp_core::QuantizationSpec;

const N: u64 = 1 << 20;

fn synthetic(bits: u32, sigma: f64) -> (QuantizationSpec, Vec<u16>) {
    let q = QuantizationSpec::new(bits).unwrap();
    let mu = q.alphabet_size() as f64 / 2.0;
    (q, generate(&SynthSpec::new(mu, sigma, q, N, 42).unwrap()))
}

fn histograms(c: &mut Criterion) {
    let (q, s) = synthetic(8, 9.7);
    let mut g = c.benchmark_group("histogram");
    g.throughput(Throughput::Elements(N));
    g.bench_function("first_order", |b| b.iter(|| Histogram::from_samples(black_box(&s), q).unwrap()));
    g.bench_function("bigram", |b| b.iter(|| BigramHistogram::from_samples(black_box(&s), q).unwrap()));
    g.finish();

    let h = Histogram::from_samples(&s, q).unwrap().to_distribution().unwrap();
    let bi = BigramHistogram::from_samples(&s, q).unwrap();
    c.bench_function("entropy/first_order_256", |b| b.iter(|| first_order_entropy(black_box(&h))));
    c.bench_function("entropy/conditional_256", |b| b.iter(|| conditional_entropy(black_box(&bi)).unwrap()));
}

fn unpacking(c: &mut Criterion) {
    let mut g = c.benchmark_group("unpack");
    g.throughput(Throughput::Elements(N));
    for (bits, packing) in [(8, Packing::OneBytePerSample), (2, Packing::PackedMsbFirst), (2, Packing::PackedLsbFirst)] {
        let (q, s) = synthetic(bits, 1.0);
        let mut bytes = Vec::new();
        write_samples(&mut bytes, &s, q, packing).unwrap();
        let f = StreamFormat::new(q, packing, 0, None).unwrap();
        g.bench_with_input(BenchmarkId::new(packing.name(), bits), &bytes, |b, bytes| {
            b.iter(|| read_samples(&bytes[..], f).unwrap())
        });
    }
    g.finish();
}

fn discretize(c: &mut Criterion) {
    let mut g = c.benchmark_group("discretize");
    for mode in [Discretization::BinIntegral, Discretization::PointSampled] {
        let src = GaussianSource::new(127.72, 9.70, QuantizationSpec::EIGHT_BIT, mode).unwrap();
        g.bench_function(mode.name(), |b| b.iter(|| black_box(&src).discretize()));
    }
    g.finish();
}

fn codec(c: &mut Criterion) {
    let mut g = c.benchmark_group("codec");
    g.throughput(Throughput::Elements(N));
    g.sample_size(20);
    for (bits, sigma) in [(8, 9.7), (2, 1.0)] {
        let (q, s) = synthetic(bits, sigma);
        let packing = Packing::default_for(q);
        let container = encode(&s, q, packing).unwrap();
        g.bench_with_input(BenchmarkId::new("encode", bits), &s, |b, s| b.iter(|| encode(s, q, packing).unwrap()));
        g.bench_with_input(BenchmarkId::new("decode", bits), &container, |b, c| b.iter(|| decode(c).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, histograms, unpacking, discretize, codec);
criterion_main!(benches);
