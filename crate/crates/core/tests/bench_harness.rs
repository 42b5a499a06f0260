use std::fs;
use std::path::Path;

use escp_core::bench::{
    find_executable, run_bench, BenchOptions, BenchStatus, ToolAdapter, ToolTable, BUILTIN,
};
use escp_core::ingest::{Packing, StreamFormat};
use escp_core::synth::{write_synthetic, SynthSpec};
use escp_core::QuantizationSpec;

fn synth_file(dir: &Path, count: u64) -> std::path::PathBuf {
    let path = dir.join("synth.bin");
    let spec = SynthSpec::new(127.72, 9.70, QuantizationSpec::EIGHT_BIT, count, 99).unwrap();
    write_synthetic(fs::File::create(&path).unwrap(), &spec, Packing::OneBytePerSample).unwrap();
    path
}

fn opts(dir: &Path, table: ToolTable) -> BenchOptions {
    BenchOptions {
        table,
        runs: 1,
        scratch: dir.join("scratch"),
        format: StreamFormat::bytes(),
    }
}

#[test]
fn lossy_tool_is_never_verified() {
    if find_executable("head").is_none() {
        eprintln!("skipping: head not available");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), 10_000);
    let mut table = ToolTable::empty();
    // "compresses" by dropping the tail: sizes look great, data is gone
    table.insert(ToolAdapter::new("chop", "head -c 5000 {in}", "cat {in}", ".chop"));
    // flips nothing but appends a byte on the way back
    table.apply_config("grow.compress = cat {in}\ngrow.decompress = sed -e $a\\x {in}\n").unwrap();
    let res = run_bench(&input, &["chop", "grow"], &opts(dir.path(), table)).unwrap();
    assert_eq!(res[0].status, BenchStatus::Mismatch { first_difference: 5000 });
    assert!(!res[0].verified);
    assert!(!res[1].verified);
    assert!(matches!(res[1].status, BenchStatus::Mismatch { .. } | BenchStatus::Failed { .. }));
}

#[test]
fn failing_tool_keeps_scratch() {
    if find_executable("false").is_none() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), 1000);
    let mut table = ToolTable::empty();
    table.insert(ToolAdapter::new("broken", "false {in}", "false {in}", ".x"));
    let res = run_bench(&input, &["broken"], &opts(dir.path(), table)).unwrap();
    match &res[0].status {
        BenchStatus::Failed { scratch: Some(p), .. } => assert!(p.exists()),
        other => panic!("unexpected {other:?}"),
    }
    assert!(!res[0].verified);
}

#[test]
fn default_tools_and_builtin_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_file(dir.path(), 200_000);
    let o = opts(dir.path(), ToolTable::default());
    let res = run_bench(&input, &[BUILTIN, "gzip", "bzip2", "lzma"], &o).unwrap();
    assert_eq!(res.iter().map(|r| r.tool.as_str()).collect::<Vec<_>>(), [BUILTIN, "gzip", "bzip2", "lzma"]);
    for r in &res {
        match &r.status {
            BenchStatus::Unavailable(why) => eprintln!("{}: {why}", r.tool),
            BenchStatus::Verified => {
                assert!(r.verified);
                assert_eq!(r.original_bytes, 200_000);
                let pct = 100.0 * (1.0 - r.compressed_bytes as f64 / r.original_bytes as f64);
                assert!((r.achieved_percent - pct).abs() < 1e-9);
                assert!(r.compress_seconds >= 0.0 && r.decompress_seconds >= 0.0);
            }
            other => panic!("{}: {other:?}", r.tool),
        }
    }
    assert!(res[0].verified);
    // scratch directories are removed after verified runs
    let left: Vec<_> = fs::read_dir(dir.path().join("scratch")).unwrap().collect();
    assert!(left.is_empty(), "{left:?}");
}

#[test]
fn builtin_handles_packed_two_bit_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vlbi.bin");
    let spec = SynthSpec::new(1.5, 1.0, QuantizationSpec::TWO_BIT, 40_000, 4).unwrap();
    write_synthetic(fs::File::create(&path).unwrap(), &spec, Packing::PackedLsbFirst).unwrap();
    let mut o = opts(dir.path(), ToolTable::empty());
    o.format = StreamFormat::new(QuantizationSpec::TWO_BIT, Packing::PackedLsbFirst, 16, None).unwrap();
    let res = run_bench(&path, &[BUILTIN], &o).unwrap();
    assert_eq!(res[0].status, BenchStatus::Verified);
}
