//! Compression benchmark harness.
//!
//! Each tool compresses the input file, decompresses the result, and the
//! output is compared byte for byte against the original. External tools
//! run as subprocesses described by an adapter table; the built-in codec
//! runs in-process under the identifier [`BUILTIN`].

use std::collections::BTreeMap;
use std::env;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use crate::codec;
use crate::error::{Error, Result};
use crate::ingest::{read_samples, write_samples, StreamFormat};

/// Identifier of the in-process range coder.
pub const BUILTIN: &str = "builtin";

/// Environment variable naming the scratch directory.
pub const SCRATCH_ENV: &str = "ESCP_SCRATCH";

/// Default number of timed repetitions; the median is reported.
pub const DEFAULT_RUNS: usize = 3;

/// How to drive one external compressor.
///
/// Templates are whitespace-separated argv lists. `{in}` is replaced by the
/// input path and `{out}` by the output path; when a template has no
/// `{out}`, the tool's stdout becomes the output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolAdapter {
    pub id: String,
    pub compress: Vec<String>,
    pub decompress: Vec<String>,
    pub suffix: String,
}

impl ToolAdapter {
    pub fn new(id: &str, compress: &str, decompress: &str, suffix: &str) -> Self {
        Self {
            id: id.to_string(),
            compress: split_template(compress),
            decompress: split_template(decompress),
            suffix: suffix.to_string(),
        }
    }
}

fn split_template(t: &str) -> Vec<String> {
    t.split_whitespace().map(str::to_string).collect()
}

/// Adapter lookup by identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolTable {
    adapters: BTreeMap<String, ToolAdapter>,
}

impl Default for ToolTable {
    /// gzip, bzip2 and lzma at their default levels.
    fn default() -> Self {
        let mut adapters = BTreeMap::new();
        for a in [
            ToolAdapter::new("gzip", "gzip -c {in}", "gzip -dc {in}", ".gz"),
            ToolAdapter::new("bzip2", "bzip2 -c {in}", "bzip2 -dc {in}", ".bz2"),
            ToolAdapter::new("lzma", "lzma -c {in}", "lzma -dc {in}", ".lzma"),
        ] {
            adapters.insert(a.id.clone(), a);
        }
        Self { adapters }
    }
}

impl ToolTable {
    pub fn empty() -> Self {
        Self {
            adapters: BTreeMap::new(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&ToolAdapter> {
        self.adapters.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.adapters.keys().map(String::as_str)
    }

    pub fn insert(&mut self, adapter: ToolAdapter) {
        self.adapters.insert(adapter.id.clone(), adapter);
    }

    /// Applies a plain-text config on top of this table.
    ///
    /// ```text
    /// # identifier.field = value
    /// zstd.compress   = zstd -q -c {in}
    /// zstd.decompress = zstd -q -dc {in}
    /// zstd.suffix     = .zst
    /// ```
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        let mut staged: BTreeMap<String, [Option<String>; 3]> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `id.field = value`", lineno + 1))
            })?;
            let (id, field) = key.trim().rsplit_once('.').ok_or_else(|| {
                Error::Config(format!("line {}: key must be `id.field`", lineno + 1))
            })?;
            let id = id.trim();
            if id.is_empty() || id == BUILTIN {
                return Err(Error::Config(format!(
                    "line {}: invalid tool identifier {id:?}",
                    lineno + 1
                )));
            }
            let entry = staged.entry(id.to_string()).or_default();
            let value = Some(value.trim().to_string());
            match field.trim() {
                "compress" => entry[0] = value,
                "decompress" => entry[1] = value,
                "suffix" => entry[2] = value,
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown field {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        for (id, [c, d, s]) in staged {
            let base = self.adapters.get(&id).cloned();
            let compress = c
                .map(|t| split_template(&t))
                .or_else(|| base.as_ref().map(|b| b.compress.clone()));
            let decompress = d
                .map(|t| split_template(&t))
                .or_else(|| base.as_ref().map(|b| b.decompress.clone()));
            let suffix = s
                .or_else(|| base.as_ref().map(|b| b.suffix.clone()))
                .unwrap_or_else(|| format!(".{id}"));
            match (compress, decompress) {
                (Some(compress), Some(decompress)) if !compress.is_empty() && !decompress.is_empty() => {
                    self.insert(ToolAdapter {
                        id,
                        compress,
                        decompress,
                        suffix,
                    });
                }
                _ => {
                    return Err(Error::Config(format!(
                        "tool {id:?} needs both compress and decompress templates"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let mut table = Self::default();
        table.apply_config(&fs::read_to_string(path)?)?;
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchStatus {
    /// Round trip reproduced the input exactly on every run.
    Verified,
    /// Decompressed output differed from the input.
    Mismatch { first_difference: u64 },
    /// The tool could not be found.
    Unavailable(String),
    /// A run failed; temporaries are kept at `scratch` when present.
    Failed {
        message: String,
        scratch: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub tool: String,
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub achieved_percent: f64,
    pub verified: bool,
    /// Median wall-clock seconds.
    pub compress_seconds: f64,
    pub decompress_seconds: f64,
    pub status: BenchStatus,
}

impl BenchResult {
    fn without_measurement(tool: &str, original_bytes: u64, status: BenchStatus) -> Self {
        Self {
            tool: tool.to_string(),
            original_bytes,
            compressed_bytes: 0,
            achieved_percent: f64::NAN,
            verified: false,
            compress_seconds: f64::NAN,
            decompress_seconds: f64::NAN,
            status,
        }
    }

    pub fn is_measured(&self) -> bool {
        matches!(
            self.status,
            BenchStatus::Verified | BenchStatus::Mismatch { .. }
        )
    }
}

/// `100 · (1 − compressed / original)`.
pub fn achieved_percent(original: u64, compressed: u64) -> f64 {
    if original == 0 {
        return 0.0;
    }
    100.0 * (1.0 - compressed as f64 / original as f64)
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub table: ToolTable,
    pub runs: usize,
    /// Parent for per-tool scratch directories.
    pub scratch: PathBuf,
    /// How the built-in codec interprets the file. The header skip and
    /// sample limit are ignored: the whole file is coded so that the round
    /// trip can be compared byte for byte.
    pub format: StreamFormat,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            table: ToolTable::default(),
            runs: DEFAULT_RUNS,
            scratch: scratch_dir(),
            format: StreamFormat::bytes(),
        }
    }
}

/// `$ESCP_SCRATCH`, or the system temporary directory.
pub fn scratch_dir() -> PathBuf {
    env::var_os(SCRATCH_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(env::temp_dir)
}

/// Runs every tool in order, sequentially.
pub fn run_bench(input: &Path, tools: &[&str], opts: &BenchOptions) -> Result<Vec<BenchResult>> {
    let original_bytes = fs::metadata(input)?.len();
    fs::create_dir_all(&opts.scratch)?;
    Ok(tools
        .iter()
        .map(|&tool| run_tool(input, original_bytes, tool, opts))
        .collect())
}

fn run_tool(input: &Path, original_bytes: u64, tool: &str, opts: &BenchOptions) -> BenchResult {
    let adapter = if tool == BUILTIN {
        None
    } else {
        match opts.table.get(tool) {
            None => {
                return BenchResult::without_measurement(
                    tool,
                    original_bytes,
                    BenchStatus::Unavailable(format!("no adapter for {tool:?}")),
                )
            }
            Some(a) => {
                if let Err(msg) = check_resolvable(a) {
                    return BenchResult::without_measurement(
                        tool,
                        original_bytes,
                        BenchStatus::Unavailable(msg),
                    );
                }
                Some(a)
            }
        }
    };

    let dir = match tempfile::Builder::new()
        .prefix(&format!("escp-bench-{tool}-"))
        .tempdir_in(&opts.scratch)
    {
        Ok(d) => d,
        Err(e) => {
            return BenchResult::without_measurement(
                tool,
                original_bytes,
                BenchStatus::Failed {
                    message: format!("creating scratch directory: {e}"),
                    scratch: None,
                },
            )
        }
    };

    let suffix = adapter.map_or(".escp", |a| a.suffix.as_str());
    let compressed = dir.path().join(format!("input{suffix}"));
    let restored = dir.path().join("restored");

    let runs = opts.runs.max(1);
    let mut compress_times = Vec::with_capacity(runs);
    let mut decompress_times = Vec::with_capacity(runs);
    let mut mismatch = None;
    let mut compressed_bytes = 0;
    for _ in 0..runs {
        let step = match adapter {
            Some(a) => external_round(a, input, &compressed, &restored),
            None => builtin_round(&opts.format, input, &compressed, &restored),
        };
        let (tc, td) = match step {
            Ok(t) => t,
            Err(message) => {
                return BenchResult::without_measurement(
                    tool,
                    original_bytes,
                    BenchStatus::Failed {
                        message,
                        scratch: Some(dir.keep()),
                    },
                )
            }
        };
        compress_times.push(tc);
        decompress_times.push(td);
        compressed_bytes = match fs::metadata(&compressed) {
            Ok(m) => m.len(),
            Err(e) => {
                return BenchResult::without_measurement(
                    tool,
                    original_bytes,
                    BenchStatus::Failed {
                        message: format!("reading compressed size: {e}"),
                        scratch: Some(dir.keep()),
                    },
                )
            }
        };
        match first_difference(input, &restored) {
            Ok(None) => {}
            Ok(Some(offset)) => {
                mismatch.get_or_insert(offset);
            }
            Err(e) => {
                return BenchResult::without_measurement(
                    tool,
                    original_bytes,
                    BenchStatus::Failed {
                        message: format!("comparing output: {e}"),
                        scratch: Some(dir.keep()),
                    },
                )
            }
        }
    }

    let status = match mismatch {
        None => BenchStatus::Verified,
        Some(first_difference) => {
            // keep the evidence
            let _ = dir.keep();
            BenchStatus::Mismatch { first_difference }
        }
    };
    BenchResult {
        tool: tool.to_string(),
        original_bytes,
        compressed_bytes,
        achieved_percent: achieved_percent(original_bytes, compressed_bytes),
        verified: status == BenchStatus::Verified,
        compress_seconds: median(&mut compress_times),
        decompress_seconds: median(&mut decompress_times),
        status,
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn check_resolvable(a: &ToolAdapter) -> std::result::Result<(), String> {
    for template in [&a.compress, &a.decompress] {
        let program = template
            .first()
            .ok_or_else(|| format!("{}: empty command template", a.id))?;
        if find_executable(program).is_none() {
            return Err(format!("{program}: not found"));
        }
    }
    Ok(())
}

/// Resolves a program name the way a shell would, without running it.
pub fn find_executable(program: &str) -> Option<PathBuf> {
    let is_exec = |p: &Path| {
        p.metadata().is_ok_and(|m| {
            #[cfg(unix)]
            {
                use std::os::unix::fs::PermissionsExt;
                m.is_file() && m.permissions().mode() & 0o111 != 0
            }
            #[cfg(not(unix))]
            {
                m.is_file()
            }
        })
    };
    let path = Path::new(program);
    if path.components().count() > 1 {
        return is_exec(path).then(|| path.to_path_buf());
    }
    env::var_os("PATH").and_then(|paths| {
        env::split_paths(&paths)
            .map(|dir| dir.join(program))
            .find(|candidate| is_exec(candidate))
    })
}

fn substitute(template: &[String], input: &Path, output: &Path) -> (Vec<String>, bool) {
    let mut writes_output = false;
    let argv = template
        .iter()
        .map(|arg| {
            if arg.contains("{out}") {
                writes_output = true;
            }
            arg.replace("{in}", &input.to_string_lossy())
                .replace("{out}", &output.to_string_lossy())
        })
        .collect();
    (argv, writes_output)
}

/// Runs one templated command; only the child process lifetime is timed.
fn run_command(template: &[String], input: &Path, output: &Path) -> std::result::Result<f64, String> {
    let (argv, writes_output) = substitute(template, input, output);
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..]).stdin(Stdio::null()).stderr(Stdio::piped());
    if writes_output {
        let _ = fs::remove_file(output);
        cmd.stdout(Stdio::null());
    } else {
        let file = File::create(output).map_err(|e| format!("{}: {e}", output.display()))?;
        cmd.stdout(file);
    }
    let start = Instant::now();
    let result = cmd.output();
    let elapsed = start.elapsed().as_secs_f64();
    let out = result.map_err(|e| format!("{}: {e}", argv[0]))?;
    if !out.status.success() {
        return Err(format!(
            "{} exited with {}: {}",
            argv.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(elapsed)
}

fn external_round(
    a: &ToolAdapter,
    input: &Path,
    compressed: &Path,
    restored: &Path,
) -> std::result::Result<(f64, f64), String> {
    let tc = run_command(&a.compress, input, compressed)?;
    let td = run_command(&a.decompress, compressed, restored)?;
    Ok((tc, td))
}

fn builtin_round(
    format: &StreamFormat,
    input: &Path,
    compressed: &Path,
    restored: &Path,
) -> std::result::Result<(f64, f64), String> {
    let format = format.with_header_skip(0).with_max_samples(None);
    let start = Instant::now();
    let tc = (|| -> Result<f64> {
        let samples = read_samples(BufReader::new(File::open(input)?), format)?;
        let container = codec::encode(&samples, format.spec(), format.packing())?;
        fs::write(compressed, container)?;
        Ok(start.elapsed().as_secs_f64())
    })()
    .map_err(|e| format!("builtin encode: {e}"))?;

    let start = Instant::now();
    let td = (|| -> Result<f64> {
        let decoded = codec::decode(&fs::read(compressed)?)?;
        let mut out = BufWriter::new(File::create(restored)?);
        write_samples(&mut out, &decoded.samples, decoded.spec, decoded.packing)?;
        drop(out);
        Ok(start.elapsed().as_secs_f64())
    })()
    .map_err(|e| format!("builtin decode: {e}"))?;
    Ok((tc, td))
}

/// Streams both files and returns the first differing byte offset, or the
/// shorter length when one is a prefix of the other.
pub fn first_difference(a: &Path, b: &Path) -> io::Result<Option<u64>> {
    let mut ra = BufReader::with_capacity(1 << 16, File::open(a)?);
    let mut rb = BufReader::with_capacity(1 << 16, File::open(b)?);
    let mut ba = vec![0u8; 1 << 16];
    let mut bb = vec![0u8; 1 << 16];
    let mut offset = 0u64;
    loop {
        let na = read_full(&mut ra, &mut ba)?;
        let nb = read_full(&mut rb, &mut bb)?;
        let n = na.min(nb);
        if let Some(i) = ba[..n].iter().zip(&bb[..n]).position(|(x, y)| x != y) {
            return Ok(Some(offset + i as u64));
        }
        if na != nb {
            return Ok(Some(offset + n as u64));
        }
        if na == 0 {
            return Ok(None);
        }
        offset += n as u64;
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_overrides_and_extends() {
        let mut t = ToolTable::default();
        t.apply_config(
            "# custom\n\
             gzip.compress = gzip -9 -c {in}\n\
             cat.compress = cp {in} {out}\n\
             cat.decompress = cp {in} {out}\n",
        )
        .unwrap();
        let g = t.get("gzip").unwrap();
        assert_eq!(g.compress, vec!["gzip", "-9", "-c", "{in}"]);
        assert_eq!(g.decompress, vec!["gzip", "-dc", "{in}"]);
        assert_eq!(t.get("cat").unwrap().suffix, ".cat");
        assert!(t.ids().any(|id| id == "lzma"));
    }

    #[test]
    fn config_errors() {
        let mut t = ToolTable::default();
        assert!(t.apply_config("nonsense").is_err());
        assert!(t.apply_config("x = y").is_err());
        assert!(t.apply_config("x.level = 9").is_err());
        assert!(t.apply_config("new.compress = foo {in}").is_err());
        assert!(t.apply_config("builtin.compress = foo").is_err());
    }

    #[test]
    fn percent_and_median() {
        assert_eq!(achieved_percent(100, 75), 25.0);
        assert!(achieved_percent(100, 101) < 0.0);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0]), 2.5);
    }

    #[test]
    fn template_substitution() {
        let t = split_template("tool -o {out} {in}");
        let (argv, writes) = substitute(&t, Path::new("/a"), Path::new("/b"));
        assert_eq!(argv, vec!["tool", "-o", "/b", "/a"]);
        assert!(writes);
        let (_, writes) = substitute(&split_template("tool {in}"), Path::new("/a"), Path::new("/b"));
        assert!(!writes);
    }

    #[test]
    fn difference_detection() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let data: Vec<u8> = (0..200_000u32).map(|i| (i % 253) as u8).collect();
        fs::write(&a, &data).unwrap();
        fs::write(&b, &data).unwrap();
        assert_eq!(first_difference(&a, &b).unwrap(), None);
        let mut other = data.clone();
        other[150_001] ^= 1;
        fs::write(&b, &other).unwrap();
        assert_eq!(first_difference(&a, &b).unwrap(), Some(150_001));
        fs::write(&b, &data[..70_000]).unwrap();
        assert_eq!(first_difference(&a, &b).unwrap(), Some(70_000));
    }

    #[test]
    fn missing_tool_is_reported_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        fs::write(&input, [1u8, 2, 3, 4]).unwrap();
        let mut table = ToolTable::default();
        table.insert(ToolAdapter::new("ghost", "no-such-binary-xyz {in}", "no-such-binary-xyz -d {in}", ".g"));
        let opts = BenchOptions {
            table,
            scratch: dir.path().to_path_buf(),
            ..BenchOptions::default()
        };
        let res = run_bench(&input, &["ghost", "unknown", BUILTIN], &opts).unwrap();
        assert!(matches!(res[0].status, BenchStatus::Unavailable(_)));
        assert!(matches!(res[1].status, BenchStatus::Unavailable(_)));
        assert!(!res[0].verified && !res[1].verified);
        assert_eq!(res[2].status, BenchStatus::Verified);
        assert!(res[2].verified);
    }
}
