use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use escp_core::bench::{run_bench, scratch_dir, BenchOptions, BenchStatus, ToolTable, BUILTIN};
use escp_core::codec::{decode, encode};
use escp_core::fit::fit_exponential;
use escp_core::gaussian::{entropy_sweep, sigma_grid, Discretization, SweepRow};
use escp_core::info::{binary_entropy_curve, conditional_entropy, entropy_report, first_order_entropy};
use escp_core::ingest::{
    default_header_skip, histogram_file_parallel, histogram_from_reader, read_samples, scan_stream,
    write_samples, Packing, StreamFormat,
};
use escp_core::report::{sig6, svg_line_chart, Series};
use escp_core::synth::{metadata, write_synthetic, SynthSpec};
use escp_core::{Error, QuantizationSpec};

use crate::output::{emit, opt, sha256_file, sibling, write_svg, Header};
use crate::{
    AnalyzeArgs, BenchArgs, CmdResult, CurveArgs, Failure, FitArgs, FormatArgs, GenArgs, ModelArgs,
    PackArgs, SweepArgs, UnpackArgs, EXIT_VERIFY,
};

const DEFAULT_SIGMA_RANGE: (f64, f64, f64) = (1.0, 80.0, 1.0);

fn verify_failure(msg: String) -> Failure {
    Failure {
        code: EXIT_VERIFY,
        error: anyhow!(msg),
    }
}

impl FormatArgs {
    fn spec(&self) -> anyhow::Result<QuantizationSpec> {
        Ok(QuantizationSpec::new(self.bits)?)
    }

    fn packing(&self, spec: QuantizationSpec) -> Packing {
        self.packing.map_or_else(|| Packing::default_for(spec), Into::into)
    }

    fn resolve(&self, path: &Path) -> anyhow::Result<StreamFormat> {
        let spec = self.spec()?;
        let skip = self.header_skip.unwrap_or_else(|| default_header_skip(path));
        Ok(StreamFormat::new(spec, self.packing(spec), skip, self.max_samples)?)
    }

    fn config(&self) -> anyhow::Result<Vec<(&'static str, String)>> {
        let spec = self.spec()?;
        Ok(vec![
            ("bits", self.bits.to_string()),
            ("packing", self.packing(spec).name().to_string()),
            ("header_skip", self.header_skip.map_or_else(|| "auto".into(), |h| h.to_string())),
            ("max_samples", opt(self.max_samples)),
        ])
    }
}

struct Sweep {
    spec: QuantizationSpec,
    mu: f64,
    sigmas: Vec<f64>,
    mode: Discretization,
    grid: String,
}

impl SweepArgs {
    fn resolve(&self) -> anyhow::Result<Sweep> {
        let spec = QuantizationSpec::new(self.bits)?;
        let mu = self.mu.unwrap_or(spec.alphabet_size() as f64 / 2.0);
        let (sigmas, grid) = match (&self.sigma, self.sigma_range) {
            (Some(list), _) => {
                let text: Vec<String> = list.iter().map(|s| s.to_string()).collect();
                (list.clone(), text.join(","))
            }
            (None, range) => {
                let (lo, hi, step) = range.unwrap_or(DEFAULT_SIGMA_RANGE);
                (sigma_grid(lo, hi, step)?, format!("{lo}:{hi}:{step}"))
            }
        };
        Ok(Sweep {
            spec,
            mu,
            sigmas,
            mode: self.mode.into(),
            grid,
        })
    }
}

impl Sweep {
    fn rows(&self) -> anyhow::Result<Vec<SweepRow>> {
        Ok(entropy_sweep(self.mu, self.spec, &self.sigmas, self.mode)?)
    }

    fn config(&self) -> Vec<(&'static str, String)> {
        vec![
            ("bits", self.spec.bit_depth().to_string()),
            ("mu", self.mu.to_string()),
            ("sigma", self.grid.clone()),
            ("mode", self.mode.name().to_string()),
        ]
    }
}

pub fn analyze(a: AnalyzeArgs) -> CmdResult {
    if a.threads == 0 {
        return Err(anyhow!("--threads must be at least 1").into());
    }
    let bits = a.format.bits;
    let mut config = a.format.config()?;
    config.push(("bigrams", a.bigrams.to_string()));
    config.push(("threads", a.threads.to_string()));
    let mut header = Header::new("analyze").config(&config);

    let mut rows = Vec::new();
    for path in &a.files {
        let fmt = a.format.resolve(path)?;
        header = header.input(path, &sha256_file(path)?);
        let bytes = fs::metadata(path)
            .with_context(|| format!("reading {}", path.display()))?
            .len();
        let (hist, h2) = if a.bigrams {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let stats = scan_stream(file, fmt, true)?;
            let bigrams = stats.bigrams.expect("bigram pass requested");
            (stats.histogram, Some(conditional_entropy(&bigrams)?))
        } else {
            (histogram_file_parallel(path, &fmt, a.threads)?, None)
        };
        let moments = hist.moments()?;
        let h1 = first_order_entropy(&hist.to_distribution()?);
        let report = entropy_report(h1, f64::from(bits))?;
        let mut row = vec![
            path.display().to_string(),
            bytes.to_string(),
            hist.total().to_string(),
            sig6(moments.mean),
            sig6(moments.sigma),
            sig6(h1),
        ];
        if let Some(h2) = h2 {
            row.push(sig6(h2));
        }
        row.push(sig6(report.redundancy));
        row.push(sig6(report.percent_compressibility));
        rows.push(row);
    }

    let mut columns = vec!["file", "bytes", "samples", "mean", "sigma", "h1_bits"];
    if a.bigrams {
        columns.push("h2_bits");
    }
    columns.extend(["redundancy_bits", "c_percent"]);
    emit(&header, &columns, rows, a.out.csv.as_deref())?;
    Ok(())
}

pub fn model(a: ModelArgs) -> CmdResult {
    let sweep = a.sweep.resolve()?;
    let rows = sweep.rows()?;
    let header = Header::new("model").config(&sweep.config()).no_input();
    let table = rows
        .iter()
        .map(|r| {
            vec![
                sig6(r.sigma),
                sig6(r.entropy),
                sig6(r.redundancy),
                sig6(r.percent_compressibility),
            ]
        })
        .collect();
    emit(
        &header,
        &["sigma", "entropy_bits", "redundancy_bits", "c_percent"],
        table,
        a.out.csv.as_deref(),
    )?;

    if let Some(path) = &a.svg {
        let series = |label: &str, f: fn(&SweepRow) -> f64| Series {
            label: label.into(),
            points: rows.iter().map(|r| (r.sigma, f(r))).collect(),
            markers: false,
        };
        let bits = svg_line_chart(
            "Discretized Gaussian source",
            "sigma",
            "bits",
            &[series("entropy", |r| r.entropy), series("redundancy", |r| r.redundancy)],
        );
        write_svg(path, &bits)?;
        let pct = svg_line_chart(
            "Theoretical compressibility",
            "sigma",
            "C%",
            &[series("C%", |r| r.percent_compressibility)],
        );
        write_svg(&sibling(path, "c_percent"), &pct)?;
    }
    Ok(())
}

/// Reads `(sigma, c_percent)` pairs from a CSV, skipping `#` comment lines.
fn read_sweep_csv(path: &Path) -> anyhow::Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, head) = lines.next().ok_or_else(|| anyhow!("{}: no CSV header", path.display()))?;
    let names: Vec<&str> = head.split(',').map(str::trim).collect();
    let col = |name: &str| {
        names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| anyhow!("{}: missing column {name:?}", path.display()))
    };
    let (xi, yi) = (col("sigma")?, col("c_percent")?);
    let mut points = Vec::new();
    for (n, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> anyhow::Result<f64> {
            let cell = cells
                .get(i)
                .ok_or_else(|| anyhow!("{}:{}: short row", path.display(), n + 1))?;
            cell.parse()
                .with_context(|| format!("{}:{}: bad number {cell:?}", path.display(), n + 1))
        };
        points.push((get(xi)?, get(yi)?));
    }
    Ok(points)
}

pub fn fit(a: FitArgs) -> CmdResult {
    let (lo, hi) = a.fit_range;
    if !(lo <= hi) {
        return Err(anyhow!("empty fit range {lo}:{hi}").into());
    }
    let mut header = Header::new("fit");
    let all = match &a.input {
        Some(path) => {
            header = header
                .config(&[("fit_range", format!("{lo}:{hi}"))])
                .input(path, &sha256_file(path)?);
            read_sweep_csv(path)?
        }
        None => {
            let sweep = a.sweep.resolve()?;
            let mut config = sweep.config();
            config.push(("fit_range", format!("{lo}:{hi}")));
            header = header.config(&config).no_input();
            sweep
                .rows()?
                .iter()
                .map(|r| (r.sigma, r.percent_compressibility))
                .collect()
        }
    };
    let tol = 1e-9 * hi.abs().max(1.0);
    let points: Vec<(f64, f64)> = all
        .into_iter()
        .filter(|&(s, _)| s >= lo - tol && s <= hi + tol)
        .collect();
    let f = fit_exponential(&points)?;
    let header = header.note("model c_percent = a * exp(-b * sigma), least squares on the original scale");
    let row = vec![
        sig6(f.a),
        sig6(f.b),
        sig6(f.r_squared),
        sig6(f.r_squared_log),
        f.iterations.to_string(),
        f.degraded.to_string(),
        points.len().to_string(),
    ];
    emit(
        &header,
        &["a", "b", "r2_original", "r2_log", "iterations", "degraded", "points"],
        vec![row],
        a.out.csv.as_deref(),
    )?;

    if let Some(path) = &a.svg {
        let (x0, x1) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let curve = (0..=200)
            .map(|i| {
                let x = x0 + (x1 - x0) * f64::from(i) / 200.0;
                (x, f.predict(x))
            })
            .collect();
        let svg = svg_line_chart(
            "Exponential fit",
            "sigma",
            "C%",
            &[
                Series {
                    label: "data".into(),
                    points: points.clone(),
                    markers: true,
                },
                Series {
                    label: format!("{} exp(-{} sigma)", sig6(f.a), sig6(f.b)),
                    points: curve,
                    markers: false,
                },
            ],
        );
        write_svg(path, &svg)?;
    }
    Ok(())
}

pub fn curve(a: CurveArgs) -> CmdResult {
    let points = binary_entropy_curve(a.step)?;
    let header = Header::new("curve")
        .config(&[("step", a.step.to_string())])
        .no_input();
    let rows = points.iter().map(|&(p, h)| vec![sig6(p), sig6(h)]).collect();
    emit(&header, &["p", "entropy_bits"], rows, a.out.csv.as_deref())?;
    if let Some(path) = &a.svg {
        let svg = svg_line_chart(
            "Binary entropy",
            "p",
            "H(p), bits",
            &[Series {
                label: "H(p)".into(),
                points,
                markers: false,
            }],
        );
        write_svg(path, &svg)?;
    }
    Ok(())
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn gen(a: GenArgs) -> CmdResult {
    let spec = QuantizationSpec::new(a.bits)?;
    let packing = a.packing.map_or_else(|| Packing::default_for(spec), Into::into);
    StreamFormat::new(spec, packing, 0, None)?;
    let mu = a.mu.unwrap_or(spec.alphabet_size() as f64 / 2.0);
    let synth = SynthSpec::new(mu, a.sigma, spec, a.count, a.seed)?;

    let file = File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    write_synthetic(BufWriter::new(file), &synth, packing)?;
    let meta = meta_path(&a.output);
    fs::write(&meta, metadata(&synth, packing))
        .with_context(|| format!("writing {}", meta.display()))?;

    let header = Header::new("gen")
        .config(&[
            ("bits", a.bits.to_string()),
            ("packing", packing.name().to_string()),
            ("mu", mu.to_string()),
            ("sigma", a.sigma.to_string()),
            ("count", a.count.to_string()),
            ("seed", a.seed.to_string()),
        ])
        .no_input();
    let bytes = fs::metadata(&a.output)?.len();
    let row = vec![
        a.output.display().to_string(),
        bytes.to_string(),
        a.count.to_string(),
        sha256_file(&a.output)?,
    ];
    emit(&header, &["output", "bytes", "samples", "sha256"], vec![row], None)?;
    Ok(())
}

pub fn pack(a: PackArgs) -> CmdResult {
    let fmt = a.format.resolve(&a.input)?;
    let spec = fmt.spec();
    let raw = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let samples = read_samples(&raw[..], fmt)?;
    let container = encode(&samples, spec, fmt.packing())?;

    let decoded = decode(&container)
        .map_err(|e| verify_failure(format!("freshly packed container does not decode: {e}")))?;
    if decoded.samples != samples {
        return Err(verify_failure("decoded samples differ from the input".into()));
    }
    // whole-byte streams must re-serialize to the exact input bytes
    let per_byte = fmt.samples_per_byte() as usize;
    if samples.len() % per_byte == 0 {
        let start = fmt.header_skip() as usize;
        let region = &raw[start..start + samples.len() / per_byte];
        let mut again = Vec::with_capacity(region.len());
        write_samples(&mut again, &decoded.samples, decoded.spec, decoded.packing)?;
        if again != region {
            return Err(verify_failure("re-serialized samples differ from the input bytes".into()));
        }
    }
    fs::write(&a.output, &container).with_context(|| format!("writing {}", a.output.display()))?;

    let h = first_order_entropy(
        &escp_core::Histogram::from_samples(&samples, spec)?.to_distribution()?,
    );
    let theory = entropy_report(h, f64::from(spec.bit_depth()))?;
    let data_bytes = (samples.len() as u64).div_ceil(per_byte as u64);
    let header = Header::new("pack")
        .config(&a.format.config()?)
        .input(&a.input, &sha256_file(&a.input)?);
    let row = vec![
        data_bytes.to_string(),
        samples.len().to_string(),
        container.len().to_string(),
        sig6(container.len() as f64 * 8.0 / samples.len() as f64),
        sig6(h),
        sig6(theory.percent_compressibility),
        sig6(escp_core::bench::achieved_percent(data_bytes, container.len() as u64)),
        "true".into(),
    ];
    emit(
        &header,
        &[
            "data_bytes",
            "samples",
            "container_bytes",
            "bits_per_sample",
            "h1_bits",
            "theory_c_percent",
            "achieved_c_percent",
            "verified",
        ],
        vec![row],
        None,
    )?;
    Ok(())
}

pub fn unpack(a: UnpackArgs) -> CmdResult {
    let container = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let decoded = decode(&container).map_err(|e| match e {
        Error::Corrupt { .. } | Error::Truncated(_) => verify_failure(format!("{}: {e}", a.input.display())),
        other => Failure::from(anyhow::Error::from(other).context(a.input.display().to_string())),
    })?;
    let again = encode(&decoded.samples, decoded.spec, decoded.packing)?;
    if again != container {
        return Err(verify_failure("container does not re-encode to itself".into()));
    }
    let file = File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    let mut w = BufWriter::new(file);
    write_samples(&mut w, &decoded.samples, decoded.spec, decoded.packing)?;
    w.flush()?;

    let header = Header::new("unpack")
        .config(&[
            ("bits", decoded.spec.bit_depth().to_string()),
            ("packing", decoded.packing.name().to_string()),
        ])
        .input(&a.input, &sha256_file(&a.input)?);
    let row = vec![
        container.len().to_string(),
        decoded.samples.len().to_string(),
        fs::metadata(&a.output)?.len().to_string(),
        sha256_file(&a.output)?,
        "true".into(),
    ];
    emit(
        &header,
        &["container_bytes", "samples", "output_bytes", "output_sha256", "verified"],
        vec![row],
        None,
    )?;
    Ok(())
}

fn status_text(s: &BenchStatus) -> String {
    match s {
        BenchStatus::Verified => "verified".into(),
        BenchStatus::Mismatch { first_difference } => format!("mismatch at byte {first_difference}"),
        BenchStatus::Unavailable(why) => format!("unavailable: {why}"),
        BenchStatus::Failed { message, scratch } => match scratch {
            Some(dir) => format!("failed: {message} (kept {})", dir.display()),
            None => format!("failed: {message}"),
        },
    }
}

pub fn bench(a: BenchArgs) -> CmdResult {
    if a.runs == 0 {
        return Err(anyhow!("--runs must be at least 1").into());
    }
    let fmt = a.format.resolve(&a.input)?;
    let table = match &a.config {
        Some(path) => ToolTable::from_config_file(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => ToolTable::default(),
    };
    for t in &a.tools {
        if t != BUILTIN && table.get(t).is_none() {
            return Err(anyhow!("unknown tool {t:?}; known: {BUILTIN}, {}", table.ids().collect::<Vec<_>>().join(", ")).into());
        }
    }
    let opts = BenchOptions {
        table,
        runs: a.runs,
        scratch: scratch_dir(),
        format: fmt,
    };

    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let hist = histogram_from_reader(BufReader::new(file), fmt)?;
    let h = first_order_entropy(&hist.to_distribution()?);
    let theory = entropy_report(h, f64::from(fmt.spec().bit_depth()))?;

    let tools: Vec<&str> = a.tools.iter().map(String::as_str).collect();
    let results = run_bench(&a.input, &tools, &opts)?;

    let mut config = a.format.config()?;
    config.push(("tools", a.tools.join(",")));
    config.push(("runs", a.runs.to_string()));
    config.push(("tool_config", opt(a.config.as_ref().map(|p| p.display().to_string()))));
    let mut header = Header::new("bench")
        .config(&config)
        .input(&a.input, &sha256_file(&a.input)?)
        .note(format!("theory h1_bits={} c_percent={}", sig6(h), sig6(theory.percent_compressibility)))
        .note(format!("scratch {}", opts.scratch.display()))
        .note("external tools run at their default compression level; times are medians");
    for t in &tools {
        if let Some(ad) = opts.table.get(t) {
            header = header.note(format!(
                "adapter {t}: compress `{}` decompress `{}`",
                ad.compress.join(" "),
                ad.decompress.join(" ")
            ));
        }
    }

    let dash = || "-".to_string();
    let rows = results
        .iter()
        .map(|r| {
            let measured = r.is_measured();
            vec![
                r.tool.clone(),
                r.original_bytes.to_string(),
                if measured { r.compressed_bytes.to_string() } else { dash() },
                if measured { sig6(r.achieved_percent) } else { dash() },
                if measured { sig6(r.achieved_percent - theory.percent_compressibility) } else { dash() },
                r.verified.to_string(),
                if measured { sig6(r.compress_seconds) } else { dash() },
                if measured { sig6(r.decompress_seconds) } else { dash() },
                status_text(&r.status),
            ]
        })
        .collect();
    emit(
        &header,
        &[
            "tool",
            "original_bytes",
            "compressed_bytes",
            "c_percent",
            "gap_to_theory",
            "verified",
            "compress_s",
            "decompress_s",
            "status",
        ],
        rows,
        a.out.csv.as_deref(),
    )?;

    let bad: Vec<&str> = results
        .iter()
        .filter(|r| matches!(r.status, BenchStatus::Mismatch { .. } | BenchStatus::Failed { .. }))
        .map(|r| r.tool.as_str())
        .collect();
    if !bad.is_empty() {
        return Err(verify_failure(format!("round trip not verified for: {}", bad.join(", "))));
    }
    Ok(())
}
