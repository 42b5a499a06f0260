use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use escp_core::report::{comment_block, csv, TextTable};
use sha2::{Digest, Sha256};

/// Comment lines opening every report.
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(command: &str) -> Self {
        Header {
            lines: vec![format!("escp {} {command}", env!("CARGO_PKG_VERSION"))],
        }
    }

    /// Records `key=value` pairs of the effective configuration.
    pub fn config(mut self, pairs: &[(&str, String)]) -> Self {
        let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        self.lines.push(format!("config {}", body.join(" ")));
        self
    }

    pub fn input(mut self, path: &Path, digest: &str) -> Self {
        self.lines.push(format!("input {} sha256={digest}", path.display()));
        self
    }

    pub fn no_input(mut self) -> Self {
        self.lines.push("input none".into());
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.lines.push(text.into());
        self
    }

    pub fn render(&self) -> String {
        comment_block(&self.lines)
    }
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(hasher.finalize()))
}

/// Prints the text table to stdout and, if asked, writes the CSV form.
/// A CSV path of `-` sends the CSV to stdout in place of the table.
pub fn emit(
    header: &Header,
    columns: &[&str],
    rows: Vec<Vec<String>>,
    csv_path: Option<&Path>,
) -> anyhow::Result<()> {
    let head = header.render();
    let to_stdout = csv_path.is_some_and(|p| p == Path::new("-"));
    if let Some(path) = csv_path {
        let body = format!("{head}{}", csv(columns, &rows));
        if to_stdout {
            print_out(&body)?;
        } else {
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    if !to_stdout {
        let mut table = TextTable::new(columns);
        for row in rows {
            table.push(row);
        }
        print_out(&format!("{head}{}", table.render()))?;
    }
    Ok(())
}

fn print_out(s: &str) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(s.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn write_svg(path: &Path, svg: &str) -> anyhow::Result<()> {
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}

/// `dir/stem_suffix.ext` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("chart");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("svg");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}
