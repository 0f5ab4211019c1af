// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV emission with a `#` config header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::CliError;
use crate::rng::RNG_ALGORITHM;

/// Prefix of the header line that records the command line.
pub const ARGS_PREFIX: &str = "# args: ";

/// Quotes an argument when it holds whitespace, quotes or backslashes.
pub fn quote_arg(arg: &str) -> String {
    if !arg.is_empty() && !arg.chars().any(|c| c.is_whitespace() || c == '"' || c == '\\') {
        return arg.to_string();
    }
    let mut out = String::from("\"");
    for c in arg.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Inverse of joining [`quote_arg`] outputs with spaces.
pub fn split_args(line: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let Some(&c) = chars.peek() else { break };
        let mut arg = String::new();
        if c == '"' {
            chars.next();
            loop {
                match chars.next() {
                    Some('\\') => arg.push(chars.next().ok_or_else(|| CliError::Input("dangling escape".into()))?),
                    Some('"') => break,
                    Some(c) => arg.push(c),
                    None => return Err(CliError::Input("unterminated quote in args header".into())),
                }
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                arg.push(c);
                chars.next();
            }
        }
        out.push(arg);
    }
    Ok(out)
}

/// Reads the recorded command line back from an output file.
pub fn read_args_header(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e.to_string()))?;
    let line = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix(ARGS_PREFIX))
        .ok_or_else(|| CliError::Input(format!("{}: no args header", path.display())))?;
    split_args(line)
}

/// Header shared by every file of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub args: Vec<String>,
    pub seed: u64,
    pub deterministic: bool,
    pub notes: Vec<String>,
}

impl Header {
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("# lave {}", env!("CARGO_PKG_VERSION")),
            format!(
                "{ARGS_PREFIX}{}",
                self.args.iter().map(|a| quote_arg(a)).collect::<Vec<_>>().join(" ")
            ),
            format!("# seed: {}", self.seed),
            format!("# rng: {RNG_ALGORITHM}"),
        ];
        out.extend(self.notes.iter().map(|n| format!("# {n}")));
        if !self.deterministic {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            out.push(format!("# generated: unix {secs}"));
        }
        out
    }
}

/// Writes `header`, then `columns`, then `rows` to `path`.
pub fn write_csv<I, R>(path: &Path, header: &Header, columns: &[&str], rows: I) -> Result<PathBuf, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e.to_string()))?;
    }
    let io = |e: std::io::Error| CliError::Io(path.display().to_string(), e.to_string());
    let mut file = BufWriter::new(File::create(path).map_err(io)?);
    for line in header.lines() {
        writeln!(file, "{line}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| CliError::Io(path.display().to_string(), e.to_string());
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(path.to_path_buf())
}

/// Shortest round-tripping decimal form; empty for `None` or NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}
