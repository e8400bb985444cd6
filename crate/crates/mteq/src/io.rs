//! Text formats for tensors (`.mt`), vectors (`.vec`), problem manifests and traces.
//!
//! `.mt`: a header line `MT1 <m> <n> <dense|coo> <count>` followed by either
//! `n^m` values in lexicographic index order (first index slowest) or `count`
//! lines `<i1> .. <im> <value>` with 1-based indices. `.vec`: a line `<n>`
//! followed by `n` values. Writers emit 17 significant digits so that values
//! round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mteq_core::tensor::{check_dense_cap, dense_len};
use mteq_core::{IterationRecord, Storage, Tensor, TensorError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A parse failure at a 1-based line.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, msg: impl Into<String>) -> Self {
        Self {
            line,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Formats a value with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Whitespace-separated tokens tagged with their 1-based line.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
}

fn parse_value(line: usize, tok: &str) -> Result<f64, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| ParseError::new(line, format!("`{tok}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::new(line, format!("`{tok}` is not finite")))
    }
}

fn parse_count(line: usize, tok: Option<&str>, what: &str) -> Result<usize, ParseError> {
    let tok = tok.ok_or_else(|| ParseError::new(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| ParseError::new(line, format!("{what} `{tok}` is not a nonnegative integer")))
}

fn tensor_error(line: usize, e: TensorError) -> ParseError {
    ParseError::new(line, e.to_string())
}

/// Parses `.mt` text, refusing dense bodies above `cap` entries.
pub fn parse_tensor(text: &str, cap: usize) -> Result<Tensor, ParseError> {
    let mut lines = text.lines().enumerate();
    let (hl, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| ParseError::new(1, "empty file"))?;
    let hl = hl + 1;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("MT1") {
        return Err(ParseError::new(hl, "header must start with `MT1`"));
    }
    let m = parse_count(hl, fields.next(), "order")?;
    let n = parse_count(hl, fields.next(), "dimension")?;
    let layout = fields
        .next()
        .ok_or_else(|| ParseError::new(hl, "missing layout (dense|coo)"))?;
    let count = parse_count(hl, fields.next(), "entry count")?;
    if let Some(extra) = fields.next() {
        return Err(ParseError::new(
            hl,
            format!("unexpected `{extra}` in header"),
        ));
    }
    let body_start: usize = text.lines().take(hl).map(|l| l.len() + 1).sum();
    let body = text.get(body_start..).unwrap_or("");
    let shift = |l: usize| l + hl;
    match layout {
        "dense" => {
            let expected =
                dense_len(m, n).ok_or_else(|| ParseError::new(hl, "dense size overflows"))?;
            if count != expected {
                return Err(ParseError::new(
                    hl,
                    format!("dense count {count} but n^m = {expected}"),
                ));
            }
            check_dense_cap(m, n, cap).map_err(|e| tensor_error(hl, e))?;
            let mut values = Vec::with_capacity(count);
            let mut last = hl;
            for (l, tok) in tokens(body) {
                last = shift(l);
                if values.len() == count {
                    return Err(ParseError::new(
                        last,
                        "more values than the header declares",
                    ));
                }
                values.push(parse_value(last, tok)?);
            }
            if values.len() < count {
                return Err(ParseError::new(
                    last,
                    format!("expected {count} values, found {}", values.len()),
                ));
            }
            Tensor::dense(m, n, values).map_err(|e| tensor_error(hl, e))
        }
        "coo" => {
            let mut entries = Vec::with_capacity(count);
            let mut last = hl;
            for (l, line) in body.lines().enumerate() {
                last = shift(l + 1);
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.is_empty() {
                    continue;
                }
                if entries.len() == count {
                    return Err(ParseError::new(
                        last,
                        "more entries than the header declares",
                    ));
                }
                if toks.len() != m + 1 {
                    return Err(ParseError::new(
                        last,
                        format!(
                            "expected {} indices and a value, found {} fields",
                            m,
                            toks.len()
                        ),
                    ));
                }
                let mut idx = Vec::with_capacity(m);
                for tok in &toks[..m] {
                    let i: usize = tok.parse().map_err(|_| {
                        ParseError::new(last, format!("index `{tok}` is not a positive integer"))
                    })?;
                    if i == 0 || i > n {
                        return Err(ParseError::new(last, format!("index {i} outside 1..={n}")));
                    }
                    idx.push(i - 1);
                }
                entries.push((idx, parse_value(last, toks[m])?));
            }
            if entries.len() < count {
                return Err(ParseError::new(
                    last,
                    format!("expected {count} entries, found {}", entries.len()),
                ));
            }
            Tensor::coo_from_entries(m, n, entries).map_err(|e| tensor_error(hl, e))
        }
        other => Err(ParseError::new(
            hl,
            format!("layout `{other}` is neither dense nor coo"),
        )),
    }
}

/// `.mt` text for a tensor, keeping its storage layout.
pub fn format_tensor(t: &Tensor) -> String {
    let (m, n) = (t.order(), t.dim());
    let mut out = String::new();
    match t.storage() {
        Storage::Dense(values) => {
            writeln!(out, "MT1 {m} {n} dense {}", values.len()).unwrap();
            for row in values.chunks(n) {
                let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
        Storage::Coo { indices, values } => {
            writeln!(out, "MT1 {m} {n} coo {}", values.len()).unwrap();
            for (tuple, &v) in indices.chunks_exact(m).zip(values) {
                for i in tuple {
                    write!(out, "{} ", i + 1).unwrap();
                }
                writeln!(out, "{}", fmt_f64(v)).unwrap();
            }
        }
    }
    out
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>, ParseError> {
    let mut toks = tokens(text);
    let (hl, first) = toks
        .next()
        .ok_or_else(|| ParseError::new(1, "empty file"))?;
    let n = parse_count(hl, Some(first), "length")?;
    let mut values = Vec::with_capacity(n);
    let mut last = hl;
    for (l, tok) in toks {
        last = l;
        if values.len() == n {
            return Err(ParseError::new(l, "more values than the declared length"));
        }
        values.push(parse_value(l, tok)?);
    }
    if values.len() < n {
        return Err(ParseError::new(
            last,
            format!("expected {n} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = format!("{}\n", v.len());
    for &x in v {
        out.push_str(&fmt_f64(x));
        out.push('\n');
    }
    out
}

fn read_text(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn with_path(path: &Path) -> impl FnOnce(ParseError) -> FileError + '_ {
    move |source| FileError::Parse {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_tensor(path: &Path, cap: usize) -> Result<Tensor, FileError> {
    parse_tensor(&read_text(path)?, cap).map_err(with_path(path))
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<(), FileError> {
    fs::write(path, format_tensor(t)).map_err(io_err(path))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, FileError> {
    parse_vector(&read_text(path)?).map_err(with_path(path))
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), FileError> {
    fs::write(path, format_vector(v)).map_err(io_err(path))
}

/// Generator parameters recorded next to a generated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub problem: u8,
    pub problem_kind: String,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    /// Factor the stored `A` and `b` were divided by (1 when unscaled).
    pub omega: f64,
    #[serde(default)]
    pub params: ManifestParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_frac: Option<f64>,
    /// 1-based indices kept positive when zeroing.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub keep: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_seed: Option<u64>,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), FileError> {
    let json = serde_json::to_string_pretty(manifest).map_err(|source| FileError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, json + "\n").map_err(io_err(path))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, FileError> {
    serde_json::from_str(&read_text(path)?).map_err(|source| FileError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Serialize)]
struct TraceRow<'a> {
    k: usize,
    alpha: f64,
    residual: f64,
    backtracks: usize,
    feasible: bool,
    elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<&'a str>,
}

/// Writes a solve trace as CSV; `mode` adds a trailing `mode` column.
pub fn write_trace<W: Write>(
    out: W,
    trace: &[IterationRecord],
    mode: Option<&str>,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(TraceRow {
            k: r.k,
            alpha: r.alpha,
            residual: r.residual_norm,
            backtracks: r.backtracks,
            feasible: r.feasible,
            elapsed_ms: r.elapsed_ms,
            mode,
        })?;
    }
    if trace.is_empty() {
        let mut header = vec![
            "k",
            "alpha",
            "residual",
            "backtracks",
            "feasible",
            "elapsed_ms",
        ];
        if mode.is_some() {
            header.push("mode");
        }
        w.write_record(&header)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(
    path: &Path,
    trace: &[IterationRecord],
    mode: Option<&str>,
) -> Result<(), FileError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_trace(std::io::BufWriter::new(file), trace, mode).map_err(|source| FileError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mteq_core::tensor::DEFAULT_DENSE_CAP;

    #[test]
    fn dense_round_trip_is_exact() {
        let values: Vec<f64> = (0..8).map(|i| 1.0 / (i as f64 + 3.0) - 0.2).collect();
        let t = Tensor::dense(3, 2, values).unwrap();
        let back = parse_tensor(&format_tensor(&t), DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn coo_is_one_based() {
        let text = "MT1 3 2 coo 2\n1 1 1 4.0\n2 1 2 -0.5\n";
        let t = parse_tensor(text, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), 4.0);
        assert_eq!(t.get(&[1, 0, 1]), -0.5);
        assert_eq!(
            parse_tensor(&format_tensor(&t), DEFAULT_DENSE_CAP).unwrap(),
            t
        );
    }

    #[test]
    fn errors_name_the_line() {
        let bad_header = parse_tensor("MT2 3 2 dense 8\n", DEFAULT_DENSE_CAP).unwrap_err();
        assert_eq!(bad_header.line, 1);
        let bad_value = parse_tensor("MT1 2 2 dense 4\n1 2\n3 x\n", DEFAULT_DENSE_CAP).unwrap_err();
        assert_eq!(bad_value.line, 3);
        assert!(bad_value.msg.contains("`x`"));
        let short = parse_tensor("MT1 2 2 dense 4\n1 2 3\n", DEFAULT_DENSE_CAP).unwrap_err();
        assert!(short.msg.contains("expected 4"));
        let range = parse_tensor("MT1 2 2 coo 1\n\n3 1 1.0\n", DEFAULT_DENSE_CAP).unwrap_err();
        assert_eq!(range.line, 3);
        let extra =
            parse_tensor("MT1 2 2 coo 1\n1 1 1.0\n2 2 1.0\n", DEFAULT_DENSE_CAP).unwrap_err();
        assert_eq!(extra.line, 3);
        assert!(parse_tensor("", DEFAULT_DENSE_CAP).is_err());
        assert!(parse_tensor("MT1 2 2 sparse 1\n", DEFAULT_DENSE_CAP).is_err());
    }

    #[test]
    fn dense_cap_applies_to_files() {
        let err = parse_tensor("MT1 3 10 dense 1000\n", 999).unwrap_err();
        assert!(err.msg.contains("cap"), "{err}");
    }

    #[test]
    fn vector_round_trip() {
        let v = vec![0.1, 2.0 / 3.0, 1e-300, 7.0];
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
        assert_eq!(parse_vector("2\n1 2\n").unwrap(), vec![1.0, 2.0]);
        assert_eq!(parse_vector("3\n1\n2\n").unwrap_err().line, 3);
        assert_eq!(parse_vector("x\n").unwrap_err().line, 1);
        assert!(parse_vector("1\nnan\n").is_err());
    }

    #[test]
    fn trace_csv_header() {
        let rec = IterationRecord {
            k: 0,
            alpha: 0.0,
            residual_norm: 1.5,
            backtracks: 0,
            feasible: true,
            elapsed_ms: 0.25,
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, std::slice::from_ref(&rec), None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "k,alpha,residual,backtracks,feasible,elapsed_ms\n0,0.0,1.5,0,true,0.25\n"
        );
        let mut buf = Vec::new();
        write_trace(&mut buf, &[rec], Some("step3prime")).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("k,alpha,residual,backtracks,feasible,elapsed_ms,mode\n"));
        let mut buf = Vec::new();
        write_trace(&mut buf, &[], None).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k,alpha,residual,backtracks,feasible,elapsed_ms\n"
        );
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = Manifest {
            problem: 3,
            problem_kind: "gravity".into(),
            m: 4,
            n: 40,
            seed: 0,
            omega: 1.0,
            params: ManifestParams {
                c0: Some(1e7),
                c1: Some(1e7),
                ..Default::default()
            },
        };
        write_manifest(&path, &m).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), m);
    }
}
