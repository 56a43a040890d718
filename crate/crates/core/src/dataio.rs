//! LIBSVM text files, label mapping and dense CSV feature matrices.

use std::fmt;
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::models::Dataset;

/// A malformed input with its 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at line {}, column {}", self.message, self.line, self.column)
    }
}

impl std::error::Error for ParseError {}

/// One LIBSVM line: a label and sparse `(index, value)` pairs with 1-based,
/// strictly increasing indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub label: f64,
    pub values: Vec<(usize, f64)>,
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

fn parse_finite(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses one line; `None` for blank or comment-only lines.
pub fn parse_libsvm_line(text: &str, line: usize) -> std::result::Result<Option<RawSample>, ParseError> {
    let body = match text.find('#') {
        Some(p) => &text[..p],
        None => text,
    };
    let mut tokens = body
        .char_indices()
        .filter(|&(i, c)| !c.is_whitespace() && (i == 0 || body[..i].ends_with(char::is_whitespace)))
        .map(|(i, _)| {
            let end = body[i..].find(char::is_whitespace).map_or(body.len(), |e| i + e);
            (i, &body[i..end])
        });
    let col = |byte: usize| body[..byte].chars().count() + 1;

    let (lpos, ltok) = match tokens.next() {
        Some(t) => t,
        None => return Ok(None),
    };
    let label = parse_finite(ltok)
        .ok_or_else(|| perr(line, col(lpos), format!("invalid label '{ltok}'")))?;

    let mut values = Vec::new();
    let mut last = 0usize;
    for (pos, tok) in tokens {
        let (itok, vtok) = tok
            .split_once(':')
            .ok_or_else(|| perr(line, col(pos), format!("expected index:value, found '{tok}'")))?;
        let idx: usize = itok
            .parse()
            .map_err(|_| perr(line, col(pos), format!("invalid feature index '{itok}'")))?;
        if idx < 1 {
            return Err(perr(line, col(pos), "feature index must be at least 1"));
        }
        if idx <= last {
            return Err(perr(line, col(pos), format!("non-increasing feature index at line {line}")));
        }
        let v = parse_finite(vtok).ok_or_else(|| {
            perr(line, col(pos) + itok.chars().count() + 1, format!("invalid value '{vtok}'"))
        })?;
        last = idx;
        values.push((idx, v));
    }
    Ok(Some(RawSample { label, values }))
}

/// Parses a LIBSVM stream. `#` starts a comment; blank lines are skipped.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Vec<RawSample>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(s) = parse_libsvm_line(&line, k + 1)? {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn parse_libsvm_str(text: &str) -> std::result::Result<Vec<RawSample>, ParseError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if let Some(s) = parse_libsvm_line(line, k + 1)? {
            out.push(s);
        }
    }
    Ok(out)
}

/// Writes samples in LIBSVM format with round-trip float formatting.
pub fn write_libsvm<W: Write>(samples: &[RawSample], mut out: W) -> Result<()> {
    for s in samples {
        write!(out, "{}", s.label)?;
        for &(i, v) in &s.values {
            write!(out, " {i}:{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Explicit mapping from raw labels to ±1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelMap {
    pairs: Vec<(f64, f64)>,
}

impl LabelMap {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(raw, mapped)) in pairs.iter().enumerate() {
            if !raw.is_finite() {
                return Err(Error::Config(format!("label map key {raw} is not finite")));
            }
            if mapped != 1.0 && mapped != -1.0 {
                return Err(Error::Config(format!("label map target {mapped} is not ±1")));
            }
            if pairs[..i].iter().any(|p| p.0 == raw) {
                return Err(Error::Config(format!("label {raw} mapped twice")));
            }
        }
        Ok(Self { pairs })
    }

    /// Parses `raw:mapped[,raw:mapped...]`, e.g. `0:-1,1:1`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("label map entry '{part}' needs raw:mapped")))?;
            let raw = a
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid raw label '{a}'")))?;
            let mapped = b
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid mapped label '{b}'")))?;
            pairs.push((raw, mapped));
        }
        if pairs.is_empty() {
            return Err(Error::Config("empty label map".into()));
        }
        Self::new(pairs)
    }

    /// Without a map only ±1 labels pass through.
    pub fn apply(map: Option<&LabelMap>, raw: f64) -> Result<f64> {
        match map {
            Some(m) => m
                .pairs
                .iter()
                .find(|p| p.0 == raw)
                .map(|p| p.1)
                .ok_or_else(|| Error::InvalidDataset(format!("unmapped label {raw}"))),
            None if raw == 1.0 || raw == -1.0 => Ok(raw),
            None => Err(Error::InvalidDataset(format!(
                "label {raw} is not ±1; supply a label map"
            ))),
        }
    }
}

/// Upper limit on `n · dims` when densifying.
pub const MAX_DENSE_CELLS: usize = 1 << 28;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrepareOptions {
    pub label_map: Option<LabelMap>,
    /// Remove every original feature column with at least one zero entry.
    pub drop_zero_features: bool,
    /// Number of original feature columns; defaults to the largest index.
    pub dims: Option<usize>,
}

/// A dataset together with the 1-based original indices of its kept
/// feature columns (the intercept is not listed).
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub dataset: Dataset,
    pub kept_features: Vec<usize>,
}

/// Densifies samples, maps labels and appends the intercept column last.
pub fn prepare_dataset(samples: &[RawSample], opts: &PrepareOptions) -> Result<PreparedDataset> {
    if samples.is_empty() {
        return Err(Error::InvalidDataset("empty dataset".into()));
    }
    let max_idx = samples
        .iter()
        .filter_map(|s| s.values.last().map(|v| v.0))
        .max()
        .unwrap_or(0);
    let dims = match opts.dims {
        Some(d) if d < max_idx => {
            return Err(Error::InvalidDataset(format!(
                "feature index {max_idx} exceeds the declared dimension {d}"
            )))
        }
        Some(d) => d,
        None => max_idx,
    };
    let n = samples.len();
    let cells = n
        .checked_mul(dims)
        .filter(|&c| c <= MAX_DENSE_CELLS)
        .ok_or_else(|| Error::InvalidDataset(format!("{n} × {dims} dense matrix is too large")))?;
    let mut dense = vec![0.0; cells];
    let mut y = Vec::with_capacity(n);
    for (i, s) in samples.iter().enumerate() {
        y.push(LabelMap::apply(opts.label_map.as_ref(), s.label)?);
        for &(j, v) in &s.values {
            dense[i * dims + j - 1] = v;
        }
    }
    let kept: Vec<usize> = (0..dims)
        .filter(|&j| !opts.drop_zero_features || (0..n).all(|i| dense[i * dims + j] != 0.0))
        .collect();
    let d = kept.len() + 1;
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        data.extend(kept.iter().map(|&j| dense[i * dims + j]));
        data.push(1.0);
    }
    let dataset = Dataset::new(DenseMatrix::new(n, d, data)?, y)?;
    Ok(PreparedDataset {
        dataset,
        kept_features: kept.into_iter().map(|j| j + 1).collect(),
    })
}

/// Reads a LIBSVM file from disk and prepares it.
pub fn load_libsvm_file(path: impl AsRef<std::path::Path>, opts: &PrepareOptions) -> Result<PreparedDataset> {
    let f = std::fs::File::open(path.as_ref())?;
    let samples = parse_libsvm(std::io::BufReader::new(f))?;
    prepare_dataset(&samples, opts)
}

/// Reads a header-first numeric CSV; every column except `label_column` is a
/// feature. The intercept is appended.
pub fn load_dense_features<R: Read>(
    reader: R,
    label_column: &str,
    label_map: Option<&LabelMap>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| Error::InvalidDataset(format!("no column named '{label_column}'")))?;
    let width = headers.len();
    let mut data = Vec::new();
    let mut y = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != width {
            return Err(Error::InvalidDataset(format!(
                "row at line {line} has {} fields, expected {width}",
                rec.len()
            )));
        }
        for (c, field) in rec.iter().enumerate() {
            let v = parse_finite(field.trim()).ok_or_else(|| {
                Error::Parse(perr(line, c + 1, format!("invalid number '{field}'")))
            })?;
            if c == label_idx {
                y.push(LabelMap::apply(label_map, v)?);
            } else {
                data.push(v);
            }
        }
        data.push(1.0);
    }
    if y.is_empty() {
        return Err(Error::InvalidDataset("empty dataset".into()));
    }
    let n = y.len();
    Dataset::new(DenseMatrix::new(n, width, data)?, y)
}

/// Writes the non-intercept features and labels as CSV with columns
/// `f1..f{d-1}` and `label_column`. Floats use round-trip formatting.
pub fn write_dense_features<W: Write>(data: &Dataset, out: W, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let feats = data.d() - usize::from(data.has_intercept());
    let mut header: Vec<String> = (1..=feats).map(|j| format!("f{j}")).collect();
    header.push(label_column.to_string());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.x().row(i)[..feats].iter().map(|v| format!("{v:?}")).collect();
        row.push(format!("{}", data.y()[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
