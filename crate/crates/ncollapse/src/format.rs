//! CSV and binary embedding files.
//!
//! CSV: header `label,f0,...,f{p-1}`, then one `label,x0,...` line per row.
//! Binary (little-endian): `NCEB`, version `u32 = 1`, row count `u64`,
//! dim `u32`, then per row a `u32` label followed by `dim` `f64` values.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ncollapse_core::LabeledEmbeddings;

pub const MAGIC: &[u8; 4] = b"NCEB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    /// `.csv` means CSV; anything else is binary.
    pub fn from_extension(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("empty file")]
    Empty,
    #[error(transparent)]
    Invalid(#[from] ncollapse_core::Error),
}

impl FormatError {
    pub fn is_io(&self) -> bool {
        matches!(self, FormatError::Io { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a file; `None` sniffs the format from the leading magic bytes.
pub fn load_embeddings(path: &Path, format: Option<Format>) -> Result<LabeledEmbeddings, FormatError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let format = format.unwrap_or(if bytes.starts_with(MAGIC) {
        Format::Binary
    } else {
        Format::Csv
    });
    match format {
        Format::Binary => decode_binary(&bytes),
        Format::Csv => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| FormatError::Header(format!("not UTF-8: {e}")))?;
            parse_csv(text)
        }
    }
}

pub fn save_embeddings(set: &LabeledEmbeddings, path: &Path, format: Format) -> Result<(), FormatError> {
    let bytes = match format {
        Format::Csv => to_csv(set).into_bytes(),
        Format::Binary => encode_binary(set),
    };
    fs::write(path, bytes).map_err(io_err(path))
}

/// Row indices in errors count data rows from 0, excluding the header.
pub fn parse_csv(text: &str) -> Result<LabeledEmbeddings, FormatError> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let header = lines.next().filter(|h| !h.is_empty()).ok_or(FormatError::Empty)?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"label") {
        return Err(FormatError::Header("first column must be `label`".into()));
    }
    let dim = cols.len() - 1;
    if dim == 0 {
        return Err(FormatError::Header("no feature columns".into()));
    }
    for (i, c) in cols[1..].iter().enumerate() {
        if *c != format!("f{i}") {
            return Err(FormatError::Header(format!("column {} should be `f{i}`, found `{c}`", i + 1)));
        }
    }

    let mut labels = Vec::new();
    let mut data = Vec::new();
    let mut rows: Vec<&str> = lines.collect();
    if rows.last() == Some(&"") {
        rows.pop();
    }
    for (row, line) in rows.into_iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(FormatError::Row {
                row,
                msg: format!("expected {dim} features, found {}", fields.len().saturating_sub(1)),
            });
        }
        let label: u32 = fields[0].trim().parse().map_err(|_| FormatError::Row {
            row,
            msg: format!("bad label `{}`", fields[0]),
        })?;
        labels.push(label);
        for (col, f) in fields[1..].iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| FormatError::Row {
                row,
                msg: format!("bad value `{f}` in column f{col}"),
            })?;
            if !v.is_finite() {
                return Err(FormatError::Row {
                    row,
                    msg: format!("non-finite value in column f{col}"),
                });
            }
            data.push(v);
        }
    }
    if labels.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(LabeledEmbeddings::from_flat(dim, labels, data)?)
}

/// Values are written with the shortest representation that parses back to
/// the same `f64`.
pub fn to_csv(set: &LabeledEmbeddings) -> String {
    let mut out = String::from("label");
    for i in 0..set.dim() {
        write!(out, ",f{i}").unwrap();
    }
    out.push('\n');
    for (label, row) in set.rows() {
        write!(out, "{label}").unwrap();
        for v in row {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn encode_binary(set: &LabeledEmbeddings) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + set.len() * (4 + 8 * set.dim()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    out.extend_from_slice(&(set.dim() as u32).to_le_bytes());
    for (label, row) in set.rows() {
        out.extend_from_slice(&label.to_le_bytes());
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<LabeledEmbeddings, FormatError> {
    if bytes.is_empty() {
        return Err(FormatError::Empty);
    }
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(FormatError::Header("missing NCEB preamble".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(FormatError::Header(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(FormatError::Header("dim must be positive".into()));
    }
    if rows == 0 {
        return Err(FormatError::Empty);
    }
    let stride = 4 + 8 * dim;
    let body = &bytes[20..];
    if body.len() / stride < rows {
        return Err(FormatError::Row {
            row: body.len() / stride,
            msg: "truncated row".into(),
        });
    }
    if body.len() != rows * stride {
        return Err(FormatError::Row {
            row: rows,
            msg: "trailing bytes after last row".into(),
        });
    }
    let mut labels = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for (row, chunk) in body.chunks_exact(stride).enumerate() {
        labels.push(u32::from_le_bytes(chunk[..4].try_into().unwrap()));
        for (col, v) in chunk[4..].chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(v.try_into().unwrap());
            if !v.is_finite() {
                return Err(FormatError::Row {
                    row,
                    msg: format!("non-finite value in column f{col}"),
                });
            }
            data.push(v);
        }
    }
    Ok(LabeledEmbeddings::from_flat(dim, labels, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_csv() {
        let set = parse_csv("label,f0,f1\n0,1.0,0.0\n1,0.0,1.0").unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dim(), 2);
        assert_eq!(set.distinct_labels(), vec![0, 1]);
        assert_eq!(set.row(1), (1, &[0.0, 1.0][..]));
    }

    #[test]
    fn ragged_csv_row_reports_index() {
        let err = parse_csv("label,f0,f1\n0,1,2\n1,1,2,3\n").unwrap_err();
        assert!(matches!(err, FormatError::Row { row: 1, .. }), "{err}");
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(parse_csv(""), Err(FormatError::Empty)));
        assert!(matches!(parse_csv("label,f0\n"), Err(FormatError::Empty)));
        assert!(matches!(parse_csv("lbl,f0\n0,1"), Err(FormatError::Header(_))));
        assert!(matches!(parse_csv("label,f1\n0,1"), Err(FormatError::Header(_))));
        assert!(matches!(parse_csv("label,f0\n0,NaN"), Err(FormatError::Row { row: 0, .. })));
        assert!(matches!(parse_csv("label,f0\n0,1\n-1,2"), Err(FormatError::Row { row: 1, .. })));
    }

    #[test]
    fn binary_layout() {
        let set = LabeledEmbeddings::from_rows([(7u32, [1.5, -2.0])]).unwrap();
        let b = encode_binary(&set);
        assert_eq!(&b[..4], b"NCEB");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[16..20].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[20..24].try_into().unwrap()), 7);
        assert_eq!(f64::from_le_bytes(b[24..32].try_into().unwrap()), 1.5);
        assert_eq!(b.len(), 40);
        assert_eq!(decode_binary(&b).unwrap(), set);
        assert!(decode_binary(&b[..35]).is_err());
        let mut bad = b.clone();
        bad[32..40].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(decode_binary(&bad).is_err());
    }
}
