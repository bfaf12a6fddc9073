//! LIBSVM / SVMlight sparse text format.
//!
//! ```text
//! +1 1:0.5 3:0.5   # trailing comment
//! -1 2:1
//! ```
//!
//! Indices are 1-based and strictly increasing within a line; the dense
//! dimension is the largest index seen. Blank lines and comment-only lines are
//! skipped, but still counted for error line numbers.

use std::io::{self, BufRead, Write};

use signedrf_core::data::Dataset;
use signedrf_core::linalg::Matrix;

/// Largest feature index accepted.
pub const MAX_DIM: usize = 1 << 20;
/// Largest dense matrix (rows times columns) the parser will allocate.
pub const MAX_CELLS: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    /// 1-based; 0 when the failure is not tied to a line.
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        Self { line, reason: reason.into() }
    }
}

fn parse_label(tok: &str, line: usize) -> Result<i32, ParseError> {
    if let Ok(y) = tok.parse::<i32>() {
        return Ok(y);
    }
    match tok.parse::<f64>() {
        Ok(y) if y.is_finite() && y.fract() == 0.0 && y.abs() <= i32::MAX as f64 => Ok(y as i32),
        Ok(_) => Err(ParseError::new(line, format!("label {tok:?} is not an integer"))),
        Err(_) => Err(ParseError::new(line, format!("label {tok:?} is not numeric"))),
    }
}

type Row = (i32, Vec<(usize, f64)>);

fn parse_line(text: &str, line: usize) -> Result<Option<Row>, ParseError> {
    let body = match text.find('#') {
        Some(i) => &text[..i],
        None => text,
    };
    let mut tokens = body.split_ascii_whitespace();
    let Some(first) = tokens.next() else {
        return Ok(None);
    };
    if first.contains(':') {
        return Err(ParseError::new(line, "empty label"));
    }
    let label = parse_label(first, line)?;
    let mut entries = Vec::new();
    let mut last = 0usize;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| ParseError::new(line, format!("expected index:value, found {tok:?}")))?;
        let idx: usize = idx.parse().map_err(|_| ParseError::new(line, format!("bad index {idx:?}")))?;
        if idx == 0 || idx > MAX_DIM {
            return Err(ParseError::new(line, format!("index {idx} outside 1..={MAX_DIM}")));
        }
        if idx <= last {
            return Err(ParseError::new(line, format!("index {idx} does not increase (previous {last})")));
        }
        let val: f64 = val.parse().map_err(|_| ParseError::new(line, format!("bad value {val:?}")))?;
        if !val.is_finite() {
            return Err(ParseError::new(line, format!("value {val} is not finite")));
        }
        last = idx;
        entries.push((idx, val));
    }
    Ok(Some((label, entries)))
}

/// Parse a whole stream into a dense, unnormalized dataset.
pub fn parse_libsvm<R: BufRead>(mut reader: R) -> Result<Dataset, ParseError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    let mut buf = Vec::new();
    let mut line = 0usize;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| ParseError::new(line + 1, format!("read failed: {e}")))?;
        if n == 0 {
            break;
        }
        line += 1;
        let text = std::str::from_utf8(&buf).map_err(|_| ParseError::new(line, "not valid UTF-8"))?;
        if let Some((label, entries)) = parse_line(text, line)? {
            dim = dim.max(entries.last().map_or(0, |e| e.0));
            if (labels.len() + 1).saturating_mul(dim) > MAX_CELLS {
                return Err(ParseError::new(line, format!("dense matrix would exceed {MAX_CELLS} entries")));
            }
            labels.push(label);
            rows.push(entries);
        }
    }
    let mut data = vec![0.0; rows.len() * dim];
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            data[i * dim + j - 1] = v;
        }
    }
    let m = Matrix::from_vec(rows.len(), dim, data).map_err(|e| ParseError::new(0, e.to_string()))?;
    Dataset::new(m, labels).map_err(|e| ParseError::new(0, e.to_string()))
}

pub fn parse_libsvm_bytes(bytes: &[u8]) -> Result<Dataset, ParseError> {
    parse_libsvm(bytes)
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset, ParseError> {
    parse_libsvm(text.as_bytes())
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// large magnitudes.
pub(crate) fn fmt_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Write nonzero entries only. When the last column of the first row is zero it
/// is written explicitly so that the dimension survives a reparse.
pub fn write_libsvm<W: Write>(data: &Dataset, mut w: W) -> io::Result<()> {
    let d = data.dim();
    for (i, (row, y)) in data.rows().row_iter().zip(data.labels()).enumerate() {
        write!(w, "{y}")?;
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 || (i == 0 && j + 1 == d) {
                write!(w, " {}:{}", j + 1, fmt_value(v))?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn to_libsvm_string(data: &Dataset) -> String {
    let mut out = Vec::new();
    write_libsvm(data, &mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("output is ASCII")
}
