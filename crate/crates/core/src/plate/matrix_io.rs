//! Plain-text grid matrices.
//!
//! ```text
//! <n> <spacing>
//! v(0,0) v(0,1) ... v(0,n-1)
//! ...
//! v(n-1,0) ...      v(n-1,n-1)
//! ```
//!
//! Rows run along the planar x index. Values are written with nine
//! significant digits; lines starting with `#` are ignored on read.

use std::io::{self, BufRead, Write};

use super::grid::NodeField;

#[derive(Debug, thiserror::Error)]
pub enum MatrixFormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
}

/// A grid matrix as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMatrix {
    pub spacing: f64,
    pub values: NodeField,
}

pub fn write_matrix<W: Write>(out: &mut W, spacing: f64, field: &NodeField) -> io::Result<()> {
    let n = field.n();
    writeln!(out, "{n} {spacing:.8e}")?;
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:.8e}", field.get(i, j))).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(input: R) -> Result<GridMatrix, MatrixFormatError> {
    let mut header: Option<(usize, f64)> = None;
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| MatrixFormatError::Parse { line: lineno, message };
        match header {
            None => {
                let mut parts = text.split_whitespace();
                let n = parts
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| parse_err("header must start with the node count".into()))?;
                let spacing = parts
                    .next()
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| parse_err("header must give the grid spacing".into()))?;
                if parts.next().is_some() {
                    return Err(parse_err("unexpected trailing header fields".into()));
                }
                header = Some((n, spacing));
            }
            Some((n, _)) => {
                let row: Vec<f64> = text
                    .split_whitespace()
                    .map(|s| s.parse::<f64>().map_err(|e| parse_err(format!("bad value `{s}`: {e}"))))
                    .collect::<Result<_, _>>()?;
                if row.len() != n {
                    return Err(parse_err(format!("expected {n} values, found {}", row.len())));
                }
                values.extend(row);
                rows += 1;
            }
        }
    }
    let (n, spacing) = header.ok_or(MatrixFormatError::MissingHeader)?;
    if rows != n {
        return Err(MatrixFormatError::RowCount { expected: n, found: rows });
    }
    let values = NodeField::from_vec(n, values).expect("row count checked");
    Ok(GridMatrix { spacing, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_nine_digits() {
        let f = NodeField::from_fn(3, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0));
        let mut buf = Vec::new();
        write_matrix(&mut buf, 0.125, &f).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 1.25000000e-1\n"));
        let back = read_matrix(&buf[..]).unwrap();
        assert_eq!(back.spacing, 0.125);
        for (a, b) in back.values.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 5e-9 * b.abs());
        }
    }

    #[test]
    fn rejects_short_rows() {
        let err = read_matrix("2 0.5\n1 2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MatrixFormatError::Parse { line: 3, .. }));
        let err = read_matrix("2 0.5\n1 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MatrixFormatError::RowCount { expected: 2, found: 1 }));
    }
}
