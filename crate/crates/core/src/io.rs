//! Plain-text and image export formats.
//!
//! * Dense matrices: a header line `rows cols` followed by `rows` lines of
//!   whitespace-separated row-major values.
//! * Images: binary PGM (`P5`, 8-bit, row-major) on a fixed gray window.
//! * Numeric CSV fields are printed as `{:.12e}` so artifacts are byte-stable.

use std::io::{self, BufRead, Write};

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed matrix header: {0:?}")]
    Header(String),
    #[error("invalid number {token:?} on line {line}")]
    Number { line: usize, token: String },
    #[error("expected {expected} values, found {found}")]
    Count { expected: usize, found: usize },
}

/// Fixed-precision float formatting used by every CSV/report writer.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_dense_matrix<W: Write>(mut w: W, m: &DMatrix<f64>) -> io::Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_dense_matrix<R: BufRead>(r: R) -> Result<DMatrix<f64>, FormatError> {
    let mut lines = r.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(FormatError::Header(String::new())),
        }
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| FormatError::Header(header.clone()))?;
    let [rows, cols] = dims[..] else {
        return Err(FormatError::Header(header));
    };
    if rows == 0 || cols == 0 {
        return Err(FormatError::Header(header));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (idx, line) in lines {
        let line = line?;
        for tok in line.split_whitespace() {
            let v = tok.parse::<f64>().map_err(|_| FormatError::Number {
                line: idx + 1,
                token: tok.to_string(),
            })?;
            values.push(v);
        }
    }
    if values.len() != rows * cols {
        return Err(FormatError::Count {
            expected: rows * cols,
            found: values.len(),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Writes a row-major `height × width` field as binary PGM, mapping
/// `[lo, hi]` linearly onto `0..=255` and clamping outside values.
pub fn write_pgm<W: Write>(
    mut w: W,
    values: &[f64],
    height: usize,
    width: usize,
    lo: f64,
    hi: f64,
) -> io::Result<()> {
    assert_eq!(values.len(), height * width);
    assert!(hi > lo);
    write!(w, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = values
        .iter()
        .map(|v| {
            let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            (t * 255.0).round() as u8
        })
        .collect();
    w.write_all(&bytes)
}

/// Writes a row-major `height × width` field as CSV, one image row per line.
pub fn write_grid_csv<W: Write>(
    mut w: W,
    values: &[f64],
    height: usize,
    width: usize,
) -> io::Result<()> {
    assert_eq!(values.len(), height * width);
    for row in values.chunks(width) {
        let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_header_and_values() {
        let text = "2 3\n1 2 3\n4 5 6.5\n";
        let m = read_dense_matrix(text.as_bytes()).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(m[(1, 2)], 6.5);
        assert_eq!(m[(0, 1)], 2.0);
    }

    #[test]
    fn rejects_wrong_count_and_bad_tokens() {
        assert!(matches!(
            read_dense_matrix("2 2\n1 2 3\n".as_bytes()),
            Err(FormatError::Count {
                expected: 4,
                found: 3
            })
        ));
        assert!(matches!(
            read_dense_matrix("1 1\nfoo\n".as_bytes()),
            Err(FormatError::Number { .. })
        ));
        assert!(matches!(
            read_dense_matrix("3\n1 2 3\n".as_bytes()),
            Err(FormatError::Header(_))
        ));
    }

    #[test]
    fn pgm_header_and_window() {
        let mut buf = Vec::new();
        write_pgm(&mut buf, &[-1.0, 0.0, 0.5, 2.0], 2, 2, 0.0, 1.0).unwrap();
        assert!(buf.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&buf[buf.len() - 4..], &[0, 0, 128, 255]);
    }

    proptest! {
        #[test]
        fn matrix_text_round_trip(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            let m = DMatrix::from_fn(rows, cols, |i, j| {
                let k = (seed ^ ((i * 31 + j) as u64)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                (k >> 11) as f64 / (1u64 << 53) as f64 * 200.0 - 100.0
            });
            let mut buf = Vec::new();
            write_dense_matrix(&mut buf, &m).unwrap();
            let back = read_dense_matrix(buf.as_slice()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
