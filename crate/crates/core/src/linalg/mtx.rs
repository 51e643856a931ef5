//! Matrix Market I/O: `coordinate real {general,symmetric}` for sparse
//! matrices and `array real general` for vectors.
//!
//! Values are written with 17 significant digits, which round-trips every
//! finite `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    /// Only the lower triangle is written; the reader mirrors it.
    Symmetric,
}

pub fn write_matrix<W: Write>(a: &CsrMatrix, symmetry: Symmetry, mut out: W) -> Result<()> {
    let entries: Vec<(usize, usize, f64)> = (0..a.n_rows())
        .flat_map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v)).collect::<Vec<_>>()
        })
        .filter(|&(i, j, _)| symmetry == Symmetry::General || j <= i)
        .collect();
    let kind = match symmetry {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
    };
    writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_vector<W: Write>(v: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{x:.16e}")?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        for line in self.inner.by_ref() {
            self.line_no += 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            return Ok(Some(trimmed.to_string()));
        }
        Ok(None)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line_no,
            msg: msg.into(),
        }
    }
}

fn parse_header<R: BufRead>(reader: R) -> Result<(Vec<String>, Lines<R>)> {
    let mut inner = reader.lines();
    let header = inner.next().transpose()?.ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unrecognised header `{header}`"),
        });
    }
    if tokens[3] != "real" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported field `{}`", tokens[3]),
        });
    }
    Ok((tokens, Lines { inner, line_no: 1 }))
}

fn parse<T: std::str::FromStr, R: BufRead>(lines: &Lines<R>, tok: Option<&str>) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| lines.err(format!("malformed token {tok:?}")))
}

pub fn read_matrix<R: BufRead>(reader: R) -> Result<CsrMatrix> {
    let (tokens, mut lines) = parse_header(reader)?;
    if tokens[2] != "coordinate" {
        return Err(lines.err("expected coordinate format"));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(lines.err(format!("unsupported symmetry `{other}`"))),
    };
    let size = lines.next_line()?.ok_or_else(|| lines.err("missing size line"))?;
    let mut it = size.split_whitespace();
    let n_rows: usize = parse(&lines, it.next())?;
    let n_cols: usize = parse(&lines, it.next())?;
    let nnz: usize = parse(&lines, it.next())?;
    let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    for _ in 0..nnz {
        let line = lines
            .next_line()?
            .ok_or_else(|| lines.err("unexpected end of entries"))?;
        let mut it = line.split_whitespace();
        let i: usize = parse(&lines, it.next())?;
        let j: usize = parse(&lines, it.next())?;
        let v: f64 = parse(&lines, it.next())?;
        if i == 0 || j == 0 || i > n_rows || j > n_cols {
            return Err(lines.err(format!("index ({i}, {j}) out of range")));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &triplets)
}

pub fn read_vector<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let (tokens, mut lines) = parse_header(reader)?;
    if tokens[2] != "array" {
        return Err(lines.err("expected array format"));
    }
    let size = lines.next_line()?.ok_or_else(|| lines.err("missing size line"))?;
    let mut it = size.split_whitespace();
    let n: usize = parse(&lines, it.next())?;
    let m: usize = parse(&lines, it.next())?;
    if m != 1 {
        return Err(lines.err(format!("expected a single column, found {m}")));
    }
    (0..n)
        .map(|_| {
            let line = lines
                .next_line()?
                .ok_or_else(|| lines.err("unexpected end of values"))?;
            parse(&lines, Some(line.as_str()))
        })
        .collect()
}

pub fn save_matrix(path: &Path, a: &CsrMatrix, symmetry: Symmetry) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(a, symmetry, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vector(v, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<CsrMatrix> {
    read_matrix(BufReader::new(File::open(path)?))
}

pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    read_vector(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_round_trip() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 1.0 / 3.0),
                (0, 2, -0.1),
                (2, 0, -0.1),
                (1, 1, 2.5e-300),
                (2, 2, 7.0),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_matrix(&a, Symmetry::Symmetric, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n"));
        assert_eq!(read_matrix(&buf[..]).unwrap(), a);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_matrix(&b"hello\n"[..]).is_err());
        let bad = b"%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(read_matrix(&bad[..]), Err(Error::Parse { line: 3, .. })));
        let short = b"%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix(&short[..]).is_err());
    }

    #[test]
    fn comments_are_skipped() {
        let text = b"%%MatrixMarket matrix coordinate real general\n% note\n2 2 1\n\n2 1 4.5\n";
        let a = read_matrix(&text[..]).unwrap();
        assert_eq!(a.get(1, 0), 4.5);
    }

    proptest! {
        #[test]
        fn general_round_trip_is_bit_exact(
            entries in proptest::collection::vec((0usize..6, 0usize..5, proptest::num::f64::NORMAL), 0..30)
        ) {
            let a = CsrMatrix::from_triplets(6, 5, &entries).unwrap();
            let mut buf = Vec::new();
            write_matrix(&a, Symmetry::General, &mut buf).unwrap();
            prop_assert_eq!(read_matrix(&buf[..]).unwrap(), a);
        }

        #[test]
        fn vector_round_trip_is_bit_exact(v in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 0..40)) {
            let mut buf = Vec::new();
            write_vector(&v, &mut buf).unwrap();
            let back = read_vector(&buf[..]).unwrap();
            prop_assert_eq!(back.len(), v.len());
            for (a, b) in back.iter().zip(&v) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
