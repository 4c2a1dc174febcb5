//! Matrix Market exchange format (real/integer, general/symmetric/skew).
//!
//! Indices are 1-based on disk and 0-based in memory. Coordinate files load
//! as sparse matrices, array files as dense ones.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{CsrMatrix, Matrix};
use crate::error::{CurError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Matrix> {
    let file = File::open(path)?;
    read_from(BufReader::new(file))
}

pub fn read_matrix_market_str(text: &str) -> Result<Matrix> {
    read_from(text.as_bytes())
}

fn parse_err(line: usize, message: impl Into<String>) -> CurError {
    CurError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<(Layout, Symmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(1, "missing %%MatrixMarket banner"));
    }
    if tokens[1] != "matrix" {
        return Err(CurError::Unsupported(format!("object type '{}'", tokens[1])));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(CurError::Unsupported(format!("format '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        "complex" => {
            return Err(CurError::Unsupported(
                "complex matrices are not supported".into(),
            ))
        }
        "pattern" => {
            return Err(CurError::Unsupported(
                "pattern matrices carry no values and are not supported".into(),
            ))
        }
        other => return Err(CurError::Unsupported(format!("field type '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(CurError::Unsupported(format!("symmetry '{other}'"))),
    };
    Ok((layout, symmetry))
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let v: f64 = tok
        .ok_or_else(|| parse_err(line, "missing value"))?
        .parse()
        .map_err(|_| parse_err(line, "invalid value"))?;
    if !v.is_finite() {
        return Err(parse_err(line, "non-finite value"));
    }
    Ok(v)
}

fn read_from<R: BufRead>(reader: R) -> Result<Matrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (layout, symmetry) = parse_header(&first?)?;

    // Data lines, skipping comments and blanks.
    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((no, t.to_string())))
            }
        }
        Err(e) => Some(Err(CurError::from(e))),
    });

    let (size_no, size_line) = data
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))??;
    let mut toks = size_line.split_whitespace();
    let m = parse_usize(toks.next(), size_no, "row count")?;
    let n = parse_usize(toks.next(), size_no, "column count")?;
    if m == 0 || n == 0 {
        return Err(parse_err(size_no, "matrix dimensions must be positive"));
    }
    if symmetry != Symmetry::General && m != n {
        return Err(parse_err(size_no, "symmetric storage requires a square matrix"));
    }

    match layout {
        Layout::Coordinate => {
            let nnz = parse_usize(toks.next(), size_no, "entry count")?;
            let mut triplets = Vec::with_capacity(nnz * if symmetry == Symmetry::General { 1 } else { 2 });
            let mut count = 0usize;
            for item in data {
                let (no, line) = item?;
                if count == nnz {
                    return Err(parse_err(no, "more entries than declared"));
                }
                let mut t = line.split_whitespace();
                let i = parse_usize(t.next(), no, "row index")?;
                let j = parse_usize(t.next(), no, "column index")?;
                let v = parse_f64(t.next(), no)?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(parse_err(no, format!("index ({i}, {j}) out of range")));
                }
                let (i, j) = (i - 1, j - 1);
                triplets.push((i, j, v));
                if i != j {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => triplets.push((j, i, v)),
                        Symmetry::SkewSymmetric => triplets.push((j, i, -v)),
                    }
                }
                count += 1;
            }
            if count != nnz {
                return Err(parse_err(
                    size_no,
                    format!("declared {nnz} entries, found {count}"),
                ));
            }
            Ok(Matrix::Sparse(CsrMatrix::from_triplets(m, n, triplets)?))
        }
        Layout::Array => {
            let mut a = DMatrix::zeros(m, n);
            // Column-major; symmetric variants store the lower triangle only.
            let slots: Vec<(usize, usize)> = (0..n)
                .flat_map(|j| {
                    let start = match symmetry {
                        Symmetry::General => 0,
                        Symmetry::Symmetric => j,
                        Symmetry::SkewSymmetric => j + 1,
                    };
                    (start..m).map(move |i| (i, j))
                })
                .collect();
            let mut next = 0usize;
            for item in data {
                let (no, line) = item?;
                for tok in line.split_whitespace() {
                    let &(i, j) = slots
                        .get(next)
                        .ok_or_else(|| parse_err(no, "more values than the declared size"))?;
                    let v = parse_f64(Some(tok), no)?;
                    a[(i, j)] = v;
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => a[(j, i)] = v,
                        Symmetry::SkewSymmetric => a[(j, i)] = -v,
                    }
                    next += 1;
                }
            }
            if next != slots.len() {
                return Err(parse_err(
                    size_no,
                    format!("declared {} values, found {next}", slots.len()),
                ));
            }
            Ok(Matrix::Dense(a))
        }
    }
}

/// Writes sparse matrices in coordinate format and dense ones in array
/// format, general symmetry, with round-trip exact value formatting.
pub fn write_matrix_market(matrix: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(matrix, &mut w)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_to<W: Write>(matrix: &Matrix, w: &mut W) -> Result<()> {
    match matrix {
        Matrix::Sparse(a) => {
            writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
            for (i, j, v) in a.triplets() {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        Matrix::Dense(a) => {
            writeln!(w, "%%MatrixMarket matrix array real general")?;
            writeln!(w, "{} {}", a.nrows(), a.ncols())?;
            for v in a.iter() {
                writeln!(w, "{v:e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coordinate_identity() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0";
        let a = read_matrix_market_str(text).unwrap();
        assert!(a.is_sparse());
        assert_eq!(a.to_dense(), DMatrix::identity(2, 2));
    }

    #[test]
    fn array_column() {
        let text = "%%MatrixMarket matrix array real general\n% a comment\n2 1\n3.0\n4.0\n";
        let a = read_matrix_market_str(text).unwrap();
        assert_eq!(a.to_dense(), DMatrix::from_column_slice(2, 1, &[3.0, 4.0]));
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 2\n3 1 5\n2 2 1\n";
        let a = read_matrix_market_str(text).unwrap().to_dense();
        assert_eq!(a[(0, 2)], 5.0);
        assert_eq!(a[(2, 0)], 5.0);
        assert_eq!(a[(1, 1)], 1.0);
        let arr = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        let b = read_matrix_market_str(arr).unwrap().to_dense();
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
    }

    #[test]
    fn rejects_complex_and_pattern() {
        for field in ["complex", "pattern"] {
            let text = format!("%%MatrixMarket matrix coordinate {field} general\n1 1 1\n1 1\n");
            let err = read_matrix_market_str(&text).unwrap_err();
            assert!(matches!(err, CurError::Unsupported(ref m) if m.contains(field)), "{err}");
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 x 1.0\n";
        match read_matrix_market_str(text).unwrap_err() {
            CurError::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
        let out_of_range = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(
            read_matrix_market_str(out_of_range),
            Err(CurError::Parse { line: 3, .. })
        ));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market_str(short).is_err());
    }

    proptest! {
        #[test]
        fn write_then_read_round_trips(
            entries in proptest::collection::vec((0usize..7, 0usize..5, -1e3f64..1e3), 0..30),
            dense in any::<bool>(),
        ) {
            let sparse = CsrMatrix::from_triplets(7, 5, entries).unwrap();
            let original = if dense { Matrix::Dense(sparse.to_dense()) } else { Matrix::Sparse(sparse) };
            let mut buf = Vec::new();
            write_to(&original, &mut buf).unwrap();
            let back = read_matrix_market_str(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, original);
        }
    }
}
