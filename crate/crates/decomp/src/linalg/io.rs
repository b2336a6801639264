//! Matrix file formats: MatrixMarket coordinate, dense text, raw binary.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::sparse::CsrMatrix;

fn file_err(path: &Path, message: impl Into<String>) -> Error {
    Error::MatrixFile {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a MatrixMarket coordinate file (real, general, 1-based indices).
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();

    let header = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                if line.starts_with("%%MatrixMarket") {
                    break line;
                }
                if !line.trim().is_empty() {
                    return Err(file_err(path, "missing %%MatrixMarket header"));
                }
            }
            None => return Err(file_err(path, "empty file")),
        }
    };
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 5
        || !tokens[1].eq_ignore_ascii_case("matrix")
        || !tokens[2].eq_ignore_ascii_case("coordinate")
        || !tokens[3].eq_ignore_ascii_case("real")
        || !tokens[4].eq_ignore_ascii_case("general")
    {
        return Err(file_err(
            path,
            format!("unsupported MatrixMarket header: {header}"),
        ));
    }

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        match dims {
            None => {
                let rows = parse_field(path, parts.next(), "rows")?;
                let cols = parse_field(path, parts.next(), "cols")?;
                let nnz = parse_field(path, parts.next(), "nnz")?;
                dims = Some((rows, cols, nnz));
            }
            Some((rows, cols, _)) => {
                let i: usize = parse_field(path, parts.next(), "row index")?;
                let j: usize = parse_field(path, parts.next(), "col index")?;
                let v: f64 = parse_float(path, parts.next())?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(file_err(
                        path,
                        format!("entry ({i}, {j}) outside {rows}x{cols} (1-based)"),
                    ));
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (rows, cols, nnz) = dims.ok_or_else(|| file_err(path, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(file_err(
            path,
            format!("size line promised {nnz} entries, found {}", triplets.len()),
        ));
    }
    CsrMatrix::from_triplets(rows, cols, &triplets)
}

/// Writes a sparse matrix as MatrixMarket coordinate (real, general).
pub fn write_matrix_market(path: impl AsRef<Path>, m: &CsrMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (i, j, v) in m.iter() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Reads a dense text matrix: first line `rows cols`, then entries in
/// row-major order, whitespace separated (line breaks are not significant).
pub fn read_dense_text(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let mut contents = String::new();
    File::open(path)?.read_to_string(&mut contents)?;
    let mut tokens = contents.split_whitespace();
    let rows: usize = parse_field(path, tokens.next(), "rows")?;
    let cols: usize = parse_field(path, tokens.next(), "cols")?;
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| file_err(path, "dimension overflow"))?;
    let mut entries = Vec::with_capacity(expected);
    for _ in 0..expected {
        entries.push(parse_float(path, tokens.next())?);
    }
    if tokens.next().is_some() {
        return Err(file_err(path, "trailing data after final entry"));
    }
    DenseMatrix::from_vec(rows, cols, entries)
}

/// Writes a dense matrix as text, one row per line, `{:e}` formatting so the
/// round trip is exact.
pub fn write_dense_text(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let row = m.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                write!(w, " ")?;
            }
            write!(w, "{v:e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads the raw binary layout: two little-endian `u64` dimensions followed
/// by `rows·cols` little-endian `f64` entries in row-major order.
pub fn read_dense_binary(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)
        .map_err(|_| file_err(path, "truncated header"))?;
    let rows = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8)
        .map_err(|_| file_err(path, "truncated header"))?;
    let cols = u64::from_le_bytes(buf8) as usize;
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| file_err(path, "dimension overflow"))?;
    let mut entries = Vec::with_capacity(expected);
    for _ in 0..expected {
        r.read_exact(&mut buf8)
            .map_err(|_| file_err(path, "truncated entries"))?;
        entries.push(f64::from_le_bytes(buf8));
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(file_err(path, "trailing bytes after final entry"));
    }
    DenseMatrix::from_vec(rows, cols, entries)
}

/// Writes the raw binary layout described in [`read_dense_binary`].
pub fn write_dense_binary(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.entries() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Loads a matrix by extension: `.mtx` → MatrixMarket (densified), `.bin` →
/// raw binary, anything else → dense text.
pub fn read_auto(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") => Ok(read_matrix_market(path)?.to_dense()),
        Some("bin") => read_dense_binary(path),
        _ => read_dense_text(path),
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    token: Option<&str>,
    what: &str,
) -> Result<T> {
    let token = token.ok_or_else(|| file_err(path, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| file_err(path, format!("invalid {what}: {token:?}")))
}

fn parse_float(path: &Path, token: Option<&str>) -> Result<f64> {
    let token = token.ok_or_else(|| file_err(path, "missing entry"))?;
    let v: f64 = token
        .parse()
        .map_err(|_| file_err(path, format!("invalid entry: {token:?}")))?;
    if !v.is_finite() {
        return Err(file_err(path, format!("non-finite entry: {token:?}")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::{sample_dense_gaussian, sample_sparse_subgaussian};
    use crate::sketch::{SketchSpec, SubGaussianLaw};

    #[test]
    fn dense_text_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = sample_dense_gaussian(7, 3, 99);
        write_dense_text(&path, &m).unwrap();
        let back = read_dense_text(&path).unwrap();
        assert_eq!(m.entries(), back.entries());
    }

    #[test]
    fn dense_binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = sample_dense_gaussian(5, 9, 3);
        write_dense_binary(&path, &m).unwrap();
        let back = read_dense_binary(&path).unwrap();
        assert_eq!(m.shape(), back.shape());
        assert_eq!(m.entries(), back.entries());
    }

    #[test]
    fn matrix_market_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        let spec = SketchSpec::new(8, 11, 0.3, 17).unwrap();
        let s = sample_sparse_subgaussian(&spec, &SubGaussianLaw::scaled_normal()).unwrap();
        write_matrix_market(&path, &s).unwrap();
        let back = read_matrix_market(&path).unwrap();
        assert_eq!(s.to_dense().entries(), back.to_dense().entries());
    }

    #[test]
    fn matrix_market_rejects_bad_headers_and_indices() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mtx");
        std::fs::write(&path, "%%MatrixMarket matrix array real general\n1 1\n2.0\n")
            .unwrap();
        assert!(read_matrix_market(&path).is_err());
        std::fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 5.0\n",
        )
        .unwrap();
        let err = read_matrix_market(&path).unwrap_err();
        assert!(err.to_string().contains("outside"));
    }

    #[test]
    fn dense_text_rejects_truncated_and_trailing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        std::fs::write(&path, "2 2\n1 2 3\n").unwrap();
        assert!(read_dense_text(&path).is_err());
        std::fs::write(&path, "2 2\n1 2 3 4 5\n").unwrap();
        assert!(read_dense_text(&path).is_err());
        std::fs::write(&path, "2 2\n1 2 3 nan\n").unwrap();
        assert!(read_dense_text(&path).is_err());
    }

    #[test]
    fn read_auto_dispatches_on_extension() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample_dense_gaussian(4, 4, 12);

        let txt = dir.path().join("a.txt");
        write_dense_text(&txt, &m).unwrap();
        assert_eq!(read_auto(&txt).unwrap().entries(), m.entries());

        let bin = dir.path().join("a.bin");
        write_dense_binary(&bin, &m).unwrap();
        assert_eq!(read_auto(&bin).unwrap().entries(), m.entries());
    }
}
