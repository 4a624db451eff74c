//! Matrix files: plain CSV rows or a little-endian binary container.
//!
//! Binary layout: magic `ALMX`, u32 version, u64 rows, u64 cols, then
//! rows*cols f64 values row-major, all little-endian. CSV files are bare
//! numeric rows with no header; values print in shortest round-trip form,
//! so a write/read cycle is bit-exact in either format.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use aligned_init::DenseMatrix;

use crate::error::CliError;

pub const MATRIX_MAGIC: &[u8; 4] = b"ALMX";
pub const MATRIX_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

impl FromStr for MatrixFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv),
            "bin" | "binary" => Ok(MatrixFormat::Binary),
            other => Err(CliError::Usage(format!(
                "unknown matrix format {other:?}, expected csv or bin"
            ))),
        }
    }
}

impl MatrixFormat {
    /// Pick a format from the output extension; `.bin` means binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => MatrixFormat::Binary,
            _ => MatrixFormat::Csv,
        }
    }
}

pub fn matrix_to_csv(w: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..w.rows() {
        let row: Vec<String> = w.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn matrix_to_binary(w: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * w.rows() * w.cols());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.extend_from_slice(&(w.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(w.cols() as u64).to_le_bytes());
    for v in w.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_matrix(path: &Path, w: &DenseMatrix, format: MatrixFormat) -> Result<(), CliError> {
    let bytes = match format {
        MatrixFormat::Csv => matrix_to_csv(w).into_bytes(),
        MatrixFormat::Binary => matrix_to_binary(w),
    };
    let mut file = fs::File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(&bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a matrix file, sniffing the binary magic and falling back to CSV.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() >= 4 && &bytes[..4] == MATRIX_MAGIC {
        return parse_binary(path, &bytes);
    }
    parse_csv(path, &bytes)
}

fn bad(path: &Path, message: impl Into<String>) -> CliError {
    CliError::BadMatrixFile {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<DenseMatrix, CliError> {
    if bytes.len() < 24 {
        return Err(bad(path, "binary header truncated"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != MATRIX_VERSION {
        return Err(bad(path, format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let want = 24 + 8 * rows * cols;
    if bytes.len() != want {
        return Err(bad(
            path,
            format!("expected {want} bytes for {rows}x{cols}, got {}", bytes.len()),
        ));
    }
    let data: Vec<f64> = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).map_err(|e| bad(path, e.to_string()))
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<DenseMatrix, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| bad(path, "not UTF-8 and not binary"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse()).collect();
        rows.push(row.map_err(|e| bad(path, format!("line {}: {e}", i + 1)))?);
    }
    if rows.is_empty() {
        return Err(bad(path, "no rows"));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| bad(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use aligned_init::{generate_alg2, RngStream};

    fn sample() -> DenseMatrix {
        let mut rng = RngStream::new(9).rng();
        generate_alg2(3, 5, &mut rng).unwrap().into_matrix()
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let w = sample();
        write_matrix(&path, &w, MatrixFormat::Csv).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(w.as_slice(), back.as_slice());
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let w = sample();
        write_matrix(&path, &w, MatrixFormat::Binary).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(w.as_slice(), back.as_slice());
        assert_eq!(MatrixFormat::from_path(&path), MatrixFormat::Binary);
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let w = sample();
        write_matrix(&path, &w, MatrixFormat::Binary).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_matrix(&path),
            Err(CliError::BadMatrixFile { .. })
        ));
    }

    #[test]
    fn garbage_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        std::fs::write(&path, "1.0,2.0\n3.0,four\n").unwrap();
        assert!(matches!(
            read_matrix(&path),
            Err(CliError::BadMatrixFile { .. })
        ));
    }
}
