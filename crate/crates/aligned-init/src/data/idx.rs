//! IDX image/label ingestion (the MNIST container format).
//!
//! Layout is big-endian: a u32 magic, one u32 per dimension, then the raw
//! u8 payload. Images use magic 0x00000803 (count, rows, cols), labels
//! 0x00000801 (count). Files whose first two bytes are the gzip signature
//! are decompressed transparently.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use super::{DataError, Dataset, Labels};
use crate::linalg::DenseMatrix;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>, DataError> {
    let raw = fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::with_capacity(raw.len() * 4);
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|source| DataError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32, DataError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(DataError::LengthMismatch {
            path: path.to_path_buf(),
            expected: end,
            got: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

struct IdxFile {
    dims: Vec<usize>,
    payload: Vec<u8>,
}

fn read_idx(path: &Path, expected_magic: u32, ndims: usize) -> Result<IdxFile, DataError> {
    let bytes = read_maybe_gzip(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != expected_magic {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            expected: expected_magic,
            got: magic,
        });
    }
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        dims.push(be_u32(&bytes, 4 + 4 * d, path)? as usize);
    }
    let header = 4 + 4 * ndims;
    let expected = dims.iter().product::<usize>();
    let payload = bytes[header.min(bytes.len())..].to_vec();
    if payload.len() != expected {
        return Err(DataError::LengthMismatch {
            path: path.to_path_buf(),
            expected: header + expected,
            got: bytes.len(),
        });
    }
    Ok(IdxFile { dims, payload })
}

/// Load an image/label IDX pair into a dataset. Pixels are scaled to
/// [0, 1] (byte value over 255) and each image is flattened row-major.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset, DataError> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = read_idx(images_path, IMAGE_MAGIC, 3)?;
    let labels = read_idx(labels_path, LABEL_MAGIC, 1)?;
    let (count, rows, cols) = (images.dims[0], images.dims[1], images.dims[2]);
    if labels.dims[0] != count {
        return Err(DataError::CountMismatch {
            images: count,
            labels: labels.dims[0],
        });
    }
    let pixels = rows * cols;
    let features = DenseMatrix::from_fn(count, pixels, |r, c| {
        images.payload[r * pixels + c] as f64 / 255.0
    });
    let ids: Vec<usize> = labels.payload.iter().map(|&b| b as usize).collect();
    let class_count = ids.iter().copied().max().map_or(0, |m| m + 1);
    Dataset::new(
        stem_name(images_path),
        features,
        Labels::Classes {
            ids,
            count: class_count,
        },
    )
}

fn stem_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Serialize a dataset's images back to IDX bytes (testing and dataset
/// preparation); values are clamped to [0,1] and quantized to bytes.
pub fn idx_image_bytes(features: &DenseMatrix, rows: usize, cols: usize) -> Vec<u8> {
    let count = features.rows();
    let mut out = Vec::with_capacity(16 + count * rows * cols);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(count as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for v in features.as_slice() {
        out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    out
}

/// Serialize class ids to IDX label bytes.
pub fn idx_label_bytes(ids: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + ids.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(ids.len() as u32).to_be_bytes());
    out.extend(ids.iter().map(|&id| id as u8));
    out
}

/// `(path)` if it exists, else `(path).gz` if that exists.
pub fn existing_variant(path: PathBuf) -> Option<PathBuf> {
    if path.exists() {
        return Some(path);
    }
    let mut gz = path.into_os_string();
    gz.push(".gz");
    let gz = PathBuf::from(gz);
    gz.exists().then_some(gz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::{write::GzEncoder, Compression};
    use std::io::Write as _;

    fn tiny_pair() -> (Vec<u8>, Vec<u8>) {
        // Two 2x2 images with pixels 0..=3 and 252..=255.
        let features = DenseMatrix::from_fn(2, 4, |r, c| {
            let byte = if r == 0 { c } else { 252 + c };
            byte as f64 / 255.0
        });
        (
            idx_image_bytes(&features, 2, 2),
            idx_label_bytes(&[7, 1]),
        )
    }

    #[test]
    fn round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = tiny_pair();
        let ip = dir.path().join("img-idx3-ubyte");
        let lp = dir.path().join("lab-idx1-ubyte");
        std::fs::write(&ip, img).unwrap();
        std::fs::write(&lp, lab).unwrap();
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.feature_count(), 4);
        assert_eq!(ds.features.get(0, 3), 3.0 / 255.0);
        assert_eq!(ds.features.get(1, 3), 1.0);
        assert_eq!(
            ds.labels,
            Labels::Classes {
                ids: vec![7, 1],
                count: 8
            }
        );
    }

    #[test]
    fn gzip_payloads_are_transparent() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = tiny_pair();
        let gz = |bytes: &[u8]| {
            let mut enc = GzEncoder::new(Vec::new(), Compression::default());
            enc.write_all(bytes).unwrap();
            enc.finish().unwrap()
        };
        let ip = dir.path().join("img-idx3-ubyte.gz");
        let lp = dir.path().join("lab-idx1-ubyte.gz");
        std::fs::write(&ip, gz(&img)).unwrap();
        std::fs::write(&lp, gz(&lab)).unwrap();
        let ds = load_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.features.get(1, 0), 252.0 / 255.0);
    }

    #[test]
    fn swapped_files_report_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = tiny_pair();
        let ip = dir.path().join("img");
        let lp = dir.path().join("lab");
        std::fs::write(&ip, img).unwrap();
        std::fs::write(&lp, lab).unwrap();
        match load_idx(&lp, &ip) {
            Err(DataError::BadMagic { expected, got, .. }) => {
                assert_eq!(expected, IMAGE_MAGIC);
                assert_eq!(got, LABEL_MAGIC);
            }
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_reports_length() {
        let dir = tempfile::tempdir().unwrap();
        let (mut img, lab) = tiny_pair();
        img.truncate(img.len() - 3);
        let ip = dir.path().join("img");
        let lp = dir.path().join("lab");
        std::fs::write(&ip, img).unwrap();
        std::fs::write(&lp, lab).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(DataError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn count_mismatch_between_images_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let (img, _) = tiny_pair();
        let lab = idx_label_bytes(&[7, 1, 2]);
        let ip = dir.path().join("img");
        let lp = dir.path().join("lab");
        std::fs::write(&ip, img).unwrap();
        std::fs::write(&lp, lab).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp),
            Err(DataError::CountMismatch {
                images: 2,
                labels: 3
            })
        ));
    }
}
