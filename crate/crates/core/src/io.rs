//! File output helpers shared by several modules: PGM previews and checksums.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::Result;

/// Encodes `data` (indexed `[x, y]`) as binary PGM with the maximum mapped to
/// 255. Row 0 of the image is the largest `y`, so north is up.
pub fn pgm_bytes(data: &Array2<f64>) -> Vec<u8> {
    let (nx, ny) = data.dim();
    let max = data
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    out.reserve(nx * ny);
    for row in 0..ny {
        let j = ny - 1 - row;
        for i in 0..nx {
            let v = data[(i, j)];
            let level = if max > 0.0 && v.is_finite() {
                (v.max(0.0) / max * 255.0).round().min(255.0) as u8
            } else {
                0
            };
            out.push(level);
        }
    }
    out
}

pub fn write_pgm(path: &Path, data: &Array2<f64>) -> Result<()> {
    fs::write(path, pgm_bytes(data))?;
    Ok(())
}

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Parses a float with a descriptive error.
pub(crate) fn parse_f64(path: &Path, field: &str, text: &str) -> Result<f64> {
    text.trim().parse().map_err(|_| crate::Error::Malformed {
        path: path.to_path_buf(),
        reason: format!("{field}: cannot parse {text:?} as a number"),
    })
}
