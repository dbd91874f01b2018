//! Binary field files.
//!
//! Layout: magic `BSVF`, little-endian `u32` version (1), `u32` n, `f64` L,
//! then `n * n` little-endian `f64` values in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{Grid2D, RealField};

pub const MAGIC: &[u8; 4] = b"BSVF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

pub fn encode(field: &RealField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * grid.points());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.length().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<RealField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("BSVF: truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("BSVF: bad magic".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(Error::Format(format!("BSVF: unsupported version {version}")));
    }
    let n = word(8) as usize;
    let length = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let grid = Grid2D::new(n, length)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.points() {
        return Err(Error::Format(format!(
            "BSVF: expected {} value bytes, found {}",
            8 * grid.points(),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    RealField::new(grid, values)
}

pub fn write(path: &Path, field: &RealField) -> Result<()> {
    fs::write(path, encode(field)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read(path: &Path) -> Result<RealField> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = Grid2D::new(8, 2.5).unwrap();
        let bytes = encode(&RealField::zeros(g));
        assert_eq!(&bytes[..4], b"BSVF");
        assert_eq!(bytes[4..8], [1, 0, 0, 0]);
        assert_eq!(bytes[8..12], [8, 0, 0, 0]);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 2.5);
        assert_eq!(bytes.len(), 20 + 8 * 64);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let g = Grid2D::new(8, 1.0).unwrap();
        let mut bytes = encode(&RealField::zeros(g));
        bytes[0] = b'X';
        assert!(decode(&bytes).is_err());
        let mut bytes = encode(&RealField::zeros(g));
        bytes[4] = 2;
        assert!(matches!(decode(&bytes), Err(Error::Format(m)) if m.contains("version")));
        let bytes = encode(&RealField::zeros(g));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(values in prop::collection::vec(-1e6f64..1e6, 64), length in 0.1f64..1e3) {
            let g = Grid2D::new(8, length).unwrap();
            let f = RealField::new(g, values).unwrap();
            prop_assert_eq!(decode(&encode(&f)).unwrap(), f);
        }
    }
}
