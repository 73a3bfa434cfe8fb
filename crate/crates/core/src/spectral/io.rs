//! The `VF3` binary field format.
//!
//! Layout, all little endian: the magic bytes `VF3F`, a `u32` version (1), a
//! `u32` grid size `n`, then `3 n^3` `f64` values, component-major with `x`
//! fastest. Metadata may sit next to the file as `<file>.json`.

use super::field::VectorField3;
use super::grid::Grid;
use crate::error::{Error, Result};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"VF3F";
const VERSION: u32 = 1;

pub fn encode(u: &VectorField3) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 24 * u.grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(u.grid.n() as u32).to_le_bytes());
    for c in &u.comps {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<VectorField3> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing VF3F magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let grid = Grid::new(n)?;
    let expect = 12 + 24 * grid.len();
    if bytes.len() != expect {
        return Err(Error::Format(format!("expected {expect} bytes, found {}", bytes.len())));
    }
    let body = &bytes[12..];
    let len = grid.len();
    let comp = |c: usize| -> Vec<f64> {
        body[8 * c * len..8 * (c + 1) * len]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect()
    };
    VectorField3::from_components(grid, [comp(0), comp(1), comp(2)])
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_vf3(path: &Path, u: &VectorField3, meta: Option<&serde_json::Value>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(u))?;
    if let Some(meta) = meta {
        fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
    }
    Ok(())
}

pub fn read_vf3(path: &Path) -> Result<VectorField3> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn read_sidecar(path: &Path) -> Result<Option<serde_json::Value>> {
    let p = sidecar_path(path);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::new(8).unwrap();
        let u = VectorField3::from_fn(g, |x| [x[0].exp(), -x[1], (x[2] * 7.0).sin()]);
        let back = decode(&encode(&u)).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn rejects_truncated_input() {
        let g = Grid::new(8).unwrap();
        let bytes = encode(&VectorField3::zeros(g));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"NOPE").is_err());
    }
}
