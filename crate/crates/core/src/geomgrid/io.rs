//! Binary grid files.
//!
//! Layout, all little-endian: magic `CGRD`, version `u32`, domain kind `u8`,
//! rank `u8`, one `u32` resolution per axis, matrix rows `u32`, cols `u32`,
//! then `(re, im)` pairs of `f64` for every entry, node-major in node order
//! and row-major within a matrix.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{make_domain, Codomain, DomainKind, SampledMap};
use crate::error::{Error, Result};
use crate::numkernel::ComplexMatrix;

pub const GRID_MAGIC: &[u8; 4] = b"CGRD";
pub const GRID_VERSION: u32 = 1;

pub fn encode_grid(map: &SampledMap) -> Vec<u8> {
    let g = map.domain();
    let (rows, cols) = map.shape();
    let mut out = Vec::with_capacity(16 + 4 * g.dim() + 16 * rows * cols * g.n_nodes());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    out.push(g.kind().code());
    out.push(g.dim() as u8);
    for &n in g.resolutions() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for m in map.values() {
        for i in 0..rows {
            for j in 0..cols {
                out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated grid file at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_grid(bytes: &[u8], codomain: Codomain) -> Result<SampledMap> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != GRID_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != GRID_VERSION {
        return Err(Error::Format(format!("unsupported grid version {version}")));
    }
    let code = r.u8()?;
    let kind = DomainKind::from_code(code).ok_or_else(|| Error::Format(format!("unknown domain kind {code}")))?;
    let rank = r.u8()? as usize;
    let res = (0..rank).map(|_| r.u32().map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
    let domain = make_domain(kind, &res)?;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Format("empty matrix shape".into()));
    }
    let expected = domain.n_nodes() * rows * cols * 16;
    if bytes.len() - r.pos != expected {
        return Err(Error::Format(format!("payload is {} bytes, expected {expected}", bytes.len() - r.pos)));
    }
    let mut values = Vec::with_capacity(domain.n_nodes());
    for _ in 0..domain.n_nodes() {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = Complex64::new(r.f64()?, r.f64()?);
            }
        }
        values.push(m);
    }
    SampledMap::new(domain, values, codomain)
}

pub fn write_grid_file(path: &Path, map: &SampledMap) -> Result<()> {
    fs::write(path, encode_grid(map))?;
    Ok(())
}

pub fn read_grid_file(path: &Path, codomain: Codomain) -> Result<SampledMap> {
    decode_grid(&fs::read(path)?, codomain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SampledMap {
        let g = make_domain(DomainKind::Cylinder, &[9, 8]).unwrap();
        SampledMap::from_fn(g, Codomain::Generic, |chart, x| {
            ComplexMatrix::from_fn(2, 3, |i, j| Complex64::new(x[0] + i as f64, x[1] * j as f64 + chart as f64))
        })
        .unwrap()
    }

    #[test]
    fn roundtrip_bytes() {
        let m = sample();
        let bytes = encode_grid(&m);
        assert_eq!(&bytes[..4], b"CGRD");
        assert_eq!(decode_grid(&bytes, Codomain::Generic).unwrap(), m);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = encode_grid(&sample());
        assert!(matches!(decode_grid(&bytes[..bytes.len() - 1], Codomain::Generic), Err(Error::Format(_))));
        bytes[0] = b'X';
        assert!(matches!(decode_grid(&bytes, Codomain::Generic), Err(Error::Format(_))));
    }

    #[test]
    fn roundtrip_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.cgrd");
        let m = sample();
        write_grid_file(&path, &m).unwrap();
        assert_eq!(read_grid_file(&path, Codomain::Generic).unwrap(), m);
    }
}
