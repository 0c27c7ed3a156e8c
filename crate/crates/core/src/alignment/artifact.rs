//! Binary map artifact.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic "OALN" | version u32 | kind u8 | d u64 | k u64
//! provenance: len u32, UTF-8 bytes
//! beta: flag u8, f64
//! payload f64s
//!   procrustes: U (d×d), Σ (d), V (d×d)
//!   lsq:        W (d×d)
//!   cca:        src_mean (d), tgt_mean (d), src_transform (d×k),
//!               tgt_transform (d×k), correlations (d)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CcaMap, FittedMap, LinearMap, OrthogonalMap};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

const MAGIC: &[u8; 4] = b"OALN";
pub const ARTIFACT_VERSION: u32 = 1;

/// A fitted map with the metadata needed to reuse it.
#[derive(Debug, Clone, PartialEq)]
pub struct MapArtifact {
    pub map: FittedMap,
    /// Free-form description of the training dictionary.
    pub provenance: String,
    /// Inverse temperature fitted alongside the map, if any.
    pub beta: Option<f64>,
}

fn kind_byte(map: &FittedMap) -> u8 {
    match map {
        FittedMap::Orthogonal(_) => 0,
        FittedMap::Linear(_) => 1,
        FittedMap::Cca(_) => 2,
    }
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn encode(a: &MapArtifact) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
    out.push(kind_byte(&a.map));
    out.extend_from_slice(&(a.map.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(a.map.rank() as u64).to_le_bytes());
    out.extend_from_slice(&(a.provenance.len() as u32).to_le_bytes());
    out.extend_from_slice(a.provenance.as_bytes());
    out.push(a.beta.is_some() as u8);
    out.extend_from_slice(&a.beta.unwrap_or(0.0).to_le_bytes());
    match &a.map {
        FittedMap::Orthogonal(m) => {
            put_f64s(&mut out, m.u.as_slice());
            put_f64s(&mut out, &m.sigma);
            put_f64s(&mut out, m.v.as_slice());
        }
        FittedMap::Linear(m) => put_f64s(&mut out, m.w.as_slice()),
        FittedMap::Cca(m) => {
            put_f64s(&mut out, &m.src_mean);
            put_f64s(&mut out, &m.tgt_mean);
            put_f64s(&mut out, m.src_transform.as_slice());
            put_f64s(&mut out, m.tgt_transform.as_slice());
            put_f64s(&mut out, &m.correlations);
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Data {
            path: self.path.to_path_buf(),
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(self.fail(format!("truncated map artifact at byte {}", self.pos))),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| self.fail(format!("size {v} does not fit in memory")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| self.fail("array size overflows"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DenseMatrix> {
        let n = rows.checked_mul(cols).ok_or_else(|| self.fail("array size overflows"))?;
        let data = self.f64s(n)?;
        DenseMatrix::new(rows, cols, data).map_err(|e| self.fail(e.to_string()))
    }
}

fn decode(bytes: &[u8], path: &Path) -> Result<MapArtifact> {
    let mut c = Cursor { bytes, pos: 0, path };
    if c.take(4)? != MAGIC {
        return Err(c.fail("not a map artifact (bad magic)"));
    }
    let version = c.u32()?;
    if version != ARTIFACT_VERSION {
        return Err(c.fail(format!("unsupported artifact version {version}")));
    }
    let kind = c.u8()?;
    let d = c.u64()?;
    let k = c.u64()?;
    let plen = c.u32()? as usize;
    let provenance = String::from_utf8(c.take(plen)?.to_vec()).map_err(|_| c.fail("provenance is not UTF-8"))?;
    let has_beta = c.u8()? != 0;
    let beta = c.f64()?;
    let map = match kind {
        0 => {
            let u = c.matrix(d, d)?;
            let sigma = c.f64s(d)?;
            let v = c.matrix(d, d)?;
            FittedMap::Orthogonal(OrthogonalMap::from_parts(u, sigma, v, k).map_err(|e| c.fail(e.to_string()))?)
        }
        1 => FittedMap::Linear(LinearMap::new(c.matrix(d, d)?)?),
        2 => FittedMap::Cca(CcaMap {
            src_mean: c.f64s(d)?,
            tgt_mean: c.f64s(d)?,
            src_transform: c.matrix(d, k)?,
            tgt_transform: c.matrix(d, k)?,
            correlations: c.f64s(d)?,
        }),
        other => return Err(c.fail(format!("unknown map kind {other}"))),
    };
    if c.pos != bytes.len() {
        return Err(c.fail(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(MapArtifact {
        map,
        provenance,
        beta: has_beta.then_some(beta),
    })
}

pub fn save_map(a: &MapArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode(a)).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_map(path: impl AsRef<Path>) -> Result<MapArtifact> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file).read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
