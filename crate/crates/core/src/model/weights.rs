//! `SUWN` tensor container.
//!
//! Little-endian layout, no padding between records:
//!
//! ```text
//! "SUWN" | version: u32 = 1 | tensor_count: u32
//! per tensor: name_len: u16 | name (UTF-8) | ndim: u8 | dims: u32 × ndim | data: f32 × Π dims
//! ```

use std::collections::HashSet;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SUWN";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct TensorRecord {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl TensorRecord {
    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }
}

pub fn write_tensors(records: &[TensorRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&u32::try_from(records.len()).map_err(too_many)?.to_le_bytes());
    for r in records {
        if r.data.len() != r.element_count() {
            return Err(Error::InvalidArgument(format!(
                "tensor {:?}: {} elements for dims {:?}",
                r.name,
                r.data.len(),
                r.dims
            )));
        }
        let name = r.name.as_bytes();
        out.extend_from_slice(&u16::try_from(name.len()).map_err(too_many)?.to_le_bytes());
        out.extend_from_slice(name);
        out.push(u8::try_from(r.dims.len()).map_err(too_many)?);
        for &d in &r.dims {
            out.extend_from_slice(&u32::try_from(d).map_err(too_many)?.to_le_bytes());
        }
        for &x in &r.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

fn too_many(_: std::num::TryFromIntError) -> Error {
    Error::InvalidArgument("value does not fit the weights file header field".into())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: self.bytes.len(),
                what,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_tensors(bytes: &[u8]) -> Result<Vec<TensorRecord>> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            found: magic.try_into().unwrap(),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let count = r.u32("tensor count")? as usize;
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let start = r.pos;
        let name_len = r.u16("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|e| Error::MalformedWeights {
                offset: start + 2,
                reason: format!("tensor name is not UTF-8: {e}"),
            })?
            .to_owned();
        if !seen.insert(name.clone()) {
            return Err(Error::DuplicateName(name));
        }
        let ndim = r.u8("ndim")? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(r.u32("dims")? as usize);
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::MalformedWeights {
                offset: start,
                reason: format!("tensor {name:?} dims {dims:?} overflow"),
            })?;
        let data = r
            .take(n, "tensor data")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        records.push(TensorRecord { name, dims, data });
    }
    if r.pos != bytes.len() {
        return Err(Error::MalformedWeights {
            offset: r.pos,
            reason: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    Ok(records)
}

/// Total number of stored scalars, computed from the file alone.
pub fn element_census(bytes: &[u8]) -> Result<usize> {
    Ok(read_tensors(bytes)?.iter().map(|r| r.data.len()).sum())
}
