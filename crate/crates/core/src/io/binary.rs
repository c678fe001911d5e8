//! Little-endian binary containers for dense float arrays.
//!
//! Every file starts with a 4-byte magic and a `u32` version, followed by
//! `u32` dimensions and `f32` payload values.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grounding::GroundingParams;
use crate::milhead::MilParams;
use crate::numerics::Grid3D;

pub const FORMAT_VERSION: u32 = 1;
pub const FMAP_MAGIC: &[u8; 4] = b"FMAP";
pub const GPAR_MAGIC: &[u8; 4] = b"GPAR";
pub const MPAR_MAGIC: &[u8; 4] = b"MPAR";

struct Writer(Vec<u8>);

impl Writer {
    fn new(magic: &[u8; 4], dims: &[usize]) -> Result<Self> {
        let mut w = Writer(magic.to_vec());
        w.u32(FORMAT_VERSION);
        for &d in dims {
            let d = u32::try_from(d).map_err(|_| Error::Shape(format!("dimension {d} exceeds u32")))?;
            w.u32(d);
        }
        Ok(w)
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn floats(&mut self, values: &[f64]) {
        for &v in values {
            self.0.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn open(bytes: &'a [u8], path: &'a Path, magic: &[u8; 4], ndims: usize) -> Result<(Self, Vec<usize>)> {
        let mut r = Reader { bytes, pos: 0, path };
        let head = r.take(4)?;
        if head != magic {
            return Err(r.fail(format!(
                "expected magic {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(head)
            )));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(r.fail(format!("unsupported version {version}")));
        }
        let dims = (0..ndims).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_>>()?;
        Ok((r, dims))
    }

    fn fail(&self, reason: String) -> Error {
        Error::format(self.path, reason)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(self.fail(format!("truncated at byte {}", self.bytes.len())));
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n.checked_mul(4).ok_or_else(|| self.fail("payload size overflows".into()))?;
        let raw = self.take(len)?;
        let values: Vec<f64> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(self.fail(format!("non-finite value at index {i}")));
        }
        Ok(values)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.fail(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_fmap(fmap: &Grid3D) -> Result<Vec<u8>> {
    let mut w = Writer::new(FMAP_MAGIC, &[fmap.rows(), fmap.cols(), fmap.channels()])?;
    w.floats(fmap.data());
    Ok(w.0)
}

pub fn decode_fmap(bytes: &[u8], path: &Path) -> Result<Grid3D> {
    let (mut r, dims) = Reader::open(bytes, path, FMAP_MAGIC, 3)?;
    let data = r.floats(dims[0] * dims[1] * dims[2])?;
    r.finish()?;
    Grid3D::new(dims[0], dims[1], dims[2], data).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_fmap(path: &Path, fmap: &Grid3D) -> Result<()> {
    write_bytes(path, &encode_fmap(fmap)?)
}

pub fn read_fmap(path: &Path) -> Result<Grid3D> {
    decode_fmap(&read_bytes(path)?, path)
}

/// Header `|V|, d, e`, then the seven tensors in checkpoint order.
pub fn encode_grounding(params: &GroundingParams) -> Result<Vec<u8>> {
    params.validate()?;
    let mut w = Writer::new(
        GPAR_MAGIC,
        &[params.vocab_size(), params.feat_dim(), params.embed_dim()],
    )?;
    for t in params.tensors() {
        w.floats(t);
    }
    Ok(w.0)
}

pub fn decode_grounding(bytes: &[u8], path: &Path) -> Result<GroundingParams> {
    let (mut r, dims) = Reader::open(bytes, path, GPAR_MAGIC, 3)?;
    let mut params = GroundingParams::zeros(dims[0], dims[1], dims[2]);
    for t in params.tensors_mut() {
        let values = r.floats(t.len())?;
        t.copy_from_slice(&values);
    }
    r.finish()?;
    Ok(params)
}

pub fn write_grounding(path: &Path, params: &GroundingParams) -> Result<()> {
    write_bytes(path, &encode_grounding(params)?)
}

pub fn read_grounding(path: &Path) -> Result<GroundingParams> {
    decode_grounding(&read_bytes(path)?, path)
}

/// Header `C, d`, then the `C x d` weights and `C` biases.
pub fn encode_mil(params: &MilParams) -> Result<Vec<u8>> {
    let mut w = Writer::new(MPAR_MAGIC, &[params.classes(), params.feat_dim()])?;
    w.floats(&params.weights);
    w.floats(&params.bias);
    Ok(w.0)
}

pub fn decode_mil(bytes: &[u8], path: &Path) -> Result<MilParams> {
    let (mut r, dims) = Reader::open(bytes, path, MPAR_MAGIC, 2)?;
    let weights = r.floats(dims[0] * dims[1])?;
    let bias = r.floats(dims[0])?;
    r.finish()?;
    MilParams::from_parts(dims[0], dims[1], weights, bias)
}

pub fn write_mil(path: &Path, params: &MilParams) -> Result<()> {
    write_bytes(path, &encode_mil(params)?)
}

pub fn read_mil(path: &Path) -> Result<MilParams> {
    decode_mil(&read_bytes(path)?, path)
}
