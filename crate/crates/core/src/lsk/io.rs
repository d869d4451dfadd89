//! Little-endian binary files for tensors and block parameters.
//!
//! Tensor: `b"ADKT"`, `u32` version (1), `u32` rank (4), four `u32` dims,
//! then `f32` values in row-major order.
//!
//! Parameters: `b"ADKP"`, `u32` version (1), `u32` channels, then eight conv
//! records in the order of [`LskParams::convs`]. Each record is seven `u32`
//! (in, out, kernel, padding, dilation, groups, has_bias), the `f32` weights
//! and, when `has_bias` is 1, `out` `f32` biases.

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use super::block::LskParams;
use super::conv::ConvSpec;
use super::ghost::GhostSpec;
use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const TENSOR_MAGIC: &[u8; 4] = b"ADKT";
const PARAMS_MAGIC: &[u8; 4] = b"ADKP";
const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32s<T: Scalar>(out: &mut Vec<u8>, vals: &[T]) {
    for v in vals {
        out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Shape(format!("truncated file: need {n} bytes at offset {}, have {}", self.pos, self.buf.len() - self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn f32s<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::Shape("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(4).map(|c| T::lit(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)).collect())
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != want {
            return Err(Error::Shape(format!("bad magic {got:?}, expected {:?}", std::str::from_utf8(want).unwrap_or("?"))));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Shape(format!("unsupported format version {v}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Shape(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn encode_tensor<T: Scalar>(t: &Tensor4<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + t.data().len() * 4);
    out.extend_from_slice(TENSOR_MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, 4);
    for d in t.dims() {
        put_u32(&mut out, d as u32);
    }
    put_f32s(&mut out, t.data());
    out
}

pub fn decode_tensor<T: Scalar>(bytes: &[u8]) -> Result<Tensor4<T>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.magic(TENSOR_MAGIC)?;
    let rank = r.u32()?;
    if rank != 4 {
        return Err(Error::Shape(format!("tensor rank {rank}, expected 4")));
    }
    let dims = [r.usize()?, r.usize()?, r.usize()?, r.usize()?];
    let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| Error::Shape("dims overflow".into()))?;
    let data = r.f32s(n)?;
    r.finish()?;
    Tensor4::from_vec(dims, data)
}

fn encode_conv<T: Scalar>(out: &mut Vec<u8>, s: &ConvSpec<T>) {
    for v in [s.in_channels, s.out_channels, s.kernel, s.padding, s.dilation, s.groups, usize::from(s.bias.is_some())] {
        put_u32(out, v as u32);
    }
    put_f32s(out, &s.weight);
    if let Some(b) = &s.bias {
        put_f32s(out, b);
    }
}

fn decode_conv<T: Scalar>(r: &mut Reader<'_>) -> Result<ConvSpec<T>> {
    let (in_channels, out_channels, kernel) = (r.usize()?, r.usize()?, r.usize()?);
    let (padding, dilation, groups, has_bias) = (r.usize()?, r.usize()?, r.usize()?, r.u32()?);
    if groups == 0 || in_channels % groups != 0 {
        return Err(Error::Shape(format!("conv record: groups {groups} does not divide {in_channels} input channels")));
    }
    let n = out_channels * (in_channels / groups) * kernel * kernel;
    let weight = r.f32s(n)?;
    let bias = if has_bias == 1 { Some(r.f32s(out_channels)?) } else { None };
    let spec = ConvSpec { in_channels, out_channels, kernel, padding, dilation, groups, weight, bias };
    spec.validate()?;
    Ok(spec)
}

pub fn encode_params<T: Scalar>(p: &LskParams<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PARAMS_MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, p.channels as u32);
    for s in p.convs() {
        encode_conv(&mut out, s);
    }
    out
}

pub fn decode_params<T: Scalar>(bytes: &[u8]) -> Result<LskParams<T>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    r.magic(PARAMS_MAGIC)?;
    let channels = r.usize()?;
    let mut next = || decode_conv::<T>(&mut r);
    let branch1 = next()?;
    let branch2 = next()?;
    let ghost1 = GhostSpec { primary: next()?, cheap: next()? };
    let ghost2 = GhostSpec { primary: next()?, cheap: next()? };
    let attn = next()?;
    let fusion = next()?;
    r.finish()?;
    let p = LskParams { channels, branch1, branch2, ghost1, ghost2, attn, fusion };
    p.validate()?;
    Ok(p)
}

/// Hex SHA-256 of the encoded tensor.
pub fn tensor_checksum<T: Scalar>(t: &Tensor4<T>) -> String {
    let digest = Sha256::digest(encode_tensor(t));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_tensor<T: Scalar>(w: &mut impl Write, t: &Tensor4<T>) -> Result<()> {
    w.write_all(&encode_tensor(t))?;
    Ok(())
}

pub fn read_tensor<T: Scalar>(r: &mut impl Read) -> Result<Tensor4<T>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_tensor(&buf)
}
