use rayon::prelude::*;

use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stride-1 2-D convolution (cross-correlation) with zero padding, dilation
/// and channel groups. Weights are laid out `(out, in / groups, k, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSpec<T = f32> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub padding: usize,
    pub dilation: usize,
    pub groups: usize,
    pub weight: Vec<T>,
    pub bias: Option<Vec<T>>,
}

impl<T: Scalar> ConvSpec<T> {
    /// Zero weights, no bias.
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, padding: usize, dilation: usize, groups: usize) -> Self {
        let n = out_channels * (in_channels / groups.max(1)) * kernel * kernel;
        ConvSpec { in_channels, out_channels, kernel, padding, dilation, groups, weight: vec![T::zero(); n], bias: None }
    }

    pub fn with_weights(mut self, f: impl FnMut(usize) -> T) -> Self {
        self.weight = (0..self.weight.len()).map(f).collect();
        self
    }

    pub fn with_bias(mut self, bias: Vec<T>) -> Self {
        self.bias = Some(bias);
        self
    }

    pub fn in_per_group(&self) -> usize {
        self.in_channels / self.groups
    }

    pub fn out_per_group(&self) -> usize {
        self.out_channels / self.groups
    }

    /// Weights of one output channel: `(in / groups) * k * k` values.
    pub fn filter(&self, oc: usize) -> &[T] {
        let n = self.in_per_group() * self.kernel * self.kernel;
        &self.weight[oc * n..(oc + 1) * n]
    }

    pub fn validate(&self) -> Result<()> {
        let s = self;
        if s.in_channels == 0 || s.out_channels == 0 || s.kernel == 0 || s.dilation == 0 || s.groups == 0 {
            return Err(Error::Shape(format!(
                "conv needs positive channels/kernel/dilation/groups, got in={} out={} k={} d={} g={}",
                s.in_channels, s.out_channels, s.kernel, s.dilation, s.groups
            )));
        }
        if s.in_channels % s.groups != 0 || s.out_channels % s.groups != 0 {
            return Err(Error::Shape(format!("groups {} must divide in {} and out {}", s.groups, s.in_channels, s.out_channels)));
        }
        let expected = s.out_channels * s.in_per_group() * s.kernel * s.kernel;
        if s.weight.len() != expected {
            return Err(Error::Shape(format!("weight has {} values, expected {expected} (out x in/g x k x k)", s.weight.len())));
        }
        if let Some(b) = &s.bias {
            if b.len() != s.out_channels {
                return Err(Error::Shape(format!("bias has {} values, expected {}", b.len(), s.out_channels)));
            }
        }
        if s.weight.iter().chain(s.bias.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Shape("conv parameters contain non-finite values".into()));
        }
        Ok(())
    }

    /// `h' = h + 2p - d(k - 1)` per spatial axis.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let span = self.dilation * (self.kernel - 1);
        let f = |n: usize| (n + 2 * self.padding).checked_sub(span).filter(|&v| v > 0);
        match (f(h), f(w)) {
            (Some(oh), Some(ow)) => Ok((oh, ow)),
            _ => Err(Error::Shape(format!(
                "input {h}x{w} too small for kernel {} dilation {} padding {}",
                self.kernel, self.dilation, self.padding
            ))),
        }
    }

    pub fn preserves_spatial(&self) -> bool {
        2 * self.padding == self.dilation * (self.kernel - 1)
    }

    fn check_input(&self, x: &Tensor4<T>) -> Result<(usize, usize)> {
        self.validate()?;
        if x.channels() != self.in_channels {
            return Err(Error::Shape(format!(
                "input {:?} has {} channels, conv expects {}",
                x.dims(),
                x.channels(),
                self.in_channels
            )));
        }
        self.output_hw(x.height(), x.width())
    }
}

/// Reference convolution: one accumulator per output element, summing over
/// input channel, kernel row, kernel column in that order and skipping
/// padded taps. Single-threaded.
pub fn conv2d_direct<T: Scalar>(x: &Tensor4<T>, spec: &ConvSpec<T>) -> Result<Tensor4<T>> {
    let (oh, ow) = spec.check_input(x)?;
    let [nb, _, h, w] = x.dims();
    let (k, d, p) = (spec.kernel as isize, spec.dilation as isize, spec.padding as isize);
    let (icg, ocg) = (spec.in_per_group(), spec.out_per_group());
    let mut out = Tensor4::zeros([nb, spec.out_channels, oh, ow]);
    for b in 0..nb {
        for oc in 0..spec.out_channels {
            let g = oc / ocg;
            let filt = spec.filter(oc);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = T::zero();
                    for ic in 0..icg {
                        let c = g * icg + ic;
                        for ky in 0..k {
                            let iy = oy as isize + ky * d - p;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let ix = ox as isize + kx * d - p;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let wv = filt[(ic * spec.kernel + ky as usize) * spec.kernel + kx as usize];
                                acc += wv * x.at(b, c, iy as usize, ix as usize);
                            }
                        }
                    }
                    if let Some(bias) = &spec.bias {
                        acc += bias[oc];
                    }
                    let i = out.index(b, oc, oy, ox);
                    out.data_mut()[i] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Columns per block in the patch-matrix product.
const COL_BLOCK: usize = 256;

/// Unrolls one group of one batch item into a `(icg * k * k) x (oh * ow)`
/// patch matrix; padded taps are zero.
fn im2col<T: Scalar>(x: &Tensor4<T>, spec: &ConvSpec<T>, b: usize, g: usize, oh: usize, ow: usize) -> Vec<T> {
    let [_, _, h, w] = x.dims();
    let k = spec.kernel;
    let (d, p) = (spec.dilation as isize, spec.padding as isize);
    let icg = spec.in_per_group();
    let n = oh * ow;
    let mut cols = vec![T::zero(); icg * k * k * n];
    for ic in 0..icg {
        let plane = x.plane(b, g * icg + ic);
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((ic * k + ky) * k + kx) * n..][..n];
                let dy = ky as isize * d - p;
                let dx = kx as isize * d - p;
                // valid output columns for this tap: 0 <= ox + dx < w
                let ox_lo = (-dx).clamp(0, ow as isize) as usize;
                let ox_hi = (w as isize - dx).clamp(0, ow as isize) as usize;
                for oy in 0..oh {
                    let iy = oy as isize + dy;
                    if iy < 0 || iy >= h as isize || ox_lo >= ox_hi {
                        continue;
                    }
                    let src = &plane[iy as usize * w..][..w];
                    let dst = &mut row[oy * ow..][..ow];
                    for ox in ox_lo..ox_hi {
                        dst[ox] = src[(ox as isize + dx) as usize];
                    }
                }
            }
        }
    }
    cols
}

/// Patch-matrix convolution: im2col per (batch, group), then a column-blocked
/// product with the filter bank, parallel over output channels.
///
/// Every output element accumulates its taps in the same order as
/// [`conv2d_direct`], so the two paths agree to rounding of padded zero taps,
/// and results do not depend on the thread count.
pub fn conv2d_fast<T: Scalar>(x: &Tensor4<T>, spec: &ConvSpec<T>) -> Result<Tensor4<T>> {
    let (oh, ow) = spec.check_input(x)?;
    let nb = x.batch();
    let n = oh * ow;
    let kk = spec.in_per_group() * spec.kernel * spec.kernel;
    let ocg = spec.out_per_group();
    let mut out = Tensor4::zeros([nb, spec.out_channels, oh, ow]);

    for b in 0..nb {
        let batch_out = &mut out.data_mut()[b * spec.out_channels * n..(b + 1) * spec.out_channels * n];
        for g in 0..spec.groups {
            let cols = im2col(x, spec, b, g, oh, ow);
            batch_out[g * ocg * n..(g + 1) * ocg * n].par_chunks_mut(n).enumerate().for_each(|(j, dst)| {
                let oc = g * ocg + j;
                let filt = spec.filter(oc);
                for start in (0..n).step_by(COL_BLOCK) {
                    let end = (start + COL_BLOCK).min(n);
                    let acc = &mut dst[start..end];
                    for (t, &wv) in filt.iter().enumerate().take(kk) {
                        let src = &cols[t * n + start..t * n + end];
                        for (a, &s) in acc.iter_mut().zip(src) {
                            *a += wv * s;
                        }
                    }
                }
                if let Some(bias) = &spec.bias {
                    let bv = bias[oc];
                    dst.iter_mut().for_each(|a| *a += bv);
                }
            });
        }
    }
    Ok(out)
}

/// Which implementation the block-level code calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvPath {
    Direct,
    #[default]
    Fast,
}

impl ConvPath {
    pub fn run<T: Scalar>(self, x: &Tensor4<T>, spec: &ConvSpec<T>) -> Result<Tensor4<T>> {
        match self {
            ConvPath::Direct => conv2d_direct(x, spec),
            ConvPath::Fast => conv2d_fast(x, spec),
        }
    }
}
