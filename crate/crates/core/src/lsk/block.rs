use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conv::{ConvPath, ConvSpec};
use super::ghost::{ghost_conv_with, GhostSpec};
use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-pixel mean and max over channels, each `b x 1 x h x w`.
pub fn channel_pool<T: Scalar>(x: &Tensor4<T>) -> (Tensor4<T>, Tensor4<T>) {
    let [b, c, h, w] = x.dims();
    let n = h * w;
    let mut mean = Tensor4::zeros([b, 1, h, w]);
    let mut max = Tensor4::filled([b, 1, h, w], T::neg_infinity());
    let inv = T::one() / T::from_usize_lossy(c);
    for i in 0..b {
        for ch in 0..c {
            let plane = x.plane(i, ch);
            for (m, &v) in mean.data_mut()[i * n..(i + 1) * n].iter_mut().zip(plane) {
                *m += v;
            }
            for (m, &v) in max.data_mut()[i * n..(i + 1) * n].iter_mut().zip(plane) {
                *m = m.max(v);
            }
        }
    }
    (mean.map(|s| s * inv), max)
}

pub fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

/// Weights of the large selective kernel block for `channels` input channels.
///
/// Canonical shapes, with `C = channels`:
///
/// | conv      | channels     | k | p | d | groups |
/// |-----------|--------------|---|---|---|--------|
/// | `branch1` | C -> C       | 5 | 2 | 1 | C      |
/// | `branch2` | C -> C       | 7 | 9 | 3 | C      |
/// | `ghost1`  | C -> C/2     | 1 (+ 3x3 cheap) | | | |
/// | `ghost2`  | C -> C/2     | 1 (+ 3x3 cheap) | | | |
/// | `attn`    | 2 -> 2       | 7 | 3 | 1 | 1      |
/// | `fusion`  | C/2 -> C     | 1 | 0 | 1 | 1      |
#[derive(Debug, Clone, PartialEq)]
pub struct LskParams<T = f32> {
    pub channels: usize,
    pub branch1: ConvSpec<T>,
    pub branch2: ConvSpec<T>,
    pub ghost1: GhostSpec<T>,
    pub ghost2: GhostSpec<T>,
    pub attn: ConvSpec<T>,
    pub fusion: ConvSpec<T>,
}

impl<T: Scalar> LskParams<T> {
    /// All-zero weights with the canonical shapes. `channels` must be a
    /// positive multiple of 4 so that each ghost half is even.
    pub fn zeros(channels: usize) -> Result<Self> {
        if channels == 0 || channels % 4 != 0 {
            return Err(Error::Shape(format!("block channels must be a positive multiple of 4, got {channels}")));
        }
        let c = channels;
        Ok(LskParams {
            channels: c,
            branch1: ConvSpec::zeros(c, c, 5, 2, 1, c),
            branch2: ConvSpec::zeros(c, c, 7, 9, 3, c),
            ghost1: GhostSpec::zeros(c, c / 2)?,
            ghost2: GhostSpec::zeros(c, c / 2)?,
            attn: ConvSpec::zeros(2, 2, 7, 3, 1, 1),
            fusion: ConvSpec::zeros(c / 2, c, 1, 0, 1, 1),
        })
    }

    /// Uniform weights in `[-scale, scale]`, no biases.
    pub fn random(channels: usize, seed: u64, scale: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(channels)?;
        for spec in p.convs_mut() {
            spec.weight.iter_mut().for_each(|w| *w = T::lit(rng.random_range(-scale..=scale)));
        }
        Ok(p)
    }

    /// Fixed serialization order.
    pub fn convs(&self) -> [&ConvSpec<T>; 8] {
        [
            &self.branch1,
            &self.branch2,
            &self.ghost1.primary,
            &self.ghost1.cheap,
            &self.ghost2.primary,
            &self.ghost2.cheap,
            &self.attn,
            &self.fusion,
        ]
    }

    pub fn convs_mut(&mut self) -> [&mut ConvSpec<T>; 8] {
        [
            &mut self.branch1,
            &mut self.branch2,
            &mut self.ghost1.primary,
            &mut self.ghost1.cheap,
            &mut self.ghost2.primary,
            &mut self.ghost2.cheap,
            &mut self.attn,
            &mut self.fusion,
        ]
    }

    /// Checks the channel chain `C -> C -> C/2 (+) C/2 -> 2 -> 2 -> C/2 -> C`
    /// and that every conv keeps the spatial size.
    pub fn validate(&self) -> Result<()> {
        let c = self.channels;
        if c == 0 || c % 4 != 0 {
            return Err(Error::Shape(format!("block channels must be a positive multiple of 4, got {c}")));
        }
        let half = c / 2;
        self.ghost1.validate()?;
        self.ghost2.validate()?;
        let expect = |name: &str, s: &ConvSpec<T>, i: usize, o: usize| -> Result<()> {
            s.validate().map_err(|e| Error::Shape(format!("{name}: {e}")))?;
            if (s.in_channels, s.out_channels) != (i, o) {
                return Err(Error::Shape(format!("{name} maps {} -> {} channels, expected {i} -> {o}", s.in_channels, s.out_channels)));
            }
            if !s.preserves_spatial() {
                return Err(Error::Shape(format!(
                    "{name} changes spatial size (k={}, p={}, d={}): need 2p = d(k-1)",
                    s.kernel, s.padding, s.dilation
                )));
            }
            Ok(())
        };
        expect("branch1", &self.branch1, c, c)?;
        expect("branch2", &self.branch2, c, c)?;
        expect("ghost1", &self.ghost1.primary, c, half / 2)?;
        expect("ghost2", &self.ghost2.primary, c, half / 2)?;
        expect("attn", &self.attn, 2, 2)?;
        expect("fusion", &self.fusion, half, c)?;
        Ok(())
    }
}

/// Intermediate maps of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LskTrace<T = f32> {
    /// Shallow branch (5x5 depthwise).
    pub m1: Tensor4<T>,
    /// Deep branch (7x7 dilated depthwise on `m1`).
    pub m2: Tensor4<T>,
    pub m3: Tensor4<T>,
    pub m4: Tensor4<T>,
    /// Channel mean and max of `m3 (+) m4`, concatenated: 2 channels.
    pub m8: Tensor4<T>,
    pub m9: Tensor4<T>,
    /// Sigmoid of `m9`; channel 0 weights `m3`, channel 1 weights `m4`.
    pub attention: Tensor4<T>,
    pub m14: Tensor4<T>,
    pub output: Tensor4<T>,
}

pub fn lsk_forward_traced<T: Scalar>(x: &Tensor4<T>, params: &LskParams<T>, path: ConvPath) -> Result<LskTrace<T>> {
    params.validate()?;
    if x.channels() != params.channels {
        return Err(Error::Shape(format!("input {:?} has {} channels, block expects {}", x.dims(), x.channels(), params.channels)));
    }
    let half = params.channels / 2;

    let m1 = path.run(x, &params.branch1)?;
    let m2 = path.run(&m1, &params.branch2)?;
    let m3 = ghost_conv_with(&m1, &params.ghost1, path)?;
    let m4 = ghost_conv_with(&m2, &params.ghost2, path)?;
    let m5 = m3.concat_channels(&m4)?;
    let (m6, m7) = channel_pool(&m5);
    let m8 = m6.concat_channels(&m7)?;
    let m9 = path.run(&m8, &params.attn)?;
    let attention = m9.map(sigmoid);
    let m10 = attention.slice_channels(0, 1)?.broadcast_channels(half)?;
    let m11 = attention.slice_channels(1, 1)?.broadcast_channels(half)?;
    let m12 = m3.zip_with(&m10, |a, b| a * b)?;
    let m13 = m4.zip_with(&m11, |a, b| a * b)?;
    let m14 = path.run(&m12.zip_with(&m13, |a, b| a + b)?, &params.fusion)?;
    let output = x.zip_with(&m14, |a, b| a * b)?;
    Ok(LskTrace { m1, m2, m3, m4, m8, m9, attention, m14, output })
}

/// Forward pass of the block; output has the input's shape.
pub fn lsk_forward<T: Scalar>(x: &Tensor4<T>, params: &LskParams<T>) -> Result<Tensor4<T>> {
    Ok(lsk_forward_traced(x, params, ConvPath::Fast)?.output)
}
