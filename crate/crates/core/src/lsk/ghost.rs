use super::conv::{ConvPath, ConvSpec};
use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ghost convolution: a pointwise primary conv makes half the output
/// channels, a cheap depthwise 3x3 conv over that half makes the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostSpec<T = f32> {
    pub primary: ConvSpec<T>,
    pub cheap: ConvSpec<T>,
}

impl<T: Scalar> GhostSpec<T> {
    /// Zero weights for `in_channels -> out_channels`; odd output counts are rejected.
    pub fn zeros(in_channels: usize, out_channels: usize) -> Result<Self> {
        if out_channels == 0 || out_channels % 2 != 0 {
            return Err(Error::Shape(format!("ghost conv output channels must be even and positive, got {out_channels}")));
        }
        let half = out_channels / 2;
        Ok(GhostSpec { primary: ConvSpec::zeros(in_channels, half, 1, 0, 1, 1), cheap: ConvSpec::zeros(half, half, 3, 1, 1, half) })
    }

    pub fn in_channels(&self) -> usize {
        self.primary.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.primary.out_channels * 2
    }

    pub fn validate(&self) -> Result<()> {
        self.primary.validate()?;
        self.cheap.validate()?;
        let half = self.primary.out_channels;
        let c = &self.cheap;
        if c.in_channels != half || c.out_channels != half {
            return Err(Error::Shape(format!(
                "ghost cheap conv maps {} -> {} channels, primary produces {half}",
                c.in_channels, c.out_channels
            )));
        }
        if !self.primary.preserves_spatial() || !c.preserves_spatial() {
            return Err(Error::Shape("ghost convs must preserve spatial size".into()));
        }
        Ok(())
    }
}

pub fn ghost_conv_with<T: Scalar>(x: &Tensor4<T>, spec: &GhostSpec<T>, path: ConvPath) -> Result<Tensor4<T>> {
    spec.validate()?;
    let primary = path.run(x, &spec.primary)?;
    let cheap = path.run(&primary, &spec.cheap)?;
    primary.concat_channels(&cheap)
}

pub fn ghost_conv<T: Scalar>(x: &Tensor4<T>, spec: &GhostSpec<T>) -> Result<Tensor4<T>> {
    ghost_conv_with(x, spec, ConvPath::Fast)
}
