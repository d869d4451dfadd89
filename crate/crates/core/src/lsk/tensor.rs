use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense `(batch, channels, height, width)` array, row-major with width innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T = f32> {
    dims: [usize; 4],
    data: Vec<T>,
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Self::filled(dims, T::zero())
    }

    pub fn filled(dims: [usize; 4], value: T) -> Self {
        Tensor4 { dims, data: vec![value; dims.iter().product()] }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<T>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Shape(format!("tensor dims {dims:?} must be positive")));
        }
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(Error::Shape(format!("tensor {dims:?} needs {n} values, got {}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("tensor contains non-finite values".into()));
        }
        Ok(Tensor4 { dims, data })
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut([usize; 4]) -> T) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for b in 0..dims[0] {
            for c in 0..dims[1] {
                for y in 0..dims[2] {
                    for x in 0..dims[3] {
                        data.push(f([b, c, y, x]));
                    }
                }
            }
        }
        Tensor4 { dims, data }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    pub fn channels(&self) -> usize {
        self.dims[1]
    }

    pub fn height(&self) -> usize {
        self.dims[2]
    }

    pub fn width(&self) -> usize {
        self.dims[3]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        ((b * self.dims[1] + c) * self.dims[2] + y) * self.dims[3] + x
    }

    #[inline]
    pub fn at(&self, b: usize, c: usize, y: usize, x: usize) -> T {
        self.data[self.index(b, c, y, x)]
    }

    /// Contiguous `h * w` plane of one channel.
    pub fn plane(&self, b: usize, c: usize) -> &[T] {
        let n = self.dims[2] * self.dims[3];
        let o = self.index(b, c, 0, 0);
        &self.data[o..o + n]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor4 { dims: self.dims, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!("element-wise op on {:?} and {:?}", self.dims, other.dims)));
        }
        Ok(Tensor4 { dims: self.dims, data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() })
    }

    /// Concatenation along channels.
    pub fn concat_channels(&self, other: &Self) -> Result<Self> {
        let [b, c1, h, w] = self.dims;
        let [b2, c2, h2, w2] = other.dims;
        if (b, h, w) != (b2, h2, w2) {
            return Err(Error::Shape(format!("channel concat of {:?} and {:?}", self.dims, other.dims)));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        let (s1, s2) = (c1 * h * w, c2 * h * w);
        for i in 0..b {
            data.extend_from_slice(&self.data[i * s1..(i + 1) * s1]);
            data.extend_from_slice(&other.data[i * s2..(i + 1) * s2]);
        }
        Ok(Tensor4 { dims: [b, c1 + c2, h, w], data })
    }

    /// Channels `start..start + len`.
    pub fn slice_channels(&self, start: usize, len: usize) -> Result<Self> {
        let [b, c, h, w] = self.dims;
        if start + len > c || len == 0 {
            return Err(Error::Shape(format!("channel slice {start}..{} of {c}", start + len)));
        }
        let mut data = Vec::with_capacity(b * len * h * w);
        for i in 0..b {
            let o = self.index(i, start, 0, 0);
            data.extend_from_slice(&self.data[o..o + len * h * w]);
        }
        Ok(Tensor4 { dims: [b, len, h, w], data })
    }

    /// Repeats a single-channel tensor `channels` times.
    pub fn broadcast_channels(&self, channels: usize) -> Result<Self> {
        let [b, c, h, w] = self.dims;
        if c != 1 {
            return Err(Error::Shape(format!("broadcast needs 1 channel, got {c}")));
        }
        let mut data = Vec::with_capacity(b * channels * h * w);
        for i in 0..b {
            let p = self.plane(i, 0);
            for _ in 0..channels {
                data.extend_from_slice(p);
            }
        }
        Ok(Tensor4 { dims: [b, channels, h, w], data })
    }

    pub fn batch_item(&self, b: usize) -> Self {
        let n = self.dims[1] * self.dims[2] * self.dims[3];
        Tensor4 { dims: [1, self.dims[1], self.dims[2], self.dims[3]], data: self.data[b * n..(b + 1) * n].to_vec() }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor4<U> {
        Tensor4 { dims: self.dims, data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max)
    }
}
