//! Interleaved 8-bit raster used by tiling and augmentation.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage, RgbaImage};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl Raster {
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Self {
        let len = width as usize * height as usize * channels as usize;
        Raster { width, height, channels, data: vec![value; len] }
    }

    pub fn from_raw(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if !matches!(channels, 1 | 3 | 4) {
            return Err(Error::InvalidArgument(format!("unsupported channel count {channels}")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::Shape(format!("raster buffer has {} bytes, expected {expected}", data.len())));
        }
        Ok(Raster { width, height, channels, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.data[o..o + c]
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let stride = self.width as usize * self.channels as usize;
        &self.data[y as usize * stride..(y as usize + 1) * stride]
    }

    /// Fills the half-open rectangle `[x0, x1) x [y0, y1)`, clamped to the canvas.
    pub fn fill_rect(&mut self, x0: u32, y0: u32, x1: u32, y1: u32, value: u8) {
        let (x1, y1) = (x1.min(self.width), y1.min(self.height));
        for y in y0..y1 {
            for x in x0..x1 {
                self.pixel_mut(x, y).fill(value);
            }
        }
    }

    /// Copies `src` into `self` with its top-left corner at `(x, y)`.
    pub fn paste(&mut self, src: &Raster, x: u32, y: u32) -> Result<()> {
        if src.channels != self.channels || x + src.width > self.width || y + src.height > self.height {
            return Err(Error::Shape(format!(
                "cannot paste {}x{}x{} at ({x}, {y}) into {}x{}x{}",
                src.width, src.height, src.channels, self.width, self.height, self.channels
            )));
        }
        let row_len = src.width as usize * src.channels as usize;
        for r in 0..src.height {
            let dst = self.offset(x, y + r);
            self.data[dst..dst + row_len].copy_from_slice(src.row(r));
        }
        Ok(())
    }

    pub fn from_dynamic(img: DynamicImage) -> Self {
        let (width, height) = (img.width(), img.height());
        match img {
            DynamicImage::ImageLuma8(g) => Raster { width, height, channels: 1, data: g.into_raw() },
            DynamicImage::ImageRgba8(g) => Raster { width, height, channels: 4, data: g.into_raw() },
            other => Raster { width, height, channels: 3, data: other.into_rgb8().into_raw() },
        }
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        let (w, h, d) = (self.width, self.height, self.data.clone());
        match self.channels {
            1 => DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, d).expect("sized buffer")),
            4 => DynamicImage::ImageRgba8(RgbaImage::from_raw(w, h, d).expect("sized buffer")),
            _ => DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, d).expect("sized buffer")),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_dynamic(image::open(path)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(self.to_dynamic().save(path)?)
    }

    /// Reads only the header to get `(width, height)`.
    pub fn dimensions(path: &Path) -> Result<(u32, u32)> {
        Ok(image::image_dimensions(path)?)
    }
}
