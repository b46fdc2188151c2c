//! Interleaved `f32` image buffers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};

/// Rec. 709 luminance weights.
pub const LUMA: [f32; 3] = [0.2126, 0.7152, 0.0722];

/// A row-major, channel-interleaved image (`data[(y * width + x) * channels + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    /// Wraps `data`, checking that its length matches the dimensions.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels || channels == 0 {
            return Err(Error::BufferLength {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// An image with every value set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn<const C: usize>(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; C],
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * C);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            channels: C,
            data,
        }
    }

    /// Width in pixels.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Height in pixels.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Values per pixel.
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(width, height, channels)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    /// Raw interleaved values.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Mutable raw interleaved values.
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Consumes the image, returning its buffer.
    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// The channel values of pixel `(x, y)`.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Mutable channel values of pixel `(x, y)`.
    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Single value access.
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Per-pixel luminance for 3-channel images; 1-channel images are copied.
    /// Other channel counts average their channels.
    pub fn luminance(&self) -> Image {
        let mut out = Vec::with_capacity(self.width * self.height);
        for px in self.data.chunks_exact(self.channels) {
            out.push(match px.len() {
                1 => px[0],
                3 => LUMA[0] * px[0] + LUMA[1] * px[1] + LUMA[2] * px[2],
                n => px.iter().sum::<f32>() / n as f32,
            });
        }
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data: out,
        }
    }

    /// Per-pixel mean over channels.
    pub fn channel_mean(&self) -> Image {
        let n = self.channels as f32;
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self
                .data
                .chunks_exact(self.channels)
                .map(|px| px.iter().sum::<f32>() / n)
                .collect(),
        }
    }

    /// Copies the `size.0 × size.1` window whose top-left corner is `origin`.
    pub fn crop(&self, origin: (usize, usize), size: (usize, usize)) -> Result<Image> {
        let (x0, y0) = origin;
        let (w, h) = size;
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidValue(format!(
                "crop {w}x{h} at ({x0}, {y0}) exceeds {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        Ok(Image {
            width: w,
            height: h,
            channels: self.channels,
            data,
        })
    }

    /// Rotates by `quarter_turns × 90°` counter-clockwise, then mirrors
    /// horizontally when `flip` is set.
    pub fn rotate_flip(&self, quarter_turns: u8, flip: bool) -> Image {
        let (w, h) = (self.width, self.height);
        let turns = quarter_turns % 4;
        let (ow, oh) = if turns % 2 == 0 { (w, h) } else { (h, w) };
        let mut out = Image::filled(ow, oh, self.channels, 0.0);
        for oy in 0..oh {
            for ox in 0..ow {
                let fx = if flip { ow - 1 - ox } else { ox };
                let (sx, sy) = match turns {
                    0 => (fx, oy),
                    1 => (w - 1 - oy, fx),
                    2 => (w - 1 - fx, h - 1 - oy),
                    _ => (oy, h - 1 - fx),
                };
                out.pixel_mut(ox, oy).copy_from_slice(self.pixel(sx, sy));
            }
        }
        out
    }

    /// Mean absolute difference against an image of the same shape.
    pub fn mean_abs_diff(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other)?;
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a as f64 - *b as f64).abs())
            .sum();
        Ok(sum / self.data.len() as f64)
    }

    /// Errors unless `other` has exactly this image's shape.
    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }

    /// Arithmetic mean of every value.
    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len().max(1) as f64
    }
}

/// Linear (HDR) radiance, three channels, nonnegative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage(Image);

impl LinearImage {
    /// Validates channel count and value range.
    pub fn new(image: Image) -> Result<Self> {
        if image.channels() != 3 {
            return Err(Error::InvalidValue(format!(
                "linear image needs 3 channels, got {}",
                image.channels()
            )));
        }
        if image.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidValue("linear radiance must be finite and >= 0".into()));
        }
        Ok(Self(image))
    }

    /// Multiplies every value by `k >= 0`.
    pub fn scaled(&self, k: f32) -> Self {
        Self(self.0.map(|v| v * k))
    }

    /// Unwraps the buffer.
    pub fn into_inner(self) -> Image {
        self.0
    }
}

impl Deref for LinearImage {
    type Target = Image;
    fn deref(&self) -> &Image {
        &self.0
    }
}

/// Display-encoded image, three channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdrImage(Image);

impl LdrImage {
    /// Validates channel count and value range.
    pub fn new(image: Image) -> Result<Self> {
        if image.channels() != 3 {
            return Err(Error::InvalidValue(format!(
                "LDR image needs 3 channels, got {}",
                image.channels()
            )));
        }
        if image.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidValue("LDR values must lie in [0, 1]".into()));
        }
        Ok(Self(image))
    }

    /// Clamps into `[0, 1]` (NaN becomes 0) and wraps.
    pub fn from_clamped(image: Image) -> Result<Self> {
        Self::new(image.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }))
    }

    /// Crops, keeping the LDR guarantee.
    pub fn crop(&self, origin: (usize, usize), size: (usize, usize)) -> Result<Self> {
        Ok(Self(self.0.crop(origin, size)?))
    }

    /// Rotated/flipped copy.
    pub fn rotate_flip(&self, quarter_turns: u8, flip: bool) -> Self {
        Self(self.0.rotate_flip(quarter_turns, flip))
    }

    /// Unwraps the buffer.
    pub fn into_inner(self) -> Image {
        self.0
    }
}

impl Deref for LdrImage {
    type Target = Image;
    fn deref(&self) -> &Image {
        &self.0
    }
}
