//! Image containers and the raster primitives the rest of the pipeline builds on.
//!
//! Grayscale rasters hold `f32` intensities (nominally in `[0, 1]`), RGB rasters
//! hold interleaved 8-bit samples. Every operation here is pure.

mod filter;
mod pnm;

pub use filter::{downsample_half, gaussian_blur, gaussian_kernel, mean_blur, upsample_double};
pub use pnm::{decode_pnm, encode_pnm, PnmImage};

use crate::error::{Error, Result};

/// Interleaved 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 3)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Real-valued single-channel raster, row-major.
///
/// Images decoded from 8-bit sources hold values in `[0, 1]`. Pyramid levels and
/// difference-of-Gaussian planes reuse this type and may leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image from 8-bit samples, mapping `v` to `v / 255`.
    pub fn from_u8(width: usize, height: usize, samples: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            samples.iter().map(|&v| f32::from(v) / 255.0).collect(),
        )
    }

    /// Evaluates `f(x, y)` over the whole raster.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub(crate) fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Sample as an 8-bit value, `round(v * 255)` clamped to `0..=255`.
    pub fn get_u8(&self, x: usize, y: usize) -> u8 {
        to_u8(self.get(x, y))
    }

    pub fn to_u8_samples(&self) -> Vec<u8> {
        self.data.iter().map(|&v| to_u8(v)).collect()
    }

    pub fn into_soft_mask(self) -> Result<SoftMask> {
        SoftMask::new(self.width, self.height, self.data)
    }
}

/// Per-pixel weight in `[0, 1]` restricting where features may be detected.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl SoftMask {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::arg(format!(
                "mask value {} at index {i} outside [0, 1]",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Value at the pixel nearest to a subpixel coordinate, clamped into the raster.
    pub fn at_rounded(&self, x: f64, y: f64) -> f32 {
        let xi = (x.round().max(0.0) as usize).min(self.width - 1);
        let yi = (y.round().max(0.0) as usize).min(self.height - 1);
        self.get(xi, yi)
    }

    pub(crate) fn as_gray(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.data.clone())
    }
}

/// Luma conversion with weights 0.299, 0.587, 0.114.
pub fn to_gray(image: &RgbImage) -> GrayImage {
    let data = image
        .data
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            (y / 255.0) as f32
        })
        .collect();
    GrayImage::from_raw(image.width, image.height, data)
}

pub(crate) fn to_u8(v: f32) -> u8 {
    // f32::round rounds half away from zero, which is half-up for non-negative input.
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

fn check_dims(width: usize, height: usize, len: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::arg(format!("degenerate dimensions {width}x{height}")));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::arg("image dimensions overflow"))?;
    if len != expected {
        return Err(Error::arg(format!(
            "buffer length {len} does not match {width}x{height}x{channels}"
        )));
    }
    Ok(())
}
