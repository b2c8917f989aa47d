use super::{GrayImage, SoftMask};
use crate::error::{Error, Result};

/// Normalized 1-D Gaussian sampled at integer offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f32>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::arg(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| (w / total) as f32).collect())
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(image: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let kernel = gaussian_kernel(sigma)?;
    Ok(convolve_separable(image, &kernel))
}

pub(crate) fn convolve_separable(image: &GrayImage, kernel: &[f32]) -> GrayImage {
    let (w, h) = (image.width(), image.height());
    let r = kernel.len() / 2;

    // Horizontal pass into a row buffer padded by replicated edge samples.
    let mut tmp = vec![0.0f32; w * h];
    let mut padded = vec![0.0f32; w + 2 * r];
    for y in 0..h {
        let row = image.row(y);
        for (i, slot) in padded.iter_mut().enumerate() {
            let x = i as isize - r as isize;
            *slot = row[x.clamp(0, w as isize - 1) as usize];
        }
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            *o = kernel
                .iter()
                .zip(&padded[x..x + kernel.len()])
                .map(|(k, v)| k * v)
                .sum();
        }
    }

    // Vertical pass accumulates whole rows.
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (k, &weight) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - r as isize).clamp(0, h as isize - 1) as usize;
            let src = &tmp[sy * w..(sy + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += weight * s;
            }
        }
    }
    GrayImage::from_raw(w, h, out)
}

/// Takes every second pixel starting at (0, 0); output is `floor(w/2) x floor(h/2)`.
pub fn downsample_half(image: &GrayImage) -> Result<GrayImage> {
    let (w, h) = (image.width(), image.height());
    if w < 2 || h < 2 {
        return Err(Error::arg(format!("cannot halve a {w}x{h} image")));
    }
    let (ow, oh) = (w / 2, h / 2);
    let mut data = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        let row = image.row(2 * y);
        data.extend((0..ow).map(|x| row[2 * x]));
    }
    Ok(GrayImage::from_raw(ow, oh, data))
}

/// Bilinear 2x enlargement; output pixel `(x, y)` samples the source at `(x/2, y/2)`.
pub fn upsample_double(image: &GrayImage) -> GrayImage {
    let (w, h) = (image.width(), image.height());
    let (ow, oh) = (2 * w, 2 * h);
    let mut data = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        let sy = y as f32 / 2.0;
        let y0 = (sy.floor() as usize).min(h - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f32;
        for x in 0..ow {
            let sx = x as f32 / 2.0;
            let x0 = (sx.floor() as usize).min(w - 1);
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f32;
            let top = image.get(x0, y0) * (1.0 - fx) + image.get(x1, y0) * fx;
            let bottom = image.get(x0, y1) * (1.0 - fx) + image.get(x1, y1) * fx;
            data.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    GrayImage::from_raw(ow, oh, data)
}

/// Box mean over a `k x k` clamp-to-edge neighbourhood.
pub fn mean_blur(mask: &SoftMask, k: usize) -> Result<SoftMask> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::arg(format!("mean blur window must be odd and positive, got {k}")));
    }
    let (w, h) = (mask.width(), mask.height());
    let r = (k / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let src = mask.data();

    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (-r..=r).map(|d| src[y * w + clamp(x as isize + d, w)]).sum();
        }
    }
    let norm = (k * k) as f32;
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let s: f32 = (-r..=r).map(|d| tmp[clamp(y as isize + d, h) * w + x]).sum();
            out[y * w + x] = (s / norm).clamp(0.0, 1.0);
        }
    }
    SoftMask::new(w, h, out)
}
