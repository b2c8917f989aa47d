use crate::error::{Error, Result};
use crate::imgcore::{downsample_half, gaussian_blur, upsample_double, GrayImage};

use super::SiftParams;

/// Smallest image side accepted by the detector, and the octave-size floor of
/// the automatic octave count.
pub const MIN_IMAGE_SIDE: usize = 16;

/// Gaussian scale space: per octave `intervals + 3` progressively blurred images.
#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub octaves: Vec<Vec<GrayImage>>,
    pub base_sigma: f64,
    pub intervals: usize,
    pub k_factor: f64,
    /// Multiplier from octave-0 pixel coordinates to input-image coordinates
    /// (0.5 when the input was doubled first).
    pub coordinate_scale: f64,
    /// Input image dimensions.
    pub image_width: usize,
    pub image_height: usize,
}

impl ScaleSpace {
    /// Blur of image `level` inside an octave, in that octave's pixel units.
    pub fn level_sigma(&self, level: f64) -> f64 {
        self.base_sigma * 2f64.powf(level / self.intervals as f64)
    }

    /// Factor from octave `o` pixel coordinates to input-image coordinates.
    pub fn octave_scale(&self, octave: usize) -> f64 {
        (1u64 << octave) as f64 * self.coordinate_scale
    }

    pub fn n_octaves(&self) -> usize {
        self.octaves.len()
    }
}

/// Difference-of-Gaussian planes, `intervals + 2` per octave.
#[derive(Debug, Clone)]
pub struct DoGPyramid {
    pub octaves: Vec<Vec<GrayImage>>,
    pub intervals: usize,
}

/// `floor(log2(min_side / 16)) + 1`.
pub fn auto_octave_count(width: usize, height: usize) -> usize {
    let ratio = width.min(height) / MIN_IMAGE_SIDE;
    ratio.max(1).ilog2() as usize + 1
}

pub fn build_scale_space(image: &GrayImage, params: &SiftParams) -> Result<ScaleSpace> {
    let sigma0 = params.sigma0;
    let s = params.intervals;
    if !(sigma0 > 0.0) {
        return Err(Error::arg(format!("base sigma must be positive, got {sigma0}")));
    }
    if s < 1 {
        return Err(Error::arg("need at least one interval per octave"));
    }
    if image.width() < MIN_IMAGE_SIDE || image.height() < MIN_IMAGE_SIDE {
        return Err(Error::arg(format!(
            "image {}x{} smaller than {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}",
            image.width(),
            image.height()
        )));
    }

    let (seed, assumed_blur, coordinate_scale) = if params.upsample {
        (upsample_double(image), 2.0 * params.init_blur, 0.5)
    } else {
        (image.clone(), params.init_blur, 1.0)
    };
    let auto = auto_octave_count(seed.width(), seed.height());
    let n_octaves = match params.octaves {
        None => auto,
        Some(0) => return Err(Error::arg("octave count must be positive")),
        Some(n) if n > auto => {
            return Err(Error::arg(format!(
                "{n} octaves requested but a {}x{} image supports at most {auto}",
                seed.width(),
                seed.height()
            )))
        }
        Some(n) => n,
    };

    let k = 2f64.powf(1.0 / s as f64);
    let increments: Vec<f64> = (1..s + 3)
        .map(|i| {
            let prev = sigma0 * k.powi(i as i32 - 1);
            let cur = sigma0 * k.powi(i as i32);
            (cur * cur - prev * prev).sqrt()
        })
        .collect();

    let first = if sigma0 > assumed_blur {
        gaussian_blur(&seed, (sigma0 * sigma0 - assumed_blur * assumed_blur).sqrt())?
    } else {
        seed
    };

    let mut octaves: Vec<Vec<GrayImage>> = Vec::with_capacity(n_octaves);
    for o in 0..n_octaves {
        let base = if o == 0 {
            first.clone()
        } else {
            // Level `s` carries twice the octave's base blur.
            downsample_half(&octaves[o - 1][s])?
        };
        let mut levels = Vec::with_capacity(s + 3);
        levels.push(base);
        for inc in &increments {
            let next = gaussian_blur(levels.last().expect("non-empty"), *inc)?;
            levels.push(next);
        }
        octaves.push(levels);
    }

    Ok(ScaleSpace {
        octaves,
        base_sigma: sigma0,
        intervals: s,
        k_factor: k,
        coordinate_scale,
        image_width: image.width(),
        image_height: image.height(),
    })
}

pub fn build_dog(ss: &ScaleSpace) -> DoGPyramid {
    let octaves = ss
        .octaves
        .iter()
        .map(|levels| {
            levels
                .windows(2)
                .map(|pair| {
                    let data = pair[1]
                        .data()
                        .iter()
                        .zip(pair[0].data())
                        .map(|(hi, lo)| hi - lo)
                        .collect();
                    GrayImage::from_raw(pair[0].width(), pair[0].height(), data)
                })
                .collect()
        })
        .collect();
    DoGPyramid {
        octaves,
        intervals: ss.intervals,
    }
}
