//! Deterministic stand-in corpus: textured ellipses ("beaks") photographed
//! under random similarity transforms, always next to the same dark nozzle.
//!
//! Layout written by [`generate_synthetic_benchmark`]:
//!
//! ```text
//! out/images/clipNNNN_0.pgm   one view per clip, numbering shuffled
//! out/background.pgm          the empty scene, nozzle only
//! out/labels.csv              filename,label
//! ```

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imgcore::{encode_pnm, GrayImage, PnmImage};
use crate::seed::stage_seed;
use crate::similarity::{clip_id_of, DatasetIndex, Entry, FEATURE_EXT};

pub const DEFAULT_WIDTH: usize = 256;
pub const DEFAULT_HEIGHT: usize = 192;
const WHITE: f64 = 245.0;
const NOISE_SIGMA: f64 = 2.0;
const TEXTURE_MID: f64 = 105.0;
const TEXTURE_SPAN: f64 = 60.0;
/// Fixed seed for the nozzle pattern, shared by every corpus.
const NOZZLE_SEED: u64 = 0x6e6f_7a7a_6c65;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Spot {
    u: f64,
    v: f64,
    sigma: f64,
    amp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stripe {
    /// Unit normal of the stripe centre line `n . p = offset`.
    nx: f64,
    ny: f64,
    offset: f64,
    sigma: f64,
    amp: f64,
}

/// Smooth random marking pattern in object coordinates, values in (45, 165).
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    base: f64,
    spots: Vec<Spot>,
    stripes: Vec<Stripe>,
}

impl Texture {
    /// Spots and stripes scattered over `[-extent_u, extent_u] x [-extent_v, extent_v]`.
    pub fn random<R: Rng>(rng: &mut R, extent_u: f64, extent_v: f64, n_spots: usize, n_stripes: usize) -> Self {
        let signed = |rng: &mut R, lo: f64, hi: f64| {
            let m = rng.random_range(lo..hi);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        };
        let base = rng.random_range(-10.0..10.0);
        let spots = (0..n_spots)
            .map(|_| Spot {
                u: rng.random_range(-extent_u..extent_u),
                v: rng.random_range(-extent_v..extent_v),
                sigma: rng.random_range(2.5..6.0),
                amp: signed(rng, 40.0, 100.0),
            })
            .collect();
        let stripes = (0..n_stripes)
            .map(|_| {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
                Stripe {
                    nx: theta.cos(),
                    ny: theta.sin(),
                    offset: rng.random_range(-0.7..0.7) * extent_v,
                    sigma: rng.random_range(1.5..3.0),
                    amp: signed(rng, 40.0, 80.0),
                }
            })
            .collect();
        Self { base, spots, stripes }
    }

    /// Intensity on the 0..255 scale.
    pub fn sample(&self, u: f64, v: f64) -> f64 {
        let mut sum = self.base;
        for s in &self.spots {
            let d2 = (u - s.u).powi(2) + (v - s.v).powi(2);
            let cut = 4.0 * s.sigma;
            if d2 < cut * cut {
                sum += s.amp * (-d2 / (2.0 * s.sigma * s.sigma)).exp();
            }
        }
        for s in &self.stripes {
            let d = s.nx * u + s.ny * v - s.offset;
            if d.abs() < 4.0 * s.sigma {
                sum += s.amp * (-d * d / (2.0 * s.sigma * s.sigma)).exp();
            }
        }
        TEXTURE_MID + TEXTURE_SPAN * (sum / TEXTURE_SPAN).tanh()
    }
}

/// Object-to-image similarity: `p = scale * R(angle) * u + (tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewTransform {
    pub angle: f64,
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

impl ViewTransform {
    pub fn forward(&self, u: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [
            self.scale * (c * u[0] - s * u[1]) + self.tx,
            self.scale * (s * u[0] + c * u[1]) + self.ty,
        ]
    }

    pub fn inverse(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        let (x, y) = ((p[0] - self.tx) / self.scale, (p[1] - self.ty) / self.scale);
        [c * x + s * y, -s * x + c * y]
    }
}

/// Normalized elliptical radius of object point `u`.
fn ellipse_rho(u: [f64; 2], axes: (f64, f64)) -> f64 {
    ((u[0] / axes.0).powi(2) + (u[1] / axes.1).powi(2)).sqrt()
}

/// The textured ellipse on a white field, 0..255 scale, no noise.
pub fn render_subject(texture: &Texture, axes: (f64, f64), view: &ViewTransform, width: usize, height: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let u = view.inverse([x as f64, y as f64]);
            let rho = ellipse_rho(u, axes);
            // Approximate signed distance to the outline in pixels, for a 1 px soft edge.
            let grad = ((u[0] / (axes.0 * axes.0)).powi(2) + (u[1] / (axes.1 * axes.1)).powi(2)).sqrt() / rho.max(1e-12);
            let dist = (1.0 - rho) / grad.max(1e-12) * view.scale;
            let alpha = (dist + 0.5).clamp(0.0, 1.0);
            let v = if alpha > 0.0 {
                alpha * texture.sample(u[0], u[1]) + (1.0 - alpha) * WHITE
            } else {
                WHITE
            };
            out.push(v);
        }
    }
    out
}

/// Fixed dark rectangle with lighter fittings, drawn near the top of every frame.
/// Individual fittings vary in brightness from frame to frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Nozzle {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    spots: Vec<Spot>,
}

impl Nozzle {
    pub fn for_frame(width: usize, height: usize) -> Self {
        let (x0, x1) = (width / 16, width * 15 / 16);
        let (y0, y1) = (height / 32, height / 4);
        let mut rng = ChaCha8Rng::seed_from_u64(NOZZLE_SEED);
        // One fitting per cell, jittered, so they stay separate blobs.
        let cell = 11usize;
        let mut spots = Vec::new();
        for cy in 0..(y1 - y0) / cell {
            for cx in 0..(x1 - x0) / cell {
                spots.push(Spot {
                    u: (cx * cell) as f64 + 5.5 + rng.random_range(-1.5..1.5),
                    v: (cy * cell) as f64 + 5.5 + rng.random_range(-1.5..1.5),
                    sigma: rng.random_range(2.2..3.2),
                    amp: rng.random_range(50.0..110.0),
                });
            }
        }
        Self { x0, y0, x1, y1, spots }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    pub fn n_fittings(&self) -> usize {
        self.spots.len()
    }

    fn value(&self, x: usize, y: usize, gains: &[f64]) -> f64 {
        let (u, v) = ((x - self.x0) as f64, (y - self.y0) as f64);
        let lift: f64 = self
            .spots
            .iter()
            .zip(gains)
            .map(|(s, g)| g * s.amp * (-((u - s.u).powi(2) + (v - s.v).powi(2)) / (2.0 * s.sigma * s.sigma)).exp())
            .sum();
        (35.0 + lift).min(160.0)
    }

    /// Paints the nozzle over a 0..255 raster, scaling each fitting by its gain.
    pub fn paint(&self, values: &mut [f64], width: usize, gains: &[f64]) {
        for y in self.y0..self.y1 {
            for x in self.x0..self.x1 {
                values[y * width + x] = self.value(x, y, gains);
            }
        }
    }

    /// Per-frame glare: each fitting is dimmed or brightened by up to 20%.
    fn frame_gains<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.spots.iter().map(|_| rng.random_range(0.8..1.2)).collect()
    }
}

fn finish<R: Rng>(values: &[f64], width: usize, height: usize, rng: &mut R) -> Result<Vec<u8>> {
    let noise = Normal::new(0.0, NOISE_SIGMA).map_err(|e| Error::arg(e.to_string()))?;
    debug_assert_eq!(values.len(), width * height);
    Ok(values
        .iter()
        .map(|v| (v + noise.sample(rng)).round().clamp(0.0, 255.0) as u8)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_individuals: usize,
    pub views_per_individual: usize,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_individuals: 10,
            views_per_individual: 12,
            seed: 0,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
        }
    }
}

/// One rendered frame and its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthView {
    pub label: String,
    pub view: ViewTransform,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub width: usize,
    pub height: usize,
    /// Views in render order (individual-major).
    pub views: Vec<(String, SynthView)>,
    pub background: Vec<u8>,
}

/// Draws a pose keeping the frame probe on the subject and the subject clear of the nozzle.
fn draw_view<R: Rng>(rng: &mut R, axes: (f64, f64), width: usize, height: usize, nozzle: &Nozzle) -> Result<ViewTransform> {
    let unit = width as f64 / DEFAULT_WIDTH as f64;
    let (cx, cy) = (width as f64 / 2.0, height as f64 * 0.66);
    let probe = [(width / 2) as f64, (height * 4 / 5) as f64];
    for _ in 0..10_000 {
        let view = ViewTransform {
            angle: rng.random_range(-20.0f64..=20.0).to_radians(),
            scale: rng.random_range(0.85..=1.2),
            tx: cx + rng.random_range(-24.0..=24.0) * unit,
            ty: cy + rng.random_range(-8.0..=8.0) * unit,
        };
        let (s, c) = view.angle.sin_cos();
        let half_h = view.scale * ((axes.0 * s).powi(2) + (axes.1 * c).powi(2)).sqrt();
        let clear_of_nozzle = view.ty - half_h > nozzle.y1 as f64 + 6.0;
        if clear_of_nozzle && ellipse_rho(view.inverse(probe), axes) < 0.9 {
            return Ok(view);
        }
    }
    Err(Error::arg("frame too small for the synthetic subject"))
}

/// Renders the corpus in memory.
pub fn render_corpus(params: &SynthParams) -> Result<SynthCorpus> {
    if params.n_individuals < 2 || params.views_per_individual < 2 {
        return Err(Error::arg("synthetic benchmark needs at least 2 individuals and 2 views"));
    }
    if params.width < 64 || params.height < 48 {
        return Err(Error::arg("synthetic frames must be at least 64x48"));
    }
    let (w, h) = (params.width, params.height);
    let unit = w as f64 / DEFAULT_WIDTH as f64;
    let nozzle = Nozzle::for_frame(w, h);
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(params.seed, "synth"));

    let total = params.n_individuals * params.views_per_individual;
    let mut clip_numbers: Vec<usize> = (0..total).collect();
    clip_numbers.shuffle(&mut rng);

    let mut views = Vec::with_capacity(total);
    for ind in 0..params.n_individuals {
        let label = format!("ind{ind:02}");
        let axes = (rng.random_range(72.0..84.0) * unit, rng.random_range(42.0..50.0) * unit);
        let n_spots = (axes.0 * axes.1 / 25.0) as usize;
        let texture = Texture::random(&mut rng, axes.0, axes.1, n_spots, 4);
        for _ in 0..params.views_per_individual {
            let view = draw_view(&mut rng, axes, w, h, &nozzle)?;
            let mut values = render_subject(&texture, axes, &view, w, h);
            let gains = nozzle.frame_gains(&mut rng);
            nozzle.paint(&mut values, w, &gains);
            let pixels = finish(&values, w, h, &mut rng)?;
            let clip = clip_numbers[views.len()];
            views.push((
                format!("clip{clip:04}_0"),
                SynthView {
                    label: label.clone(),
                    view,
                    pixels,
                },
            ));
        }
    }
    let mut bg = vec![WHITE; w * h];
    nozzle.paint(&mut bg, w, &vec![1.0; nozzle.n_fittings()]);
    let background = finish(&bg, w, h, &mut rng)?;
    Ok(SynthCorpus {
        width: w,
        height: h,
        views,
        background,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn pgm(w: usize, h: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    let img = GrayImage::from_u8(w, h, pixels)?;
    Ok(encode_pnm(&PnmImage::Gray(img)))
}

/// Writes the corpus under `out_dir` and returns its index. Feature paths point
/// at `out_dir/features/<id>.sift`, which the caller fills in.
pub fn generate_synthetic_benchmark(params: &SynthParams, out_dir: &Path) -> Result<DatasetIndex> {
    let corpus = render_corpus(params)?;
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let features: PathBuf = out_dir.join("features");

    let mut rows: Vec<(String, String)> = Vec::new();
    let mut entries = Vec::new();
    for (id, view) in &corpus.views {
        write(&images.join(format!("{id}.pgm")), &pgm(corpus.width, corpus.height, &view.pixels)?)?;
        rows.push((format!("{id}.pgm"), view.label.clone()));
        entries.push(Entry {
            image_id: id.clone(),
            clip_id: clip_id_of(id).to_string(),
            label: Some(view.label.clone()),
            feature_path: features.join(format!("{id}.{FEATURE_EXT}")),
        });
    }
    write(&out_dir.join("background.pgm"), &pgm(corpus.width, corpus.height, &corpus.background)?)?;

    rows.sort();
    let mut csv = String::from("filename,label\n");
    for (file, label) in &rows {
        csv.push_str(&format!("{file},{label}\n"));
    }
    write(&out_dir.join("labels.csv"), csv.as_bytes())?;
    DatasetIndex::new(entries)
}
