use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, RgbImage};

/// Anything that can be flattened into per-pixel feature vectors for clustering.
pub trait PixelFeatures {
    fn dims(&self) -> (usize, usize);
    /// Components per pixel.
    fn channels(&self) -> usize;
    /// Row-major `width * height * channels` features in `[0, 1]`.
    fn features(&self) -> Vec<f64>;
}

impl PixelFeatures for GrayImage {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
    fn channels(&self) -> usize {
        1
    }
    fn features(&self) -> Vec<f64> {
        self.data().iter().map(|&v| f64::from(v)).collect()
    }
}

impl PixelFeatures for RgbImage {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
    fn channels(&self) -> usize {
        3
    }
    fn features(&self) -> Vec<f64> {
        self.data().iter().map(|&v| f64::from(v) / 255.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 0,
            max_iters: 100,
            tol: 1e-4,
        }
    }
}

/// Per-pixel cluster assignment produced by [`kmeans_segment`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    /// `k` centroids, each `channels` long.
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster SSE after every assignment step, first entry from the initial centroids.
    pub sse_history: Vec<f64>,
}

impl LabelMap {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Luminance of a centroid: the value itself for gray, luma for RGB.
    pub fn centroid_luminance(&self, cluster: usize) -> f64 {
        match self.centroids[cluster].as_slice() {
            [v] => *v,
            [r, g, b] => 0.299 * r + 0.587 * g + 0.114 * b,
            other => other.iter().sum::<f64>() / other.len() as f64,
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub fn final_sse(&self) -> f64 {
        *self.sse_history.last().expect("at least one assignment")
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Assigns every pixel to its nearest centroid (lowest index on ties); returns SSE.
fn assign(features: &[f64], channels: usize, centroids: &[Vec<f64>], labels: &mut [u32]) -> f64 {
    let mut sse = 0.0;
    for (px, label) in features.chunks_exact(channels).zip(labels.iter_mut()) {
        let (best, d) = centroids
            .iter()
            .enumerate()
            .map(|(i, c)| (i, sq_dist(px, c)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        *label = best as u32;
        sse += d;
    }
    sse
}

/// Lloyd's k-means over per-pixel colour features.
///
/// Centroids start at `k` distinct pixel positions drawn with `seed`. A cluster
/// that empties is re-seeded at the pixel farthest from its own centroid.
/// Iteration stops once no centroid moves by `tol` or more, or after `max_iters`
/// update steps.
pub fn kmeans_segment<I: PixelFeatures + ?Sized>(image: &I, params: &KmeansParams) -> Result<LabelMap> {
    let KmeansParams {
        k,
        seed,
        max_iters,
        tol,
    } = *params;
    if k < 1 {
        return Err(Error::arg("k-means needs k >= 1"));
    }
    let (width, height) = image.dims();
    let n = width * height;
    if k > n {
        return Err(Error::arg(format!("k = {k} exceeds pixel count {n}")));
    }
    let channels = image.channels();
    let features = image.features();
    let pixel = |i: usize| &features[i * channels..(i + 1) * channels];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = rand::seq::index::sample(&mut rng, n, k).into_vec();
    starts.sort_unstable();
    let mut centroids: Vec<Vec<f64>> = starts.iter().map(|&i| pixel(i).to_vec()).collect();

    let mut labels = vec![0u32; n];
    let mut sse_history = vec![assign(&features, channels, &centroids, &mut labels)];

    for _ in 0..max_iters {
        let mut sums = vec![vec![0.0; channels]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l as usize] += 1;
            for (s, v) in sums[l as usize].iter_mut().zip(pixel(i)) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &c), old)| {
                if c == 0 {
                    old.clone()
                } else {
                    s.iter().map(|v| v / c as f64).collect()
                }
            })
            .collect();

        let mut taken: Vec<usize> = Vec::new();
        for cluster in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..n)
                .filter(|i| !taken.contains(i))
                .map(|i| (i, sq_dist(pixel(i), &centroids[labels[i] as usize])))
                .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc })
                .0;
            taken.push(far);
            next[cluster] = pixel(far).to_vec();
        }

        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        sse_history.push(assign(&features, channels, &centroids, &mut labels));
        if shift < tol {
            break;
        }
    }

    Ok(LabelMap {
        width,
        height,
        labels,
        centroids,
        sse_history,
    })
}
