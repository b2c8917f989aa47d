use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use super::kmeans::LabelMap;
use crate::error::{Error, Result};
use crate::imgcore::SoftMask;

/// Hard 0/1 mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::arg(format!(
                "mask buffer of {} does not fit {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::arg("binary mask values must be 0 or 1"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(u8::from(f(x, y)));
            }
        }
        Self::new(width, height, data)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn inverted(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| 1 - v).collect(),
        }
    }

    pub fn to_soft(&self) -> SoftMask {
        SoftMask::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f32::from(v)).collect(),
        )
        .expect("0/1 values are in range")
    }
}

/// How the background cluster of a two-cluster segmentation is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackgroundPolicy {
    /// The cluster with the brighter centroid is background.
    #[default]
    BrighterIsBackground,
    /// The cluster owning most border pixels is background.
    BorderMajority,
}

impl fmt::Display for BackgroundPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackgroundPolicy::BrighterIsBackground => "brighter-is-background",
            BackgroundPolicy::BorderMajority => "border-majority",
        })
    }
}

impl FromStr for BackgroundPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brighter-is-background" => Ok(BackgroundPolicy::BrighterIsBackground),
            "border-majority" => Ok(BackgroundPolicy::BorderMajority),
            other => Err(Error::Config(format!("unknown background policy `{other}`"))),
        }
    }
}

fn brighter_cluster(labels: &LabelMap) -> usize {
    let (l0, l1) = (labels.centroid_luminance(0), labels.centroid_luminance(1));
    if l0 != l1 {
        return if l0 > l1 { 0 } else { 1 };
    }
    // Equal brightness: the larger cluster is the field.
    let sizes = labels.cluster_sizes();
    if sizes[1] > sizes[0] {
        1
    } else {
        0
    }
}

fn border_counts(labels: &LabelMap) -> [usize; 2] {
    let (w, h) = (labels.width, labels.height);
    let mut counts = [0usize; 2];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                counts[labels.label(x, y) as usize] += 1;
            }
        }
    }
    counts
}

/// Maps a two-cluster [`LabelMap`] to background 0 / foreground 1, independent
/// of which index k-means happened to give each cluster.
pub fn normalize_mask(labels: &LabelMap, policy: BackgroundPolicy) -> Result<BinaryMask> {
    if labels.k() != 2 {
        return Err(Error::arg(format!(
            "mask normalization needs k = 2, got {}",
            labels.k()
        )));
    }
    let background = match policy {
        BackgroundPolicy::BrighterIsBackground => brighter_cluster(labels),
        BackgroundPolicy::BorderMajority => {
            let [b0, b1] = border_counts(labels);
            match b0.cmp(&b1) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => brighter_cluster(labels),
            }
        }
    } as u32;
    BinaryMask::new(
        labels.width,
        labels.height,
        labels.labels.iter().map(|&l| u8::from(l != background)).collect(),
    )
}

/// Clears 8-connected components of ones whose area is strictly below `min_area`.
pub fn remove_small_blobs(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut out = mask.data.clone();
    let mut seen = vec![false; w * h];
    let mut component = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if mask.data[start] == 0 || seen[start] {
            continue;
        }
        component.clear();
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            component.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.data[j] == 1 && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if component.len() < min_area {
            for &i in &component {
                out[i] = 0;
            }
        }
    }
    BinaryMask {
        width: w,
        height: h,
        data: out,
    }
}

/// 1.0 where both masks are 1 (their sum is 2), 0.0 elsewhere.
pub fn superimpose(fg: &BinaryMask, bg: &BinaryMask) -> Result<SoftMask> {
    if (fg.width, fg.height) != (bg.width, bg.height) {
        return Err(Error::arg(format!(
            "mask dimensions differ: {}x{} vs {}x{}",
            fg.width, fg.height, bg.width, bg.height
        )));
    }
    SoftMask::new(
        fg.width,
        fg.height,
        fg.data
            .iter()
            .zip(&bg.data)
            .map(|(a, b)| if a + b == 2 { 1.0 } else { 0.0 })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn label_map(w: usize, h: usize, labels: Vec<u32>, centroids: [f64; 2]) -> LabelMap {
        LabelMap {
            width: w,
            height: h,
            labels,
            centroids: centroids.iter().map(|&c| vec![c]).collect(),
            sse_history: vec![0.0],
        }
    }

    /// Independent flood-fill reference: component areas keyed by a representative pixel.
    fn component_areas(mask: &BinaryMask) -> Vec<usize> {
        let (w, h) = (mask.width, mask.height);
        let mut label = vec![usize::MAX; w * h];
        let mut areas = Vec::new();
        for s in 0..w * h {
            if mask.data()[s] == 0 || label[s] != usize::MAX {
                continue;
            }
            let id = areas.len();
            let mut stack = vec![s];
            label[s] = id;
            let mut area = 0;
            while let Some(i) = stack.pop() {
                area += 1;
                let (x, y) = (i % w, i / w);
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let j = ny * w + nx;
                        if mask.data()[j] == 1 && label[j] == usize::MAX {
                            label[j] = id;
                            stack.push(j);
                        }
                    }
                }
            }
            areas.push(area);
        }
        areas
    }

    #[test]
    fn brighter_centroid_is_background() {
        let m = label_map(2, 1, vec![0, 1], [0.1, 0.9]);
        let mask = normalize_mask(&m, BackgroundPolicy::BrighterIsBackground).unwrap();
        assert_eq!(mask.data(), &[1, 0]);
    }

    #[test]
    fn border_majority_marks_blob() {
        // 5x5 white field with a dark 3x3 centre; the blob is the bright-labelled cluster
        // here to show border-majority ignores brightness.
        let labels: Vec<u32> = (0..25)
            .map(|i| {
                let (x, y) = (i % 5, i / 5);
                u32::from((1..4).contains(&x) && (1..4).contains(&y))
            })
            .collect();
        let m = label_map(5, 5, labels, [0.2, 0.95]);
        let mask = normalize_mask(&m, BackgroundPolicy::BorderMajority).unwrap();
        assert_eq!(mask.count_ones(), 9);
        assert_eq!(mask.get(2, 2), 1);
        assert_eq!(mask.get(0, 0), 0);
    }

    #[test]
    fn permutation_invariant() {
        let labels = vec![0, 0, 1, 1, 0, 1];
        let a = label_map(3, 2, labels.clone(), [0.8, 0.3]);
        let b = label_map(3, 2, labels.iter().map(|l| 1 - l).collect(), [0.3, 0.8]);
        for policy in [BackgroundPolicy::BrighterIsBackground, BackgroundPolicy::BorderMajority] {
            assert_eq!(normalize_mask(&a, policy).unwrap(), normalize_mask(&b, policy).unwrap());
        }
    }

    #[test]
    fn normalize_requires_two_clusters() {
        let mut m = label_map(1, 1, vec![0], [0.0, 1.0]);
        m.centroids.push(vec![0.5]);
        assert!(normalize_mask(&m, BackgroundPolicy::default()).is_err());
    }

    #[test]
    fn blob_threshold_is_strict() {
        let three = BinaryMask::from_fn(6, 6, |x, y| y == 2 && (1..4).contains(&x)).unwrap();
        assert_eq!(remove_small_blobs(&three, 4).count_ones(), 0);
        let four = BinaryMask::from_fn(6, 6, |x, y| (1..3).contains(&x) && (1..3).contains(&y)).unwrap();
        assert_eq!(remove_small_blobs(&four, 4), four);
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let diag = BinaryMask::from_fn(4, 4, |x, y| x == y).unwrap();
        assert_eq!(remove_small_blobs(&diag, 4), diag);
        assert_eq!(remove_small_blobs(&diag, 5).count_ones(), 0);
    }

    #[test]
    fn only_large_component_survives() {
        // 10-pixel bar plus a 20x25 = 500-pixel block.
        let mask = BinaryMask::from_fn(40, 40, |x, y| {
            (y == 2 && (5..15).contains(&x)) || ((10..30).contains(&x) && (10..35).contains(&y))
        })
        .unwrap();
        let mut areas = component_areas(&mask);
        areas.sort_unstable();
        assert_eq!(areas, vec![10, 500]);
        let out = remove_small_blobs(&mask, 100);
        assert_eq!(component_areas(&out), vec![500]);
        assert_eq!(out.get(7, 2), 0);
        assert_eq!(out.get(20, 20), 1);
    }

    #[test]
    fn superimpose_truth_table() {
        let fg = BinaryMask::new(4, 1, vec![1, 1, 0, 0]).unwrap();
        let bg = BinaryMask::new(4, 1, vec![1, 0, 1, 0]).unwrap();
        assert_eq!(superimpose(&fg, &bg).unwrap().data(), &[1.0, 0.0, 0.0, 0.0]);
        let ones = BinaryMask::new(4, 1, vec![1; 4]).unwrap();
        assert_eq!(superimpose(&fg, &ones).unwrap(), fg.to_soft());
        let zeros = BinaryMask::new(4, 1, vec![0; 4]).unwrap();
        assert!(superimpose(&zeros, &bg).unwrap().data().iter().all(|&v| v == 0.0));
        let small = BinaryMask::new(2, 1, vec![1, 1]).unwrap();
        assert!(superimpose(&fg, &small).is_err());
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
            proptest::collection::vec(prop::bool::weighted(0.45), w * h).prop_map(move |bits| {
                BinaryMask::new(w, h, bits.into_iter().map(u8::from).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn blob_removal_idempotent(mask in arb_mask(), min_area in 0usize..12) {
            let once = remove_small_blobs(&mask, min_area);
            prop_assert_eq!(remove_small_blobs(&once, min_area), once.clone());
            // Zero pixels never become one.
            prop_assert!(mask.data().iter().zip(once.data()).all(|(a, b)| b <= a));
        }

        #[test]
        fn superimpose_support_subset(fg in arb_mask(), seed in any::<u64>()) {
            let bg = BinaryMask::new(fg.width, fg.height,
                (0..fg.data().len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect()).unwrap();
            let s = superimpose(&fg, &bg).unwrap();
            for (i, &v) in s.data().iter().enumerate() {
                if v > 0.0 {
                    prop_assert!(fg.data()[i] == 1 && bg.data()[i] == 1);
                }
            }
        }
    }
}
