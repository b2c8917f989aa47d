use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::brute::MatchSet;
use super::homography::{degenerate_sample, fit_homography, fit_minimal, Homography};
use crate::error::{Error, Result};

pub const MIN_SAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    /// Reprojection error below which a match is an inlier.
    pub inlier_px: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_px: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub homography: Homography,
    /// Surviving matches, in their original order.
    pub inliers: MatchSet,
}

fn inlier_indices(h: &Homography, pairs: &[([f64; 2], [f64; 2])], px: f64) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter(|(_, (pa, pb))| h.transfer_error(*pa, *pb) < px)
        .map(|(i, _)| i)
        .collect()
}

/// Keeps the matches consistent with the best homography found by random 4-point sampling.
///
/// `points_a[m.query_idx]` and `points_b[m.train_idx]` give each match's
/// coordinates. The winning consensus set is refit by least squares and its
/// members re-tested against the refit model; the sample model is kept if the
/// refit collapses below four inliers.
pub fn ransac_filter(
    matches: &MatchSet,
    points_a: &[[f64; 2]],
    points_b: &[[f64; 2]],
    params: &RansacParams,
    seed: u64,
) -> Result<RansacResult> {
    let n = matches.len();
    if n < MIN_SAMPLE {
        return Err(Error::InsufficientMatches { found: n });
    }
    if params.iterations == 0 || !(params.inlier_px > 0.0) {
        return Err(Error::arg("RANSAC needs at least one iteration and a positive threshold"));
    }
    let pairs: Vec<([f64; 2], [f64; 2])> = matches
        .matches
        .iter()
        .map(|m| {
            let pa = points_a.get(m.query_idx).copied();
            let pb = points_b.get(m.train_idx).copied();
            pa.zip(pb).ok_or_else(|| Error::arg("match index outside the keypoint list"))
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Homography, usize)> = None;
    for _ in 0..params.iterations {
        let idx = sample(&mut rng, n, MIN_SAMPLE);
        let pick: [usize; 4] = [idx.index(0), idx.index(1), idx.index(2), idx.index(3)];
        let sa = pick.map(|i| pairs[i].0);
        let sb = pick.map(|i| pairs[i].1);
        if degenerate_sample(&sa) || degenerate_sample(&sb) {
            continue;
        }
        let Some(h) = fit_minimal(&sa, &sb) else {
            continue;
        };
        let count = pairs
            .iter()
            .filter(|(pa, pb)| h.transfer_error(*pa, *pb) < params.inlier_px)
            .count();
        if best.is_none_or(|(_, b)| count > b) {
            best = Some((h, count));
        }
    }
    let (mut homography, count) = best.ok_or(Error::NoConsensus)?;
    if count < MIN_SAMPLE {
        return Err(Error::NoConsensus);
    }
    let mut inliers = inlier_indices(&homography, &pairs, params.inlier_px);

    let (fa, fb): (Vec<_>, Vec<_>) = inliers.iter().map(|&i| pairs[i]).unzip();
    if let Ok(refit) = fit_homography(&fa, &fb) {
        let kept: Vec<usize> = inliers
            .iter()
            .copied()
            .filter(|&i| refit.transfer_error(pairs[i].0, pairs[i].1) < params.inlier_px)
            .collect();
        if kept.len() >= MIN_SAMPLE {
            homography = refit;
            inliers = kept;
        }
    }

    Ok(RansacResult {
        homography,
        inliers: MatchSet {
            matches: inliers.iter().map(|&i| matches.matches[i]).collect(),
            strategy: matches.strategy,
        },
    })
}
