use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One correspondence from descriptor set A to descriptor set B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureMatch {
    pub query_idx: usize,
    pub train_idx: usize,
    /// Euclidean descriptor distance.
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Nn,
    #[default]
    Mnn,
    Nndr,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Nn => "nn",
            Strategy::Mnn => "mnn",
            Strategy::Nndr => "nndr",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" => Ok(Strategy::Nn),
            "mnn" => Ok(Strategy::Mnn),
            "nndr" => Ok(Strategy::Nndr),
            other => Err(Error::Config(format!("unknown match strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchSet {
    pub matches: Vec<FeatureMatch>,
    pub strategy: Strategy,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }
}

#[inline]
pub fn squared_distance(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    // Eight independent lanes so the loop vectorizes.
    let mut acc = [0.0f32; 8];
    let (ca, ra) = a.split_at(a.len() - a.len() % 8);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(8).zip(cb.chunks_exact(8)) {
        for i in 0..8 {
            let d = x[i] - y[i];
            acc[i] += d * d;
        }
    }
    let tail: f32 = ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum();
    acc.iter().sum::<f32>() + tail
}

pub fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    f64::from(squared_distance(a, b)).sqrt()
}

/// Row-major `|A| x |B|` squared distances.
fn distance_table<D: AsRef<[f32]>>(a: &[D], b: &[D]) -> Vec<f32> {
    let mut table = Vec::with_capacity(a.len() * b.len());
    for da in a {
        let da = da.as_ref();
        table.extend(b.iter().map(|db| squared_distance(da, db.as_ref())));
    }
    table
}

/// Index of the smallest value, lowest index on ties.
fn argmin(values: impl Iterator<Item = f32>) -> (usize, f32) {
    values
        .enumerate()
        .fold((0, f32::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
}

/// Brute-force nearest neighbour in B for every descriptor in A.
pub fn match_nn<D: AsRef<[f32]>>(a: &[D], b: &[D]) -> Result<MatchSet> {
    if b.is_empty() {
        return Err(Error::arg("nearest-neighbour matching needs a non-empty train set"));
    }
    let table = distance_table(a, b);
    let matches = table
        .chunks_exact(b.len())
        .enumerate()
        .map(|(q, row)| {
            let (t, d2) = argmin(row.iter().copied());
            FeatureMatch {
                query_idx: q,
                train_idx: t,
                distance: f64::from(d2).sqrt(),
            }
        })
        .collect();
    Ok(MatchSet {
        matches,
        strategy: Strategy::Nn,
    })
}

/// Matches that are each other's nearest neighour in both directions.
pub fn match_mnn<D: AsRef<[f32]>>(a: &[D], b: &[D]) -> Result<MatchSet> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("mutual matching needs non-empty descriptor sets"));
    }
    let (na, nb) = (a.len(), b.len());
    let table = distance_table(a, b);
    let forward: Vec<(usize, f32)> = table
        .chunks_exact(nb)
        .map(|row| argmin(row.iter().copied()))
        .collect();
    let backward: Vec<usize> = (0..nb)
        .map(|t| argmin((0..na).map(|q| table[q * nb + t])).0)
        .collect();
    let matches = forward
        .iter()
        .enumerate()
        .filter(|&(q, &(t, _))| backward[t] == q)
        .map(|(q, &(t, d2))| FeatureMatch {
            query_idx: q,
            train_idx: t,
            distance: f64::from(d2).sqrt(),
        })
        .collect();
    Ok(MatchSet {
        matches,
        strategy: Strategy::Mnn,
    })
}

/// Nearest neighbour kept only when `d1 < ratio * d2`.
pub fn match_nndr<D: AsRef<[f32]>>(a: &[D], b: &[D], ratio: f64) -> Result<MatchSet> {
    if b.len() < 2 {
        return Err(Error::arg("ratio test needs at least two train descriptors"));
    }
    let mut matches = Vec::new();
    for (q, da) in a.iter().enumerate() {
        let da = da.as_ref();
        let (mut best, mut d1, mut d2) = (0usize, f32::INFINITY, f32::INFINITY);
        for (t, db) in b.iter().enumerate() {
            let d = squared_distance(da, db.as_ref());
            if d < d1 {
                d2 = d1;
                d1 = d;
                best = t;
            } else if d < d2 {
                d2 = d;
            }
        }
        let (d1, d2) = (f64::from(d1).sqrt(), f64::from(d2).sqrt());
        if d1 < ratio * d2 {
            matches.push(FeatureMatch {
                query_idx: q,
                train_idx: best,
                distance: d1,
            });
        }
    }
    Ok(MatchSet {
        matches,
        strategy: Strategy::Nndr,
    })
}

pub fn match_with<D: AsRef<[f32]>>(strategy: Strategy, a: &[D], b: &[D], ratio: f64) -> Result<MatchSet> {
    match strategy {
        Strategy::Nn => match_nn(a, b),
        Strategy::Mnn => match_mnn(a, b),
        Strategy::Nndr => match_nndr(a, b, ratio),
    }
}
