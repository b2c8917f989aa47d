//! Labelled top-X accuracy and the synthetic benchmark corpus.
//!
//! A query counts as correct when at least one of its top X ranked gallery
//! images carries the query's label. Queries with an empty ranking and hits
//! on unlabelled images count as incorrect.

pub mod synth;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::similarity::{rank_matches, top_x, Gallery, MatchConfig, RankedResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelRow {
    pub label: String,
    pub correct: usize,
    pub incorrect: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl LabelRow {
    fn new(label: String, correct: usize, total: usize) -> Self {
        Self {
            label,
            correct,
            incorrect: total - correct,
            total,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelTable {
    pub x: usize,
    /// One row per label, sorted by label.
    pub rows: Vec<LabelRow>,
    pub overall: LabelRow,
}

impl LabelTable {
    /// Column-aligned text in `Label Correct Incorrect Total Accuracy` order.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .chain(["Overall".len(), "Label".len()])
            .max()
            .unwrap_or(5);
        let mut out = format!("Top-{}\n", self.x);
        let _ = writeln!(out, "{:<width$}  {:>7}  {:>9}  {:>5}  {:>8}", "Label", "Correct", "Incorrect", "Total", "Accuracy");
        for r in self.rows.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>9}  {:>5}  {:>8.4}",
                r.label, r.correct, r.incorrect, r.total, r.accuracy
            );
        }
        out
    }
}

/// Tallies per-label hits from precomputed rankings.
pub fn tabulate(gallery: &Gallery, rankings: &[RankedResult], x: usize) -> Result<LabelTable> {
    if x == 0 {
        return Err(Error::arg("x must be at least 1"));
    }
    let mut per_label: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for ranked in rankings {
        let q = gallery.position(&ranked.query).ok_or_else(|| Error::Lookup(ranked.query.clone()))?;
        let Some(label) = gallery.get(q).0.label.as_deref() else {
            continue;
        };
        let hit = top_x(ranked, x).iter().any(|id| {
            gallery
                .position(id)
                .and_then(|i| gallery.get(i).0.label.as_deref())
                .is_some_and(|l| l == label)
        });
        let slot = per_label.entry(label).or_default();
        slot.0 += usize::from(hit);
        slot.1 += 1;
    }
    let rows: Vec<LabelRow> = per_label
        .into_iter()
        .map(|(label, (correct, total))| LabelRow::new(label.to_string(), correct, total))
        .collect();
    let correct = rows.iter().map(|r| r.correct).sum();
    let total = rows.iter().map(|r| r.total).sum();
    Ok(LabelTable {
        x,
        rows,
        overall: LabelRow::new("Overall".to_string(), correct, total),
    })
}

/// Rankings for every labelled image, in gallery order.
pub fn rank_labelled(gallery: &Gallery, cfg: &MatchConfig) -> Result<Vec<RankedResult>> {
    let queries: Vec<&str> = gallery
        .entries()
        .iter()
        .filter(|e| e.label.is_some())
        .map(|e| e.image_id.as_str())
        .collect();
    if queries.is_empty() {
        return Err(Error::arg("no labelled entries to evaluate"));
    }
    queries.par_iter().map(|q| rank_matches(q, gallery, cfg)).collect()
}

/// One table per requested `x`, sharing a single ranking pass.
pub fn evaluate_topx_many(gallery: &Gallery, xs: &[usize], cfg: &MatchConfig) -> Result<Vec<LabelTable>> {
    if xs.contains(&0) {
        return Err(Error::arg("x must be at least 1"));
    }
    let rankings = rank_labelled(gallery, cfg)?;
    xs.iter().map(|&x| tabulate(gallery, &rankings, x)).collect()
}

pub fn evaluate_topx(gallery: &Gallery, x: usize, cfg: &MatchConfig) -> Result<LabelTable> {
    Ok(evaluate_topx_many(gallery, &[x], cfg)?.remove(0))
}
