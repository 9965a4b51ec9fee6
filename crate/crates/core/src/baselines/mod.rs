//! Traditional blocking: non-match rules over fields, nearest-neighbor
//! clustering on TF-IDF vectors, and canopies.

mod cluster;
mod levenshtein;
mod rules;

use serde::{Deserialize, Serialize};

pub use cluster::{
    base_order, canopies, canopy_to_blocks, knn_block, tnn_block, CanopyCover, PointSet,
    TfIdfVectors,
};
pub use levenshtein::{levenshtein, levenshtein_at_least};
pub use rules::{
    evaluate_rule, rule_block, rule_preset, Atom, CompiledRule, NonMatchRule, RulePreset,
    TABLE1_PRESETS, TABLE2_PRESETS,
};

pub use crate::eval::CandidatePairSet;

/// Distance used to form canopies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CanopyDistance {
    /// Euclidean distance between KLSH projections.
    Projection { projections: usize, seed: u64 },
    /// Euclidean distance between unit TF-IDF vectors.
    Tfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanopyParams {
    pub shingle_k: usize,
    pub t1: f64,
    pub t2: f64,
    pub distance: CanopyDistance,
    /// Seed for a random base order; ascending record order when absent.
    pub randomize_bases: Option<u64>,
}
